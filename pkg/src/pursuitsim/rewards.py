"""Reward terms, the shaping chain pieces, and observation assembly."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CurriculumStage, ScenarioConfig
from .planning import GuidanceResult
from .sensing import FREE, OCCUPIED, UNKNOWN, BeliefMap, LidarScan, LkpRecord
from .world import AgentState

GAMMA = 0.99  # discount used inside the shaping term

SPEED_STATIC_MPS = 0.05


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-agent per-step reward split; total is the exact sum of the parts."""

    r_mission: float
    r_safety: float
    r_guide: float
    r_explore: float
    total: float

    @staticmethod
    def make(r_mission: float, r_safety: float, r_guide: float,
             r_explore: float) -> "RewardBreakdown":
        return RewardBreakdown(r_mission, r_safety, r_guide, r_explore,
                               r_mission + r_safety + r_guide + r_explore)


def mission_reward(captured: bool, clean: bool,
                   stage: CurriculumStage) -> float:
    """Time cost every step; capture pays the (clean) bonus once, team-wide."""
    r = stage.lambda_time
    if captured:
        r += stage.c_clean_cap if clean else stage.c_cap
    return r


def safety_penalty(collided: bool, speed_mps: float,
                   stage: CurriculumStage) -> float:
    r = 0.0
    if collided:
        r -= stage.c_col
    if speed_mps < SPEED_STATIC_MPS:
        r -= stage.c_static
    return r


def potential_reward(cost_prev_m, cost_next_m, stage: CurriculumStage) -> float:
    """lambda_pot * (gamma * phi_new - phi_prev), phi = -geodesic cost.

    Either cost missing or non-finite suspends the chain (returns 0); the
    caller restarts the chain from the fresh cost.
    """
    if cost_prev_m is None or cost_next_m is None:
        return 0.0
    if not (math.isfinite(cost_prev_m) and math.isfinite(cost_next_m)):
        return 0.0
    return stage.lambda_pot * (GAMMA * (-cost_next_m) - (-cost_prev_m))


def alignment_reward(displacement_m: tuple[float, float], dt_s: float,
                     theta_prev_rad: float, v_guide: tuple[float, float],
                     stage: CurriculumStage) -> float:
    """Reward speed along the guidance direction.

    The realized velocity (displacement / dt) is rotated into the body frame
    of the pre-step pose, matching the frame v_guide was computed in. The
    projection is clipped to [0, 1] before scaling by the speed, so moving
    against the guidance is never punished here.
    """
    vx = displacement_m[0] / dt_s
    vy = displacement_m[1] / dt_s
    c = math.cos(theta_prev_rad)
    s = math.sin(theta_prev_rad)
    bx = c * vx + s * vy
    by = -s * vx + c * vy
    dot = bx * v_guide[0] + by * v_guide[1]
    dot = min(max(dot, 0.0), 1.0)
    return stage.lambda_align * dot * math.hypot(bx, by)


def exploration_reward(new_cells: int, progress_m: float, is_exploring: bool,
                       in_approach: bool, stage: CurriculumStage) -> float:
    """Cell discovery plus geodesic progress toward the locked frontier goal.

    Paid only in Exploration mode; the progress term only while approaching.
    """
    if not is_exploring:
        return 0.0
    r = stage.w_cell * new_cells
    if in_approach:
        r += stage.w_prog * max(0.0, progress_m)
    return r


# Observations ---------------------------------------------------------------

def observation_layout(n_pursuers: int) -> list[tuple[str, int]]:
    """Named blocks in order; sizes sum to observation_dim."""
    return [
        ("kinematics", 6),        # x/W, y/H, v/v_max, reserved, cos, sin
        ("lidar_walls", 8),       # ranges / max_range
        ("lidar_teammates", 8),
        ("guidance", 2),          # body-frame unit vector, zero if unreachable
        ("lkp", 3),               # dx/W, dy/H, valid flag; zeros when invalid
        ("belief_patch", 9),      # 3x3 around the agent; unknown 0, free .5, occ 1
        ("agent_onehot", n_pursuers),
    ]


def observation_dim(n_pursuers: int) -> int:
    return 36 + n_pursuers


def build_observation(agent: AgentState, scan: LidarScan,
                      guidance: GuidanceResult, lkp: LkpRecord,
                      belief: BeliefMap, config: ScenarioConfig,
                      agent_index: int) -> np.ndarray:
    w = config.map_width_m
    h = config.map_height_m
    rmax = config.sensing.lidar_max_range_m
    out = np.zeros(observation_dim(config.n_pursuers), dtype=np.float64)
    out[0] = agent.x_m / w
    out[1] = agent.y_m / h
    out[2] = agent.v_mps / config.v_max_pursuer_mps
    out[3] = 0.0  # reserved kinematic slot
    out[4] = math.cos(agent.theta_rad)
    out[5] = math.sin(agent.theta_rad)
    for k in range(8):
        out[6 + k] = scan.wall_ranges_m[k] / rmax
        out[14 + k] = scan.teammate_ranges_m[k] / rmax
    out[22] = guidance.v_guide[0]
    out[23] = guidance.v_guide[1]
    if lkp.valid:
        out[24] = (lkp.x_m - agent.x_m) / w
        out[25] = (lkp.y_m - agent.y_m) / h
        out[26] = 1.0
    ix0, iy0 = belief.cell_of(agent.x_m, agent.y_m)
    ny, nx = belief.shape
    i = 27
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            ix, iy = ix0 + dx, iy0 + dy
            if not (0 <= ix < nx and 0 <= iy < ny):
                out[i] = 1.0  # outside the map reads as occupied
            else:
                code = belief.cells[iy, ix]
                out[i] = 0.0 if code == UNKNOWN else (
                    0.5 if code == FREE else 1.0)
            i += 1
    out[36 + agent_index] = 1.0
    return out
