"""Rule-based controllers: pursuer PID layer and the scripted evader."""
from __future__ import annotations

import math

from .config import ScenarioConfig
from .physics import DTHETA_MAX_RAD, DV_MAX_MPS, KinematicAction, wrap_angle
from .planning import GuidanceResult
from .world import AgentState, WorldState


def _clamp(v: float, lim: float) -> float:
    return min(max(v, -lim), lim)


def pid_action(agent: AgentState, guidance: GuidanceResult,
               goal: tuple[float, float] | None,
               config: ScenarioConfig) -> KinematicAction:
    """Proportional heading/speed control toward the guidance direction.

    When the planner reports the goal unreachable the straight-line bearing
    serves as fallback. The speed target is v_max, tapering linearly to zero
    at 180 deg of heading error once the error exceeds 90 deg (slow down to
    turn around).
    """
    p = config.control
    if guidance.reachable:
        err = math.atan2(guidance.v_guide[1], guidance.v_guide[0])
    elif goal is not None:
        err = wrap_angle(math.atan2(goal[1] - agent.y_m,
                                    goal[0] - agent.x_m) - agent.theta_rad)
    else:
        err = 0.0
    dtheta = _clamp(p.k_p_heading * err, DTHETA_MAX_RAD)
    v_max = config.v_max_pursuer_mps
    if abs(err) > math.pi / 2.0:
        v_target = v_max * (1.0 - abs(err) / math.pi)
    else:
        v_target = v_max
    dv = _clamp(p.k_p_speed * (v_target - agent.v_mps), DV_MAX_MPS)
    return KinematicAction(dtheta, dv)


def evader_action(world: WorldState, config: ScenarioConfig) -> KinematicAction:
    """Omniscient potential-field flee.

    Inverse-square repulsion from every pursuer within range and from walls
    and obstacles within the margin. Accelerates toward the stage speed cap;
    holds heading when the net push vanishes.
    """
    ev = world.evader
    p = config.control
    fx = 0.0
    fy = 0.0
    for pu in world.pursuers:
        dx = ev.x_m - pu.x_m
        dy = ev.y_m - pu.y_m
        d = math.hypot(dx, dy)
        if d < 1e-9 or d > p.evader_repulsion_range_m:
            continue
        w = 1.0 / (d * d)
        fx += dx / d * w
        fy += dy / d * w

    margin = p.evader_wall_margin_m
    d = max(ev.x_m, 0.05)
    if d < margin:
        fx += 1.0 / (d * d)
    d = max(config.map_width_m - ev.x_m, 0.05)
    if d < margin:
        fx -= 1.0 / (d * d)
    d = max(ev.y_m, 0.05)
    if d < margin:
        fy += 1.0 / (d * d)
    d = max(config.map_height_m - ev.y_m, 0.05)
    if d < margin:
        fy -= 1.0 / (d * d)
    for ob in config.obstacles:
        dx = ev.x_m - ob.center_x_m
        dy = ev.y_m - ob.center_y_m
        dc = math.hypot(dx, dy)
        d = max(dc - ob.radius_m, 0.05)
        if d < margin and dc > 1e-9:
            w = 1.0 / (d * d)
            fx += dx / dc * w
            fy += dy / dc * w

    if math.hypot(fx, fy) < 1e-9:
        err = 0.0  # no push: keep running straight
    else:
        err = wrap_angle(math.atan2(fy, fx) - ev.theta_rad)
    dtheta = _clamp(p.k_p_heading * err, DTHETA_MAX_RAD)
    v_cap = config.stage.evader_v_max_mps
    dv = _clamp(v_cap - ev.v_mps, DV_MAX_MPS)
    return KinematicAction(dtheta, dv)
