"""World state, occupancy rasters, map construction, and spawning."""
from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .config import CircularObstacle, ScenarioConfig
from .errors import ConfigError, GenerationFailed
from .rng import stream_rng

PURSUER = "pursuer"
EVADER = "evader"


@dataclass(frozen=True)
class AgentState:
    """Pose and speed of one agent. Value-semantic; physics returns copies."""

    role: str                    # "pursuer" or "evader"
    agent_id: int                # 0..N-1 for pursuers, -1 for the evader
    x_m: float
    y_m: float
    theta_rad: float             # heading in (-pi, pi]
    v_mps: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x_m, self.y_m)

    def moved_to(self, x: float, y: float) -> "AgentState":
        return replace(self, x_m=x, y_m=y)


@dataclass(frozen=True)
class WorldState:
    """Complete ground-truth simulation state at one step."""

    pursuers: tuple[AgentState, ...]
    evader: AgentState
    step: int = 0
    captured: bool = False
    capture_step: int | None = None

    @property
    def agents(self) -> tuple[AgentState, ...]:
        return self.pursuers + (self.evader,)


# Grid geometry ---------------------------------------------------------------
# Rasters are indexed [iy, ix]; cell (ix, iy) covers
# [ix*res, (ix+1)*res) x [iy*res, (iy+1)*res) with center ((ix+.5)res, (iy+.5)res).

def cell_of(x: float, y: float, resolution: float,
            shape: tuple[int, int]) -> tuple[int, int]:
    """Containing cell (ix, iy), clamped into the grid."""
    ny, nx = shape
    ix = min(max(int(math.floor(x / resolution)), 0), nx - 1)
    iy = min(max(int(math.floor(y / resolution)), 0), ny - 1)
    return (ix, iy)


def center_of(ix: int, iy: int, resolution: float) -> tuple[float, float]:
    return ((ix + 0.5) * resolution, (iy + 0.5) * resolution)


def obstacle_raster(config: ScenarioConfig) -> np.ndarray:
    """uint8 [ny, nx]; 1 where the cell rectangle overlaps any obstacle disc."""
    ny, nx = config.grid_shape
    res = config.grid_resolution_m
    out = np.zeros((ny, nx), dtype=np.uint8)
    xs_lo = np.arange(nx) * res
    ys_lo = np.arange(ny) * res
    for ob in config.obstacles:
        # Distance from disc center to the cell rectangle; overlap iff < r.
        cx = np.clip(ob.center_x_m, xs_lo, xs_lo + res)
        cy = np.clip(ob.center_y_m, ys_lo, ys_lo + res)
        dx = cx - ob.center_x_m
        dy = cy - ob.center_y_m
        hit = (dx[None, :] ** 2 + dy[:, None] ** 2) < ob.radius_m ** 2
        out[hit] = 1
    return out


def wall_raster(shape: tuple[int, int]) -> np.ndarray:
    """uint8 [ny, nx]; 1 on the one-cell boundary ring."""
    ny, nx = shape
    out = np.zeros((ny, nx), dtype=np.uint8)
    out[0, :] = 1
    out[-1, :] = 1
    out[:, 0] = 1
    out[:, -1] = 1
    return out


def truth_blocked_raster(config: ScenarioConfig) -> np.ndarray:
    """Ground-truth blocked cells: obstacles plus the boundary wall ring."""
    out = obstacle_raster(config)
    out |= wall_raster(config.grid_shape)
    return out


def free_space_connected(config: ScenarioConfig) -> bool:
    """True iff all non-blocked cells form one 4-connected component."""
    blocked = truth_blocked_raster(config)
    free = blocked == 0
    total = int(free.sum())
    if total == 0:
        return False
    ny, nx = free.shape
    seed = np.argwhere(free)[0]
    seen = np.zeros_like(free, dtype=bool)
    stack = [(int(seed[0]), int(seed[1]))]
    seen[seed[0], seed[1]] = True
    count = 0
    while stack:
        iy, ix = stack.pop()
        count += 1
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            y2, x2 = iy + dy, ix + dx
            if 0 <= y2 < ny and 0 <= x2 < nx and free[y2, x2] and not seen[y2, x2]:
                seen[y2, x2] = True
                stack.append((y2, x2))
    return count == total


# Map construction ------------------------------------------------------------

def build_training_map(**overrides) -> ScenarioConfig:
    """The fixed 10 m x 10 m training scenario with four circular obstacles."""
    ref = importlib.resources.files("pursuitsim").joinpath("data/train10.yaml")
    d = yaml.safe_load(ref.read_text())
    d.update(overrides)
    return ScenarioConfig.from_dict(d)


def generate_random_map(width_m: float, height_m: float, n_obstacles: int,
                        seed: int, max_attempts: int = 500,
                        **overrides) -> ScenarioConfig:
    """Rejection-sample a connected random scenario.

    Radii are uniform in [0.4, 0.9] m; obstacles keep >= 1.0 m surface gap to
    each other and >= 0.75 m to the walls. Raises GenerationFailed when no
    connected layout is found within max_attempts.
    """
    rng = stream_rng(seed, "map")
    wall_gap = 0.75
    pair_gap = 1.0
    for _ in range(max_attempts):
        obstacles: list[CircularObstacle] = []
        ok = True
        for _ in range(n_obstacles):
            placed = False
            for _ in range(200):
                r = float(rng.uniform(0.4, 0.9))
                x = float(rng.uniform(r + wall_gap, width_m - r - wall_gap))
                y = float(rng.uniform(r + wall_gap, height_m - r - wall_gap))
                good = True
                for ob in obstacles:
                    d = math.hypot(x - ob.center_x_m, y - ob.center_y_m)
                    if d < r + ob.radius_m + pair_gap:
                        good = False
                        break
                if good:
                    obstacles.append(CircularObstacle(x, y, r))
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if not ok:
            continue
        config = ScenarioConfig(map_width_m=width_m, map_height_m=height_m,
                                obstacles=tuple(obstacles), rng_seed=seed,
                                **overrides)
        if free_space_connected(config):
            return config
    raise GenerationFailed(
        f"no connected {width_m}x{height_m} layout with {n_obstacles} obstacles "
        f"after {max_attempts} attempts (seed {seed})")


def default_obstacle_count(width_m: float) -> int:
    """Obstacle count used by the named random map presets."""
    if width_m <= 15.0:
        return 8
    return 14


# Spawning --------------------------------------------------------------------

def _position_free(x: float, y: float, config: ScenarioConfig) -> bool:
    r = config.agent_radius_m
    if not (r <= x <= config.map_width_m - r and r <= y <= config.map_height_m - r):
        return False
    for ob in config.obstacles:
        if math.hypot(x - ob.center_x_m, y - ob.center_y_m) < ob.radius_m + r:
            return False
    return True


def spawn_agents(config: ScenarioConfig, seed: int) -> WorldState:
    """Sample collision-free spawn poses from the 'spawn' stream.

    Agents are sampled in order pursuer 0..N-1 then evader; pairwise clearance
    >= 2 * agent_radius, pursuer-evader distance >= d_spawn_min_m.
    """
    rng = stream_rng(seed, "spawn")
    placed: list[tuple[float, float]] = []
    n_total = config.n_pursuers + 1
    for idx in range(n_total):
        is_evader = idx == config.n_pursuers
        for attempt in range(1000):
            x = float(rng.uniform(0.0, config.map_width_m))
            y = float(rng.uniform(0.0, config.map_height_m))
            if not _position_free(x, y, config):
                continue
            if any(math.hypot(x - px, y - py) < 2 * config.agent_radius_m
                   for px, py in placed):
                continue
            if is_evader and any(
                    math.hypot(x - px, y - py) < config.d_spawn_min_m
                    for px, py in placed):
                continue
            placed.append((x, y))
            break
        else:
            raise GenerationFailed(
                f"could not place agent {idx} after 1000 draws (seed {seed})")
        # headings drawn per agent, after its position settles
    # pi - U[0, 2pi) lands exactly in the canonical (-pi, pi] interval
    headings = [float(math.pi - rng.uniform(0.0, 2.0 * math.pi))
                for _ in range(n_total)]
    pursuers = tuple(
        AgentState(PURSUER, i, placed[i][0], placed[i][1], headings[i], 0.0)
        for i in range(config.n_pursuers))
    evader = AgentState(EVADER, -1, placed[-1][0], placed[-1][1],
                        headings[-1], 0.0)
    return WorldState(pursuers=pursuers, evader=evader)
