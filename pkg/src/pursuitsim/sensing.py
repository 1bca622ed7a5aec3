"""Lidar, target detection, shared belief map, and last-known-position."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .config import ScenarioConfig
from .physics import wrap_angle
from .world import AgentState, WorldState, cell_of

# Belief cell codes. Unknown never comes back once a cell is known; Occupied
# may overwrite Free (a wall seen through a gap later resolves), never the
# reverse.
UNKNOWN = 0
FREE = 1
OCCUPIED = 2


class BeliefMap:
    """Team-shared occupancy belief over the scenario grid."""

    def __init__(self, config: ScenarioConfig):
        ny, nx = config.grid_shape
        self.cells = np.zeros((ny, nx), dtype=np.uint8)  # all Unknown
        self.resolution_m = config.grid_resolution_m
        self.occ_version = 0  # bumps whenever any cell becomes Occupied
        self._mask_cache: tuple[int, np.ndarray] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return cell_of(x, y, self.resolution_m, self.cells.shape)

    def center_of(self, ix: int, iy: int) -> tuple[float, float]:
        return ((ix + 0.5) * self.resolution_m, (iy + 0.5) * self.resolution_m)

    def known_fraction(self) -> float:
        return float(np.count_nonzero(self.cells != UNKNOWN)) / self.cells.size

    def copy(self) -> "BeliefMap":
        out = object.__new__(BeliefMap)
        out.cells = self.cells.copy()
        out.resolution_m = self.resolution_m
        out.occ_version = self.occ_version
        out._mask_cache = None
        return out

    # Portable text dump: header line then row-major digit rows.
    def dump_text(self) -> str:
        ny, nx = self.cells.shape
        lines = [f"belief {nx} {ny} {self.resolution_m!r}"]
        for iy in range(ny):
            lines.append("".join(str(int(c)) for c in self.cells[iy]))
        return "\n".join(lines) + "\n"

    @staticmethod
    def load_text(text: str) -> "BeliefMap":
        lines = text.strip().split("\n")
        tag, nx_s, ny_s, res_s = lines[0].split()
        if tag != "belief":
            raise ValueError("not a belief dump")
        nx, ny = int(nx_s), int(ny_s)
        out = object.__new__(BeliefMap)
        out.cells = np.array(
            [[int(ch) for ch in row] for row in lines[1:1 + ny]], dtype=np.uint8)
        if out.cells.shape != (ny, nx):
            raise ValueError("belief dump shape mismatch")
        out.resolution_m = float(res_s)
        out.occ_version = 0
        out._mask_cache = None
        return out


@dataclass(frozen=True)
class LidarScan:
    """Eight ranges per channel, ray k at heading + k*45 deg."""

    wall_ranges_m: tuple[float, ...]      # walls + obstacles
    teammate_ranges_m: tuple[float, ...]  # teammate discs only, no walls


@dataclass(frozen=True)
class TargetDetection:
    visible: bool
    x_m: float = 0.0
    y_m: float = 0.0


@dataclass(frozen=True)
class LkpRecord:
    """Team-shared last known evader position with age-based expiry."""

    x_m: float = 0.0
    y_m: float = 0.0
    age_steps: int = 0
    valid: bool = False

    def aged(self, ttl: int) -> "LkpRecord":
        if not self.valid:
            return self
        age = self.age_steps + 1
        return replace(self, age_steps=age, valid=age <= ttl)


def cast_rays(agent: AgentState, world: WorldState,
              config: ScenarioConfig) -> LidarScan:
    """Two independent 8-ray scans: walls+obstacles, and teammates only."""
    obstacles = np.array(
        [[ob.center_x_m, ob.center_y_m, ob.radius_m] for ob in config.obstacles],
        dtype=np.float64).reshape(-1, 3)
    rmax = config.sensing.lidar_max_range_m
    wall = _kernels.lidar_scan(
        agent.x_m, agent.y_m, agent.theta_rad, obstacles,
        config.map_width_m, config.map_height_m, rmax, True)
    mates = np.array(
        [[p.x_m, p.y_m, config.agent_radius_m]
         for p in world.pursuers if p.agent_id != agent.agent_id],
        dtype=np.float64).reshape(-1, 3)
    team = _kernels.lidar_scan(
        agent.x_m, agent.y_m, agent.theta_rad, mates,
        config.map_width_m, config.map_height_m, rmax, False)
    return LidarScan(tuple(float(v) for v in wall),
                     tuple(float(v) for v in team))


def segment_hits_circle(ax: float, ay: float, bx: float, by: float,
                        cx: float, cy: float, r: float) -> bool:
    """True iff segment AB passes strictly inside the circle."""
    abx = bx - ax
    aby = by - ay
    denom = abx * abx + aby * aby
    if denom < 1e-18:
        s = 0.0
    else:
        s = ((cx - ax) * abx + (cy - ay) * aby) / denom
        s = min(max(s, 0.0), 1.0)
    px = ax + s * abx
    py = ay + s * aby
    return (px - cx) ** 2 + (py - cy) ** 2 < r * r


def detect_target(agent: AgentState, world: WorldState,
                  config: ScenarioConfig) -> TargetDetection:
    """Disc-of-view detection with obstacle occlusion.

    Visible iff the evader is within r_fov, inside the aperture around the
    agent heading, and the sight line crosses no obstacle. Teammates never
    occlude. Tangent contact does not occlude.
    """
    ev = world.evader
    dx = ev.x_m - agent.x_m
    dy = ev.y_m - agent.y_m
    dist = math.hypot(dx, dy)
    if dist > config.r_fov_m:
        return TargetDetection(False)
    aperture = config.sensing.fov_aperture_rad
    if aperture < 2.0 * math.pi and dist > 1e-12:
        bearing = wrap_angle(math.atan2(dy, dx) - agent.theta_rad)
        if abs(bearing) > aperture / 2.0:
            return TargetDetection(False)
    for ob in config.obstacles:
        if segment_hits_circle(agent.x_m, agent.y_m, ev.x_m, ev.y_m,
                               ob.center_x_m, ob.center_y_m, ob.radius_m):
            return TargetDetection(False)
    return TargetDetection(True, ev.x_m, ev.y_m)


def update_belief(belief: BeliefMap, agent: AgentState,
                  scan: LidarScan, config: ScenarioConfig) -> tuple[int, int]:
    """Write one agent's wall-channel scan into the shared belief.

    Returns (new_known, new_occupied) for this call. Bumps occ_version when
    any Occupied cell is written (invalidates planning masks and cached
    distance fields).
    """
    ranges = np.asarray(scan.wall_ranges_m, dtype=np.float64)
    new_known, new_occ = _kernels.belief_update_rays(
        belief.cells, agent.x_m, agent.y_m, agent.theta_rad, ranges,
        config.sensing.lidar_max_range_m, belief.resolution_m)
    if new_occ:
        belief.occ_version += 1
    return int(new_known), int(new_occ)


def update_lkp(lkp: LkpRecord, detections: list[TargetDetection],
               pursuers: tuple[AgentState, ...],
               config: ScenarioConfig) -> LkpRecord:
    """Advance the team LKP by one step.

    A fresh detection resets it. Otherwise it ages out after ttl steps, and
    is dropped immediately when any pursuer stands within the arrival radius
    of the recorded point while the evader is not seen there (the spot is
    checked and cold).
    """
    for det in detections:
        if det.visible:
            return LkpRecord(det.x_m, det.y_m, 0, True)
    lkp = lkp.aged(config.sensing.lkp_ttl_steps)
    if lkp.valid:
        r_arr = config.sensing.lkp_arrival_radius_m
        for p in pursuers:
            if math.hypot(p.x_m - lkp.x_m, p.y_m - lkp.y_m) <= r_arr:
                return replace(lkp, valid=False)
    return lkp


def reachable_unknown_mask(belief: BeliefMap) -> np.ndarray:
    """Unknown cells the target could occupy and a scan could still clear.

    Three filters, all belief-side: the cell must be Unknown, it must lie
    outside the one-cell dilation of Occupied (a disc-shaped target cannot
    center itself hard against an obstacle, and obstacle interiors or rim
    slivers can never be scanned anyway), and it must be 4-connected to known
    free space through non-Occupied cells. Without these, exploration locks
    onto obstacle rims whose last shadowed slivers take unbounded time to
    observe, and sweeps aim at cells no ray can ever reach. Returns a bool
    [ny, nx] mask.
    """
    from scipy import ndimage  # local import keeps module load light

    occ = belief.cells == OCCUPIED
    inflated = occ.copy()
    inflated[:-1, :] |= occ[1:, :]
    inflated[1:, :] |= occ[:-1, :]
    inflated[:, :-1] |= occ[:, 1:]
    inflated[:, 1:] |= occ[:, :-1]
    inflated[:-1, :-1] |= occ[1:, 1:]
    inflated[:-1, 1:] |= occ[1:, :-1]
    inflated[1:, :-1] |= occ[:-1, 1:]
    inflated[1:, 1:] |= occ[:-1, :-1]

    labels, n = ndimage.label(~occ)
    if n == 0:
        return np.zeros_like(occ, dtype=bool)
    free_labels = np.unique(labels[belief.cells == FREE])
    free_labels = free_labels[free_labels != 0]
    reachable = np.isin(labels, free_labels)
    return (belief.cells == UNKNOWN) & ~inflated & reachable


def unknown_in_disc(unknown_mask: np.ndarray, resolution: float,
                    center: tuple[float, float], radius: float) -> bool:
    """Any masked cell whose center lies within radius of the point?"""
    ny, nx = unknown_mask.shape
    ix_lo, ix_hi, iy_lo, iy_hi = _disc_bounds(center, radius, resolution,
                                              nx, ny)
    if ix_lo > ix_hi or iy_lo > iy_hi:
        return False
    sub = unknown_mask[iy_lo:iy_hi + 1, ix_lo:ix_hi + 1]
    if not sub.any():
        return False
    xs = (np.arange(ix_lo, ix_hi + 1) + 0.5) * resolution - center[0]
    ys = (np.arange(iy_lo, iy_hi + 1) + 0.5) * resolution - center[1]
    within = (xs[None, :] ** 2 + ys[:, None] ** 2) <= radius * radius
    return bool((sub & within).any())


def nearest_unknown_in_disc(unknown_mask: np.ndarray, resolution: float,
                            center: tuple[float, float], radius: float,
                            from_point: tuple[float, float]) -> tuple[int, int] | None:
    """Closest masked cell (by center distance to from_point) in the disc.

    Ties break on row-major cell order. None when the disc holds none.
    """
    ny, nx = unknown_mask.shape
    ix_lo, ix_hi, iy_lo, iy_hi = _disc_bounds(center, radius, resolution,
                                              nx, ny)
    best = None
    best_d = math.inf
    for iy in range(iy_lo, iy_hi + 1):
        for ix in range(ix_lo, ix_hi + 1):
            if not unknown_mask[iy, ix]:
                continue
            px = (ix + 0.5) * resolution
            py = (iy + 0.5) * resolution
            if math.hypot(px - center[0], py - center[1]) > radius:
                continue
            d = math.hypot(px - from_point[0], py - from_point[1])
            if d < best_d - 1e-12:
                best = (ix, iy)
                best_d = d
    return best


def _disc_bounds(center, radius, resolution, nx, ny):
    ix_lo = max(int(math.floor((center[0] - radius) / resolution - 0.5)), 0)
    ix_hi = min(int(math.ceil((center[0] + radius) / resolution + 0.5)), nx - 1)
    iy_lo = max(int(math.floor((center[1] - radius) / resolution - 0.5)), 0)
    iy_hi = min(int(math.ceil((center[1] + radius) / resolution + 0.5)), ny - 1)
    return ix_lo, ix_hi, iy_lo, iy_hi
