"""Grid planning over the belief: A*, plan caching, waypoints, guidance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import ScenarioConfig
from .errors import DegenerateWaypoint
from .sensing import OCCUPIED, BeliefMap


def planning_mask(belief: BeliefMap) -> np.ndarray:
    """Blocked cells for planning: belief-Occupied dilated by one cell (8-way).

    Unknown plans as traversable (optimistic exploration). There is no
    artificial ring at the map border; the physical walls appear here only
    once lidar has marked the boundary cells Occupied. Cached per occupancy
    version on the belief instance.
    """
    cache = belief._mask_cache
    if cache is not None and cache[0] == belief.occ_version:
        return cache[1]
    occ = belief.cells == OCCUPIED
    blocked = occ.copy()
    blocked[1:, :] |= occ[:-1, :]
    blocked[:-1, :] |= occ[1:, :]
    blocked[:, 1:] |= occ[:, :-1]
    blocked[:, :-1] |= occ[:, 1:]
    blocked[1:, 1:] |= occ[:-1, :-1]
    blocked[1:, :-1] |= occ[:-1, 1:]
    blocked[:-1, 1:] |= occ[1:, :-1]
    blocked[:-1, :-1] |= occ[1:, 1:]
    mask = np.ascontiguousarray(blocked, dtype=np.uint8)
    belief._mask_cache = (belief.occ_version, mask)
    return mask


def astar(belief: BeliefMap, start: tuple[float, float],
          goal: tuple[float, float],
          collect_expansions: bool = False):
    """Shortest 8-connected path between the cells containing two points.

    Returns (path_points, cost_m, expansions); path_points are cell centers
    including both endpoints, None with inf cost when unreachable. The start
    cell's own occupancy is ignored; a goal on a blocked cell is unreachable
    (no snapping).
    """
    mask = planning_mask(belief)
    s = belief.cell_of(*start)
    g = belief.cell_of(*goal)
    path, cost, expansions = _kernels.astar_path(
        mask, s, g, belief.resolution_m, collect_expansions)
    if path is None:
        return None, math.inf, expansions
    points = [belief.center_of(ix, iy) for ix, iy in path]
    return points, float(cost), expansions


@dataclass
class PlanCache:
    """Cached A* path for one agent, refreshed sparsely."""

    refresh_interval_steps: int = 3
    goal: tuple[float, float] | None = None
    path_points: list[tuple[float, float]] | None = None
    path_cells: list[tuple[int, int]] | None = None
    cost_m: float = math.inf
    computed_at_step: int = -10 ** 9
    reachable: bool = False

    def needs_refresh(self, step: int, goal: tuple[float, float],
                      belief: BeliefMap) -> bool:
        if self.goal is None or goal != self.goal:
            return True
        if step - self.computed_at_step >= self.refresh_interval_steps:
            return True
        if self.reachable and self.path_cells:
            mask = planning_mask(belief)
            # skip the first cell: the agent may sit on an inflated cell
            for ix, iy in self.path_cells[1:]:
                if mask[iy, ix]:
                    return True
        return False

    def refresh(self, step: int, position: tuple[float, float],
                goal: tuple[float, float], belief: BeliefMap) -> None:
        mask = planning_mask(belief)
        s = belief.cell_of(*position)
        g = belief.cell_of(*goal)
        cells, cost, _ = _kernels.astar_path(mask, s, g, belief.resolution_m,
                                             False)
        self.goal = goal
        self.computed_at_step = step
        if cells is None:
            self.path_cells = None
            self.path_points = None
            self.cost_m = math.inf
            self.reachable = False
        else:
            self.path_cells = cells
            self.path_points = [belief.center_of(ix, iy) for ix, iy in cells]
            self.cost_m = float(cost)
            self.reachable = True

    def ensure(self, step: int, position: tuple[float, float],
               goal: tuple[float, float], belief: BeliefMap) -> None:
        if self.needs_refresh(step, goal, belief):
            self.refresh(step, position, goal, belief)


def extract_waypoint(path_points: list[tuple[float, float]],
                     position: tuple[float, float],
                     lookahead_m: float) -> tuple[float, float]:
    """Farthest path point within the lookahead disc.

    Ties (equal distance within 1e-12) go to the later path index; when every
    point lies beyond the lookahead the first point is returned.
    """
    px, py = position
    best = None
    best_d = -1.0
    for pt in path_points:
        d = math.hypot(pt[0] - px, pt[1] - py)
        if d <= lookahead_m and d >= best_d - 1e-12:
            best = pt
            best_d = max(best_d, d)
    return best if best is not None else path_points[0]


def guidance_vector(position: tuple[float, float], theta: float,
                    waypoint: tuple[float, float]) -> tuple[float, float]:
    """Unit vector toward the waypoint, rotated into the body frame."""
    dx = waypoint[0] - position[0]
    dy = waypoint[1] - position[1]
    n = math.hypot(dx, dy)
    if n < 1e-9:
        raise DegenerateWaypoint("waypoint coincides with the agent position")
    dx /= n
    dy /= n
    c = math.cos(theta)
    s = math.sin(theta)
    # R(-theta): world -> body
    return (c * dx + s * dy, -s * dx + c * dy)


@dataclass(frozen=True)
class GuidanceResult:
    """Local navigation summary fed to observations and the PID layer."""

    reachable: bool
    v_guide: tuple[float, float] = (0.0, 0.0)  # body frame, unit or zero
    waypoint: tuple[float, float] | None = None
    path_cost_m: float | None = None


def compute_guidance(cache: PlanCache, position: tuple[float, float],
                     theta: float, lookahead_m: float) -> GuidanceResult:
    """Waypoint selection + body-frame direction from the cached plan.

    Unreachable goals and degenerate waypoints (agent already on it) yield
    reachable=False with a zero vector; callers fall back to local control.
    """
    if not cache.reachable or not cache.path_points:
        return GuidanceResult(False)
    wp = extract_waypoint(cache.path_points, position, lookahead_m)
    try:
        v = guidance_vector(position, theta, wp)
    except DegenerateWaypoint:
        return GuidanceResult(False, (0.0, 0.0), wp, cache.cost_m)
    return GuidanceResult(True, v, wp, cache.cost_m)


class GeodesicCache:
    """Goal-rooted distance fields over the planning mask.

    Keyed by (goal cell, occupancy version): Unknown->Free transitions never
    change traversability (Unknown already plans as free), so fields stay
    exact until a new Occupied cell appears. Fields from stale versions are
    dropped lazily.
    """

    def __init__(self) -> None:
        self._fields: dict[tuple[int, int], tuple[int, np.ndarray]] = {}

    def field(self, belief: BeliefMap, goal_cell: tuple[int, int]) -> np.ndarray:
        key = goal_cell
        hit = self._fields.get(key)
        if hit is not None and hit[0] == belief.occ_version:
            return hit[1]
        mask = planning_mask(belief)
        fld = _kernels.dijkstra_field(mask, goal_cell, belief.resolution_m)
        self._fields[key] = (belief.occ_version, fld)
        return fld

    def cost(self, belief: BeliefMap, position: tuple[float, float],
             goal: tuple[float, float]) -> float:
        """Geodesic meters from position's cell to goal's cell; inf if cut off.

        The field leaves inflated cells at inf; an agent standing on one gets
        a direct A* fallback (its start cell is exempt from inflation).
        """
        gc = belief.cell_of(*goal)
        pc = belief.cell_of(*position)
        fld = self.field(belief, gc)
        val = float(fld[pc[1], pc[0]])
        if math.isinf(val):
            mask = planning_mask(belief)
            _, cost, _ = _kernels.astar_path(mask, pc, gc,
                                             belief.resolution_m, False)
            return float(cost)
        return val
