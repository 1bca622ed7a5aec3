"""Frontier extraction and directional sub-goal allocation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .config import ScenarioConfig
from .errors import InfeasibleMatrix, NoFrontiers
from .physics import wrap_angle
from .sensing import FREE, UNKNOWN, BeliefMap, reachable_unknown_mask


@dataclass(frozen=True)
class FrontierCluster:
    """A connected group of frontier cells, represented by one member cell."""

    cell: tuple[int, int]              # snapped representative (ix, iy)
    position_m: tuple[float, float]    # its center point
    size: int                          # member cell count


def extract_frontiers(belief: BeliefMap, min_cluster_cells: int = 3,
                      unknown_mask: np.ndarray | None = None) -> list[FrontierCluster]:
    """Free cells bordering observable Unknown, clustered 8-connected.

    Unknown pockets sealed off by Occupied cells can never be scanned and are
    not frontier material; callers that already computed the observable mask
    pass it in, otherwise it is derived here. Clusters smaller than
    min_cluster_cells are noise and dropped. The representative is the member
    cell closest to the cluster centroid (row-major lowest on ties). Cluster
    order follows scipy's label order, which is scan-order deterministic.
    """
    cells = belief.cells
    free = cells == FREE
    if unknown_mask is None:
        unknown_mask = reachable_unknown_mask(belief)
    unknown = unknown_mask
    adj = np.zeros_like(unknown)
    adj[:-1, :] |= unknown[1:, :]
    adj[1:, :] |= unknown[:-1, :]
    adj[:, :-1] |= unknown[:, 1:]
    adj[:, 1:] |= unknown[:, :-1]
    mask = free & adj
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=np.uint8))
    out: list[FrontierCluster] = []
    res = belief.resolution_m
    for lid in range(1, n + 1):
        members = np.argwhere(labels == lid)  # (iy, ix) rows, row-major order
        if len(members) < min_cluster_cells:
            continue
        cx = (members[:, 1].mean() + 0.5) * res
        cy = (members[:, 0].mean() + 0.5) * res
        best = None
        best_d = math.inf
        for iy, ix in members:
            px = (ix + 0.5) * res
            py = (iy + 0.5) * res
            d = math.hypot(px - cx, py - cy)
            if d < best_d:
                best = (int(ix), int(iy))
                best_d = d
        out.append(FrontierCluster(best, belief.center_of(*best), len(members)))
    return out


def directional_fps(frontiers: list[FrontierCluster],
                    agent_positions: list[tuple[float, float]],
                    k: int, phi_suppress_rad: float,
                    preselected: tuple[tuple[float, float], ...] = ()):
    """Farthest-point selection with sector suppression.

    The seed maximizes min distance to the agent positions; every later pick
    maximizes min distance to already-selected candidates (ties keep the
    lowest frontier index). A pick whose bearing from the team centroid lies
    strictly within phi_suppress of any taken bearing (selected candidates
    and preselected points such as goals locked by other agents) is skipped.
    Skipped picks re-enter in skip order, flagged relaxed, if the quota is
    otherwise unmet.

    Returns (selected, relaxed_flags, suppressed) where suppressed lists the
    skipped clusters in skip order.
    """
    if not frontiers:
        return [], [], []
    n_ag = len(agent_positions)
    cx = sum(p[0] for p in agent_positions) / n_ag
    cy = sum(p[1] for p in agent_positions) / n_ag

    def bearing_of(pt: tuple[float, float]) -> float:
        # a point exactly on the centroid gets bearing 0.0 by atan2(0, 0)
        return math.atan2(pt[1] - cy, pt[0] - cx)

    taken_bearings = [bearing_of(p) for p in preselected]
    d_agents = [
        min(math.hypot(f.position_m[0] - ax, f.position_m[1] - ay)
            for ax, ay in agent_positions)
        for f in frontiers]
    d_sel = [math.inf] * len(frontiers)
    pool = list(range(len(frontiers)))
    selected_idx: list[int] = []
    relaxed: list[bool] = []
    skipped: list[int] = []
    while pool and len(selected_idx) < k:
        key = d_sel if selected_idx else d_agents
        best_i = pool[0]
        best_v = key[pool[0]]
        for i in pool[1:]:
            if key[i] > best_v:
                best_i = i
                best_v = key[i]
        pool.remove(best_i)
        b = bearing_of(frontiers[best_i].position_m)
        if any(abs(wrap_angle(b - tb)) < phi_suppress_rad
               for tb in taken_bearings):
            skipped.append(best_i)
            continue
        selected_idx.append(best_i)
        relaxed.append(False)
        taken_bearings.append(b)
        fx, fy = frontiers[best_i].position_m
        for i in pool:
            d = math.hypot(frontiers[i].position_m[0] - fx,
                           frontiers[i].position_m[1] - fy)
            if d < d_sel[i]:
                d_sel[i] = d
    for i in skipped:
        if len(selected_idx) >= k:
            break
        selected_idx.append(i)
        relaxed.append(True)
    return ([frontiers[i] for i in selected_idx], relaxed,
            [frontiers[i] for i in skipped])


def kinematic_cost(position: tuple[float, float], theta: float,
                   goal: tuple[float, float], v_max: float,
                   w_angle: float) -> float:
    """Travel-time surrogate: straight-line time plus a turn penalty.

    Zero-range goals contribute no turn term (bearing undefined).
    """
    dx = goal[0] - position[0]
    dy = goal[1] - position[1]
    rng = math.hypot(dx, dy)
    if rng < 1e-12:
        dtheta = 0.0
    else:
        dtheta = abs(wrap_angle(math.atan2(dy, dx) - theta))
    return rng / v_max + w_angle * dtheta


# Assignment ------------------------------------------------------------------

_BIG = 1.0e9  # internal stand-in for forbidden (non-finite) entries


def _jv_solve(a: list[list[float]], rows: int, cols: int):
    """Jonker-Volgenant shortest augmenting paths; rows <= cols.

    Returns (total, row_to_col).
    """
    u = [0.0] * (rows + 1)
    v = [0.0] * (cols + 1)
    p = [0] * (cols + 1)    # p[j] = row matched to column j (1-indexed)
    way = [0] * (cols + 1)
    for i in range(1, rows + 1):
        p[0] = i
        j0 = 0
        minv = [math.inf] * (cols + 1)
        used = [False] * (cols + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = math.inf
            j1 = -1
            for j in range(1, cols + 1):
                if used[j]:
                    continue
                cur = a[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(cols + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = [-1] * rows
    for j in range(1, cols + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    total = sum(a[i][row_to_col[i]] for i in range(rows))
    return total, row_to_col


def hungarian_assign(cost_matrix) -> list[int]:
    """Optimal row->column assignment for a rows<=cols cost matrix.

    Among cost-optimal assignments (1e-9 tolerance) returns the
    lexicographically smallest column sequence, fixed row by row. A row with
    no finite entry raises InfeasibleMatrix; stray non-finite entries are
    treated as a huge-but-finite cost.
    """
    a = [[float(x) for x in row] for row in cost_matrix]
    rows = len(a)
    if rows == 0:
        return []
    cols = len(a[0])
    if any(len(r) != cols for r in a):
        raise InfeasibleMatrix("ragged cost matrix")
    if rows > cols:
        raise InfeasibleMatrix(f"{rows} rows exceed {cols} columns")
    for r in a:
        if not any(math.isfinite(x) for x in r):
            raise InfeasibleMatrix("row has no finite cost")
    a = [[x if math.isfinite(x) else _BIG for x in row] for row in a]

    target, _ = _jv_solve(a, rows, cols)
    result = [-1] * rows
    cols_left = list(range(cols))
    for r in range(rows):
        rest_rows = rows - r - 1
        for pos, j in enumerate(cols_left):
            rem_cols = cols_left[:pos] + cols_left[pos + 1:]
            if rest_rows == 0:
                sub_total = 0.0
            else:
                sub = [[a[rr][cc] for cc in rem_cols]
                       for rr in range(r + 1, rows)]
                sub_total, _ = _jv_solve(sub, rest_rows, len(rem_cols))
            if a[r][j] + sub_total <= target + 1e-9:
                result[r] = j
                cols_left = rem_cols
                target = sub_total  # re-anchor: no tolerance accumulation
                break
        if result[r] < 0:  # numerically impossible, guard anyway
            raise InfeasibleMatrix("lexicographic refinement failed")
    return result


def assignment_total(cost_matrix, assignment: list[int]) -> float:
    """Row-order sum matching the brute-force oracle's accumulation order."""
    return sum(cost_matrix[i][assignment[i]] for i in range(len(assignment)))


# Allocator -------------------------------------------------------------------

@dataclass
class AllocationRound:
    """Log record of one batched allocation."""

    step: int
    mode: str
    requesters: list[int]
    frontier_count: int
    k: int
    candidates: list[tuple[float, float]]
    relaxed: list[bool]
    suppressed_count: int
    cost_matrix: list[list[float]] | None
    assignment: dict[int, tuple[float, float]]
    padded_cols: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "type": "alloc",
            "step": self.step,
            "mode": self.mode,
            "requesters": self.requesters,
            "frontiers": self.frontier_count,
            "k": self.k,
            "candidates": [list(c) for c in self.candidates],
            "relaxed": self.relaxed,
            "suppressed": self.suppressed_count,
            "cost_matrix": self.cost_matrix,
            "assignment": {str(a): list(g) for a, g in self.assignment.items()},
            "padded_cols": self.padded_cols,
        }


class Allocator:
    """Central event-triggered frontier allocator with goal locking.

    Requests are batched per step; agents whose goals stay locked act as
    pre-selected directions for sector suppression. Modes: directional (the
    full method), no-suppress (ablation: no sector filter), greedy (each
    requester takes its nearest frontier, duplicates allowed), random
    (uniform draw without replacement from the policy stream).
    """

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator):
        self.params = config.allocator
        self.v_max = config.v_max_pursuer_mps
        self.min_cluster = config.allocator.min_cluster_cells
        self.locked: dict[int, tuple[float, float]] = {}
        self._rng = rng

    def unlock(self, agent_id: int) -> None:
        self.locked.pop(agent_id, None)

    def lock(self, agent_id: int, goal: tuple[float, float]) -> None:
        self.locked[agent_id] = goal

    def request_batch(self, requesters: list[int], pursuers, belief: BeliefMap,
                      step: int, unknown_mask: np.ndarray | None = None):
        """Assign one frontier goal per requester.

        Returns (assignment, round_record); assignment maps agent id -> goal
        point, with padded (frontier-starved) requesters absent. Raises
        NoFrontiers when the belief has no admissible clusters.
        """
        frontiers = extract_frontiers(belief, self.min_cluster, unknown_mask)
        if not frontiers:
            raise NoFrontiers(f"step {step}: no frontier clusters")
        mode = self.params.mode
        if mode in ("directional", "no-suppress"):
            return self._directional(requesters, pursuers, frontiers, step,
                                     suppress=mode == "directional")
        if mode == "greedy":
            return self._greedy(requesters, pursuers, frontiers, step)
        if mode == "random":
            return self._random(requesters, frontiers, step)
        raise ValueError(f"unknown allocator mode {mode!r}")

    def _directional(self, requesters, pursuers, frontiers, step,
                     suppress: bool):
        k = min(max(2 * len(requesters), self.params.k_min), len(frontiers))
        phi = self.params.phi_suppress_rad if suppress else 0.0
        positions = [p.position for p in pursuers]
        preselected = [g for aid, g in sorted(self.locked.items())
                       if aid not in requesters]
        selected, relaxed, suppressed = directional_fps(
            frontiers, positions, k, phi, preselected)
        by_id = {p.agent_id: p for p in pursuers}
        n_req = len(requesters)
        n_cols = max(len(selected), n_req)
        padded = list(range(len(selected), n_cols))
        matrix = []
        for aid in requesters:
            ag = by_id[aid]
            row = [kinematic_cost(ag.position, ag.theta_rad, f.position_m,
                                  self.v_max, self.params.w_angle)
                   for f in selected]
            row.extend([self.params.pad_cost] * len(padded))
            matrix.append(row)
        cols = hungarian_assign(matrix)
        assignment: dict[int, tuple[float, float]] = {}
        for ri, aid in enumerate(requesters):
            j = cols[ri]
            if j < len(selected):
                assignment[aid] = selected[j].position_m
                self.locked[aid] = selected[j].position_m
        record = AllocationRound(
            step=step, mode=self.params.mode, requesters=list(requesters),
            frontier_count=len(frontiers), k=k,
            candidates=[f.position_m for f in selected], relaxed=relaxed,
            suppressed_count=len(suppressed), cost_matrix=matrix,
            assignment=dict(assignment), padded_cols=padded)
        return assignment, record

    def _greedy(self, requesters, pursuers, frontiers, step):
        by_id = {p.agent_id: p for p in pursuers}
        assignment = {}
        for aid in requesters:
            ag = by_id[aid]
            best = min(frontiers, key=lambda f: (
                math.hypot(f.position_m[0] - ag.x_m, f.position_m[1] - ag.y_m),
                f.cell[1], f.cell[0]))
            assignment[aid] = best.position_m
            self.locked[aid] = best.position_m
        record = AllocationRound(
            step=step, mode="greedy", requesters=list(requesters),
            frontier_count=len(frontiers), k=len(requesters),
            candidates=[assignment[a] for a in requesters],
            relaxed=[False] * len(requesters), suppressed_count=0,
            cost_matrix=None, assignment=dict(assignment))
        return assignment, record

    def _random(self, requesters, frontiers, step):
        perm = self._rng.permutation(len(frontiers))
        assignment = {}
        for i, aid in enumerate(requesters):
            f = frontiers[int(perm[i % len(frontiers)])]
            assignment[aid] = f.position_m
            self.locked[aid] = f.position_m
        record = AllocationRound(
            step=step, mode="random", requesters=list(requesters),
            frontier_count=len(frontiers), k=len(requesters),
            candidates=[assignment[a] for a in requesters],
            relaxed=[False] * len(requesters), suppressed_count=0,
            cost_matrix=None, assignment=dict(assignment))
        return assignment, record
