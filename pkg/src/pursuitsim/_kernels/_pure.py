"""Pure-Python grid kernels.

Reference implementations of the hot loops (A*, Dijkstra field, lidar rays,
belief ray-marching). The compiled backend in _gridcore.pyx mirrors these
operation-for-operation so both produce bitwise-identical doubles; any change
here must be ported there verbatim.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

SQRT2 = math.sqrt(2.0)
QUARTER_PI = math.pi / 4.0

# Fixed neighbor order (dx, dy): orthogonal first, then diagonals.
_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1),
              (1, 1), (1, -1), (-1, 1), (-1, -1))


def _octile(ix: int, iy: int, gx: int, gy: int, resolution: float) -> float:
    dx = abs(ix - gx)
    dy = abs(iy - gy)
    dmin = dx if dx < dy else dy
    return resolution * ((dx + dy) + (SQRT2 - 2.0) * dmin)


def astar_path(blocked, start, goal, resolution, collect_expansions=False):
    """8-connected A* over non-blocked cells with the octile heuristic.

    blocked: uint8 [ny, nx], nonzero = untraversable; start/goal: (ix, iy).
    Step costs are resolution (orthogonal) and sqrt(2)*resolution (diagonal);
    diagonal moves require both adjacent orthogonal cells free. The start
    cell's own occupancy is ignored (an agent may stand on an inflated cell);
    a blocked goal is unreachable. Heap order is (f, h, row-major index).

    Returns (path, cost, expansions): path is a list of (ix, iy) cells
    including both endpoints, or None with cost inf when unreachable;
    expansions is the pop-order cell list when collect_expansions else None.
    """
    ny, nx = blocked.shape
    sx, sy = start
    gx, gy = goal
    expansions = [] if collect_expansions else None
    if not (0 <= sx < nx and 0 <= sy < ny and 0 <= gx < nx and 0 <= gy < ny):
        return (None, math.inf, expansions)
    if blocked[gy, gx]:
        return (None, math.inf, expansions)
    if sx == gx and sy == gy:
        return ([(sx, sy)], 0.0, expansions)

    g = np.full((ny, nx), math.inf, dtype=np.float64)
    parent = np.full((ny, nx), -1, dtype=np.int64)
    closed = np.zeros((ny, nx), dtype=np.uint8)
    cost_orth = resolution
    cost_diag = SQRT2 * resolution

    g[sy, sx] = 0.0
    h0 = _octile(sx, sy, gx, gy, resolution)
    heap = [(h0, h0, sy * nx + sx)]
    found = False
    while heap:
        f, h, idx = heapq.heappop(heap)
        cy, cx = divmod(idx, nx)
        if closed[cy, cx]:
            continue
        closed[cy, cx] = 1
        if collect_expansions:
            expansions.append((cx, cy))
        if cx == gx and cy == gy:
            found = True
            break
        gc = float(g[cy, cx])
        for dx, dy in _NEIGHBORS:
            x2 = cx + dx
            y2 = cy + dy
            if not (0 <= x2 < nx and 0 <= y2 < ny):
                continue
            if blocked[y2, x2]:
                continue
            diagonal = dx != 0 and dy != 0
            if diagonal and (blocked[cy, x2] or blocked[y2, cx]):
                continue  # no corner cutting
            g2 = gc + (cost_diag if diagonal else cost_orth)
            if g2 < g[y2, x2]:
                g[y2, x2] = g2
                parent[y2, x2] = idx
                h2 = _octile(x2, y2, gx, gy, resolution)
                heapq.heappush(heap, (g2 + h2, h2, y2 * nx + x2))
    if not found:
        return (None, math.inf, expansions)

    path = []
    idx = gy * nx + gx
    while idx != -1:
        cy, cx = divmod(idx, nx)
        path.append((cx, cy))
        idx = int(parent[cy, cx])
    path.reverse()
    return (path, float(g[gy, gx]), expansions)


def dijkstra_field(blocked, goal, resolution):
    """Exact geodesic distance from every cell to goal, same graph as A*.

    Returns a float64 [ny, nx] field; inf on blocked or unreachable cells,
    0.0 at the goal. A blocked goal yields an all-inf field.
    """
    ny, nx = blocked.shape
    gx, gy = goal
    dist = np.full((ny, nx), math.inf, dtype=np.float64)
    if not (0 <= gx < nx and 0 <= gy < ny) or blocked[gy, gx]:
        return dist
    closed = np.zeros((ny, nx), dtype=np.uint8)
    cost_orth = resolution
    cost_diag = SQRT2 * resolution
    dist[gy, gx] = 0.0
    heap = [(0.0, gy * nx + gx)]
    while heap:
        d, idx = heapq.heappop(heap)
        cy, cx = divmod(idx, nx)
        if closed[cy, cx]:
            continue
        closed[cy, cx] = 1
        dc = float(dist[cy, cx])
        for dx, dy in _NEIGHBORS:
            x2 = cx + dx
            y2 = cy + dy
            if not (0 <= x2 < nx and 0 <= y2 < ny):
                continue
            if blocked[y2, x2]:
                continue
            diagonal = dx != 0 and dy != 0
            if diagonal and (blocked[cy, x2] or blocked[y2, cx]):
                continue
            d2 = dc + (cost_diag if diagonal else cost_orth)
            if d2 < dist[y2, x2]:
                dist[y2, x2] = d2
                heapq.heappush(heap, (d2, y2 * nx + x2))
    return dist


def lidar_scan(x, y, theta, circles, map_w, map_h, max_range, include_walls):
    """Eight analytic ray casts at theta + k*45deg.

    circles: float64 [K, 3] rows (cx, cy, r); may be empty. Returns a float64
    [8] range array clamped to max_range. A ray starting inside a circle
    reports 0. Walls are the map rectangle; the origin must lie inside it.
    """
    circles = np.asarray(circles, dtype=np.float64).reshape(-1, 3)
    n_circ = circles.shape[0]
    out = np.empty(8, dtype=np.float64)
    for k in range(8):
        ang = theta + k * QUARTER_PI
        dxr = math.cos(ang)
        dyr = math.sin(ang)
        t_best = max_range
        if include_walls:
            if dxr > 0.0:
                t = (map_w - x) / dxr
                if t < t_best:
                    t_best = t
            elif dxr < 0.0:
                t = (0.0 - x) / dxr
                if t < t_best:
                    t_best = t
            if dyr > 0.0:
                t = (map_h - y) / dyr
                if t < t_best:
                    t_best = t
            elif dyr < 0.0:
                t = (0.0 - y) / dyr
                if t < t_best:
                    t_best = t
        for i in range(n_circ):
            ocx = x - circles[i, 0]
            ocy = y - circles[i, 1]
            b = ocx * dxr + ocy * dyr
            c0 = ocx * ocx + ocy * ocy - circles[i, 2] * circles[i, 2]
            disc = b * b - c0
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            t = -b - sq
            if t < 0.0:
                if -b + sq >= 0.0:
                    t = 0.0  # ray origin inside the circle
                else:
                    continue
            if t < t_best:
                t_best = t
        out[k] = t_best
    return out


def belief_update_rays(cells, x, y, theta, ranges, max_range, resolution):
    """March the eight rays through the belief grid.

    Unknown (0) cells crossed strictly before the endpoint become Free (1);
    when a ray hit something (range < max_range) the endpoint cell becomes
    Occupied (2). Free never overwrites Occupied; the endpoint cell of a
    full-range miss is left untouched (only partially traversed). Mutates
    cells in place and returns (new_known, new_occupied) counts, where
    new_known counts Unknown cells given any value this call.
    """
    ny, nx = cells.shape
    new_known = 0
    new_occ = 0
    for k in range(8):
        ang = theta + k * QUARTER_PI
        dxr = math.cos(ang)
        dyr = math.sin(ang)
        t_end = float(ranges[k])
        hit = t_end < max_range
        hx = x + dxr * t_end
        hy = y + dyr * t_end
        hix = min(max(int(math.floor(hx / resolution)), 0), nx - 1)
        hiy = min(max(int(math.floor(hy / resolution)), 0), ny - 1)
        ix = min(max(int(math.floor(x / resolution)), 0), nx - 1)
        iy = min(max(int(math.floor(y / resolution)), 0), ny - 1)
        if dxr > 0.0:
            step_x = 1
            t_max_x = ((ix + 1) * resolution - x) / dxr
            t_delta_x = resolution / dxr
        elif dxr < 0.0:
            step_x = -1
            t_max_x = (ix * resolution - x) / dxr
            t_delta_x = resolution / -dxr
        else:
            step_x = 0
            t_max_x = math.inf
            t_delta_x = math.inf
        if dyr > 0.0:
            step_y = 1
            t_max_y = ((iy + 1) * resolution - y) / dyr
            t_delta_y = resolution / dyr
        elif dyr < 0.0:
            step_y = -1
            t_max_y = (iy * resolution - y) / dyr
            t_delta_y = resolution / -dyr
        else:
            step_y = 0
            t_max_y = math.inf
            t_delta_y = math.inf
        while True:
            if not (ix == hix and iy == hiy):
                if cells[iy, ix] == 0:
                    cells[iy, ix] = 1
                    new_known += 1
            # advance to the next cell boundary; x wins exact ties
            t_next = t_max_x if t_max_x <= t_max_y else t_max_y
            if t_next > t_end:
                break
            if t_max_x <= t_max_y:
                ix += step_x
                t_max_x += t_delta_x
            else:
                iy += step_y
                t_max_y += t_delta_y
            if not (0 <= ix < nx and 0 <= iy < ny):
                break
        if hit:
            cur = cells[hiy, hix]
            if cur != 2:
                if cur == 0:
                    new_known += 1
                cells[hiy, hix] = 2
                new_occ += 1
    return (new_known, new_occ)
