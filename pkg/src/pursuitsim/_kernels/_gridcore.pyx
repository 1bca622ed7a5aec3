# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels.

Mirrors _pure.py operation-for-operation: identical arithmetic expression
order, identical tie-breaking, identical traversal order. Together with
-ffp-contract=off this keeps results bitwise equal to the fallback. Any
change to _pure.py must be ported here verbatim.
"""

from libc.math cimport INFINITY, M_PI, cos, floor, sin, sqrt
from libc.stdlib cimport free, malloc, realloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)
cdef double QUARTER_PI = M_PI / 4.0

# Fixed neighbor order (dx, dy): orthogonal first, then diagonals.
cdef int[8] NBR_DX
cdef int[8] NBR_DY
NBR_DX[0] = 1;  NBR_DY[0] = 0
NBR_DX[1] = -1; NBR_DY[1] = 0
NBR_DX[2] = 0;  NBR_DY[2] = 1
NBR_DX[3] = 0;  NBR_DY[3] = -1
NBR_DX[4] = 1;  NBR_DY[4] = 1
NBR_DX[5] = 1;  NBR_DY[5] = -1
NBR_DX[6] = -1; NBR_DY[6] = 1
NBR_DX[7] = -1; NBR_DY[7] = -1


cdef inline bint _less(double f1, double h1, long i1,
                       double f2, double h2, long i2) nogil:
    # lexicographic (f, h, idx), matching the tuple order used by _pure
    if f1 < f2:
        return True
    if f1 > f2:
        return False
    if h1 < h2:
        return True
    if h1 > h2:
        return False
    return i1 < i2


cdef struct MinHeap:
    double* f
    double* h
    long* idx
    Py_ssize_t size
    Py_ssize_t cap


cdef int heap_init(MinHeap* hp, Py_ssize_t cap) except -1:
    hp.f = <double*> malloc(cap * sizeof(double))
    hp.h = <double*> malloc(cap * sizeof(double))
    hp.idx = <long*> malloc(cap * sizeof(long))
    if hp.f == NULL or hp.h == NULL or hp.idx == NULL:
        heap_free(hp)
        raise MemoryError()
    hp.size = 0
    hp.cap = cap
    return 0


cdef void heap_free(MinHeap* hp):
    if hp.f != NULL:
        free(hp.f)
        hp.f = NULL
    if hp.h != NULL:
        free(hp.h)
        hp.h = NULL
    if hp.idx != NULL:
        free(hp.idx)
        hp.idx = NULL
    hp.size = 0
    hp.cap = 0


cdef inline void _heap_swap(MinHeap* hp, Py_ssize_t a, Py_ssize_t b) nogil:
    cdef double tf = hp.f[a]
    cdef double th = hp.h[a]
    cdef long ti = hp.idx[a]
    hp.f[a] = hp.f[b]; hp.h[a] = hp.h[b]; hp.idx[a] = hp.idx[b]
    hp.f[b] = tf; hp.h[b] = th; hp.idx[b] = ti


cdef int heap_push(MinHeap* hp, double f, double h, long idx) except -1:
    cdef Py_ssize_t i, parent
    cdef double* nf
    cdef double* nh
    cdef long* ni
    if hp.size == hp.cap:
        hp.cap = hp.cap * 2
        nf = <double*> realloc(hp.f, hp.cap * sizeof(double))
        nh = <double*> realloc(hp.h, hp.cap * sizeof(double))
        ni = <long*> realloc(hp.idx, hp.cap * sizeof(long))
        if nf == NULL or nh == NULL or ni == NULL:
            raise MemoryError()
        hp.f = nf; hp.h = nh; hp.idx = ni
    i = hp.size
    hp.size += 1
    hp.f[i] = f; hp.h[i] = h; hp.idx[i] = idx
    while i > 0:
        parent = (i - 1) >> 1
        if _less(hp.f[i], hp.h[i], hp.idx[i],
                 hp.f[parent], hp.h[parent], hp.idx[parent]):
            _heap_swap(hp, i, parent)
            i = parent
        else:
            break
    return 0


cdef void heap_pop(MinHeap* hp, double* f, double* h, long* idx) nogil:
    # caller guarantees size > 0; pop order equals _pure's heapq because the
    # key (f, h, idx) is a strict total order
    f[0] = hp.f[0]; h[0] = hp.h[0]; idx[0] = hp.idx[0]
    hp.size -= 1
    cdef Py_ssize_t n = hp.size
    if n == 0:
        return
    hp.f[0] = hp.f[n]; hp.h[0] = hp.h[n]; hp.idx[0] = hp.idx[n]
    cdef Py_ssize_t i = 0, l, r, smallest
    while True:
        l = 2 * i + 1
        r = l + 1
        smallest = i
        if l < n and _less(hp.f[l], hp.h[l], hp.idx[l],
                           hp.f[smallest], hp.h[smallest], hp.idx[smallest]):
            smallest = l
        if r < n and _less(hp.f[r], hp.h[r], hp.idx[r],
                           hp.f[smallest], hp.h[smallest], hp.idx[smallest]):
            smallest = r
        if smallest == i:
            break
        _heap_swap(hp, i, smallest)
        i = smallest


cdef inline double _octile(int ix, int iy, int gx, int gy,
                           double resolution) nogil:
    cdef int dx = ix - gx
    cdef int dy = iy - gy
    if dx < 0:
        dx = -dx
    if dy < 0:
        dy = -dy
    cdef int dmin = dx if dx < dy else dy
    return resolution * ((<double> (dx + dy)) + (SQRT2 - 2.0) * (<double> dmin))


def astar_path(blocked_obj, start, goal, double resolution,
               bint collect_expansions=False):
    """8-connected A* over non-blocked cells with the octile heuristic.

    Same contract as _pure.astar_path.
    """
    cdef cnp.uint8_t[:, ::1] blocked = np.ascontiguousarray(
        blocked_obj, dtype=np.uint8)
    cdef Py_ssize_t ny = blocked.shape[0]
    cdef Py_ssize_t nx = blocked.shape[1]
    cdef int sx = start[0]
    cdef int sy = start[1]
    cdef int gx = goal[0]
    cdef int gy = goal[1]
    expansions = [] if collect_expansions else None
    if not (0 <= sx < nx and 0 <= sy < ny and 0 <= gx < nx and 0 <= gy < ny):
        return (None, INFINITY, expansions)
    if blocked[gy, gx]:
        return (None, INFINITY, expansions)
    if sx == gx and sy == gy:
        return ([(sx, sy)], 0.0, expansions)

    g_arr = np.full((ny, nx), np.inf, dtype=np.float64)
    parent_arr = np.full((ny, nx), -1, dtype=np.int64)
    closed_arr = np.zeros((ny, nx), dtype=np.uint8)
    cdef double[:, ::1] g = g_arr
    cdef cnp.int64_t[:, ::1] parent = parent_arr
    cdef cnp.uint8_t[:, ::1] closed = closed_arr
    cdef double cost_orth = resolution
    cdef double cost_diag = SQRT2 * resolution

    cdef MinHeap hp
    heap_init(&hp, 256)
    cdef double f, h, gc, g2, h2
    cdef long idx
    cdef int cx, cy, x2, y2, dx, dy, kk
    cdef bint diagonal, found = False
    try:
        g[sy, sx] = 0.0
        h = _octile(sx, sy, gx, gy, resolution)
        heap_push(&hp, h, h, sy * nx + sx)
        while hp.size > 0:
            heap_pop(&hp, &f, &h, &idx)
            cy = <int> (idx // nx)
            cx = <int> (idx % nx)
            if closed[cy, cx]:
                continue
            closed[cy, cx] = 1
            if collect_expansions:
                expansions.append((cx, cy))
            if cx == gx and cy == gy:
                found = True
                break
            gc = g[cy, cx]
            for kk in range(8):
                dx = NBR_DX[kk]
                dy = NBR_DY[kk]
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
                    heap_push(&hp, g2 + h2, h2, y2 * nx + x2)
    finally:
        heap_free(&hp)
    if not found:
        return (None, INFINITY, expansions)

    path = []
    cdef long cur = gy * nx + gx
    while cur != -1:
        cy = <int> (cur // nx)
        cx = <int> (cur % nx)
        path.append((cx, cy))
        cur = parent[cy, cx]
    path.reverse()
    return (path, float(g_arr[gy, gx]), expansions)


def dijkstra_field(blocked_obj, goal, double resolution):
    """Exact geodesic distance from every cell to goal, same graph as A*.

    Same contract as _pure.dijkstra_field.
    """
    cdef cnp.uint8_t[:, ::1] blocked = np.ascontiguousarray(
        blocked_obj, dtype=np.uint8)
    cdef Py_ssize_t ny = blocked.shape[0]
    cdef Py_ssize_t nx = blocked.shape[1]
    cdef int gx = goal[0]
    cdef int gy = goal[1]
    dist_arr = np.full((ny, nx), np.inf, dtype=np.float64)
    if not (0 <= gx < nx and 0 <= gy < ny) or blocked[gy, gx]:
        return dist_arr
    closed_arr = np.zeros((ny, nx), dtype=np.uint8)
    cdef double[:, ::1] dist = dist_arr
    cdef cnp.uint8_t[:, ::1] closed = closed_arr
    cdef double cost_orth = resolution
    cdef double cost_diag = SQRT2 * resolution

    cdef MinHeap hp
    heap_init(&hp, 256)
    cdef double d, h, dc, d2
    cdef long idx
    cdef int cx, cy, x2, y2, dx, dy, kk
    cdef bint diagonal
    try:
        dist[gy, gx] = 0.0
        heap_push(&hp, 0.0, 0.0, gy * nx + gx)
        while hp.size > 0:
            heap_pop(&hp, &d, &h, &idx)
            cy = <int> (idx // nx)
            cx = <int> (idx % nx)
            if closed[cy, cx]:
                continue
            closed[cy, cx] = 1
            dc = dist[cy, cx]
            for kk in range(8):
                dx = NBR_DX[kk]
                dy = NBR_DY[kk]
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
                    heap_push(&hp, d2, 0.0, y2 * nx + x2)
    finally:
        heap_free(&hp)
    return dist_arr


def lidar_scan(double x, double y, double theta, circles_obj, double map_w,
               double map_h, double max_range, bint include_walls):
    """Eight analytic ray casts at theta + k*45deg.

    Same contract as _pure.lidar_scan.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] circles = np.ascontiguousarray(
        circles_obj, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n_circ = circles.shape[0]
    out_arr = np.empty(8, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[:, ::1] circ = circles
    cdef int k
    cdef Py_ssize_t i
    cdef double ang, dxr, dyr, t_best, t, ocx, ocy, b, c0, disc, sq
    for k in range(8):
        ang = theta + k * QUARTER_PI
        dxr = cos(ang)
        dyr = sin(ang)
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
            ocx = x - circ[i, 0]
            ocy = y - circ[i, 1]
            b = ocx * dxr + ocy * dyr
            c0 = ocx * ocx + ocy * ocy - circ[i, 2] * circ[i, 2]
            disc = b * b - c0
            if disc < 0.0:
                continue
            sq = sqrt(disc)
            t = -b - sq
            if t < 0.0:
                if -b + sq >= 0.0:
                    t = 0.0  # ray origin inside the circle
                else:
                    continue
            if t < t_best:
                t_best = t
        out[k] = t_best
    return out_arr


def belief_update_rays(cnp.uint8_t[:, ::1] cells, double x, double y,
                       double theta, ranges_obj, double max_range,
                       double resolution):
    """March the eight rays through the belief grid.

    Same contract as _pure.belief_update_rays (mutates cells in place).
    """
    cdef double[::1] ranges = np.ascontiguousarray(ranges_obj, dtype=np.float64)
    cdef Py_ssize_t ny = cells.shape[0]
    cdef Py_ssize_t nx = cells.shape[1]
    cdef long new_known = 0
    cdef long new_occ = 0
    cdef int k, step_x, step_y, ix, iy, hix, hiy
    cdef double ang, dxr, dyr, t_end, hx, hy
    cdef double t_max_x, t_max_y, t_delta_x, t_delta_y, t_next
    cdef bint hit
    cdef cnp.uint8_t cur
    for k in range(8):
        ang = theta + k * QUARTER_PI
        dxr = cos(ang)
        dyr = sin(ang)
        t_end = ranges[k]
        hit = t_end < max_range
        hx = x + dxr * t_end
        hy = y + dyr * t_end
        hix = <int> floor(hx / resolution)
        if hix < 0:
            hix = 0
        elif hix > nx - 1:
            hix = <int> (nx - 1)
        hiy = <int> floor(hy / resolution)
        if hiy < 0:
            hiy = 0
        elif hiy > ny - 1:
            hiy = <int> (ny - 1)
        ix = <int> floor(x / resolution)
        if ix < 0:
            ix = 0
        elif ix > nx - 1:
            ix = <int> (nx - 1)
        iy = <int> floor(y / resolution)
        if iy < 0:
            iy = 0
        elif iy > ny - 1:
            iy = <int> (ny - 1)
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
            t_max_x = INFINITY
            t_delta_x = INFINITY
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
            t_max_y = INFINITY
            t_delta_y = INFINITY
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
