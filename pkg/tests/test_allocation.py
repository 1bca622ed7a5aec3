"""Frontier extraction, directional FPS, kinematic costs, Hungarian, allocator."""
import itertools
import math

import numpy as np
import pytest

from conftest import make_config, pursuer
from pursuitsim.allocation import (Allocator, FrontierCluster,
                                   assignment_total, directional_fps,
                                   extract_frontiers, hungarian_assign,
                                   kinematic_cost)
from pursuitsim.errors import InfeasibleMatrix, NoFrontiers
from pursuitsim.sensing import (FREE, OCCUPIED, UNKNOWN, BeliefMap,
                                reachable_unknown_mask)

PHI45 = math.radians(45.0)


def _belief(width=10.0, height=10.0):
    return BeliefMap(make_config(width, height))


def _frontier(x, y, size=5):
    return FrontierCluster(cell=(0, 0), position_m=(x, y), size=size)


# ------------------------------------------------------------------ frontiers


def test_fully_unknown_map_has_no_frontiers():
    assert extract_frontiers(_belief()) == []


def test_fully_explored_map_has_no_frontiers():
    belief = _belief()
    belief.cells[:, :] = FREE
    assert extract_frontiers(belief) == []


def test_vertical_reveal_makes_one_cluster():
    belief = BeliefMap(make_config(5.0, 5.0))  # 20x20 cells
    belief.cells[:, :10] = FREE
    out = extract_frontiers(belief)
    assert len(out) == 1
    cluster = out[0]
    assert cluster.size == 20  # the whole boundary column
    assert cluster.cell == (9, 9)  # snapped to the member nearest the centroid
    assert cluster.position_m == (2.375, 2.375)


def test_small_clusters_dropped():
    belief = _belief()
    belief.cells[10, 10] = FREE
    belief.cells[10, 11] = FREE  # two frontier cells only
    assert extract_frontiers(belief, min_cluster_cells=3) == []
    assert len(extract_frontiers(belief, min_cluster_cells=1)) == 1


def test_frontiers_match_definition_on_random_fields():
    rng = np.random.default_rng(17)
    for _ in range(20):
        belief = BeliefMap(make_config(5.0, 5.0))
        belief.cells[:] = rng.choice(
            [UNKNOWN, FREE, OCCUPIED], size=belief.cells.shape,
            p=[0.45, 0.45, 0.1]).astype(np.uint8)
        mask = reachable_unknown_mask(belief)
        # definition: free cell with an observable-unknown 4-neighbour
        ny, nx = belief.cells.shape
        expected = set()
        for iy in range(ny):
            for ix in range(nx):
                if belief.cells[iy, ix] != FREE:
                    continue
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    x2, y2 = ix + dx, iy + dy
                    if 0 <= x2 < nx and 0 <= y2 < ny and mask[y2, x2]:
                        expected.add((ix, iy))
                        break
        clusters = extract_frontiers(belief, min_cluster_cells=1)
        assert sum(c.size for c in clusters) == len(expected)
        for c in clusters:
            assert c.cell in expected


# ------------------------------------------------------------------ FPS


def test_fps_collinear_max_min_selection():
    frontiers = [_frontier(float(i), 0.0) for i in range(11)]
    agents = [(5.0, -100.0)]
    selected, relaxed, suppressed = directional_fps(frontiers, agents, 3, 0.0)
    assert [f.position_m[0] for f in selected] == [0.0, 10.0, 5.0]
    assert relaxed == [False, False, False]
    assert suppressed == []


def test_fps_seed_tie_keeps_lowest_index():
    # both endpoints equidistant from the agent; index order must decide
    frontiers = [_frontier(0.0, 0.0), _frontier(10.0, 0.0)]
    selected, _, _ = directional_fps(frontiers, [(5.0, 0.0)], 1, 0.0)
    assert selected[0].position_m == (0.0, 0.0)


def test_fps_sector_suppression_at_30_degrees():
    a = _frontier(10 * math.cos(math.radians(30)),
                  10 * math.sin(math.radians(30)))
    b = _frontier(5 * math.cos(math.radians(60)),
                  5 * math.sin(math.radians(60)))
    selected, relaxed, suppressed = directional_fps(
        [a, b], [(0.0, 0.0)], 2, PHI45)
    # the second bearing is 30 deg from the first: inside the sector
    assert selected == [a, b]
    assert relaxed == [False, True]  # b re-admitted only to fill the quota
    assert suppressed == [b]


def test_fps_suppression_threshold_is_strict():
    a = _frontier(10 * math.cos(math.radians(30)),
                  10 * math.sin(math.radians(30)))
    b = _frontier(5 * math.cos(math.radians(75)),
                  5 * math.sin(math.radians(75)))
    selected, relaxed, suppressed = directional_fps(
        [a, b], [(0.0, 0.0)], 2, PHI45)
    assert relaxed == [False, False]  # exactly 45 deg apart: not suppressed
    assert suppressed == []


def test_fps_k1_returns_seed_only():
    frontiers = [_frontier(1.0, 0.0), _frontier(0.0, 8.0)]
    selected, relaxed, suppressed = directional_fps(
        frontiers, [(0.0, 0.0)], 1, PHI45)
    assert len(selected) == 1
    assert selected[0].position_m == (0.0, 8.0)  # farther seed
    assert suppressed == []


def test_fps_preselected_bearings_suppress():
    pre = (3 * math.cos(math.radians(20)), 3 * math.sin(math.radians(20)))
    f_near = _frontier(8 * math.cos(math.radians(50)),
                       8 * math.sin(math.radians(50)))
    f_far = _frontier(6 * math.cos(math.radians(110)),
                      6 * math.sin(math.radians(110)))
    selected, relaxed, suppressed = directional_fps(
        [f_near, f_far], [(0.0, 0.0)], 2, PHI45, preselected=(pre,))
    # the locked goal at 20 deg shadows the 50 deg frontier (delta 30)
    assert suppressed == [f_near]
    assert selected == [f_far, f_near]
    assert relaxed == [False, True]


def _fps_reference(points, agents, k):
    """Clean-room max-min FPS, no suppression, ties to lowest index.

    The seed maximizes distance to the agents; every later pick maximizes the
    min distance to the already chosen candidates (agents no longer count).
    """
    n = len(points)
    chosen = []
    remaining = list(range(n))
    while remaining and len(chosen) < k:
        if not chosen:
            d = [min(math.hypot(points[i][0] - ax, points[i][1] - ay)
                     for ax, ay in agents) for i in range(n)]
        else:
            d = [min(math.hypot(points[i][0] - points[j][0],
                                points[i][1] - points[j][1]) for j in chosen)
                 for i in range(n)]
        best = remaining[0]
        for i in remaining[1:]:
            if d[i] > d[best]:
                best = i
        chosen.append(best)
        remaining.remove(best)
    return chosen


def test_fps_matches_reference_on_random_sets():
    rng = np.random.default_rng(29)
    for _ in range(100):
        n = int(rng.integers(3, 13))
        pts = [(float(x), float(y)) for x, y in rng.uniform(0, 10, (n, 2))]
        agents = [(float(x), float(y)) for x, y in rng.uniform(0, 10, (2, 2))]
        k = int(rng.integers(1, n + 1))
        frontiers = [_frontier(x, y) for x, y in pts]
        selected, relaxed, _ = directional_fps(frontiers, agents, k, 0.0)
        ref = _fps_reference(pts, agents, k)
        assert [f.position_m for f in selected] == [pts[i] for i in ref]
        assert not any(relaxed)


def test_fps_non_relaxed_picks_respect_separation():
    rng = np.random.default_rng(33)
    for _ in range(100):
        n = int(rng.integers(4, 15))
        pts = rng.uniform(0, 10, (n, 2))
        agents = [(float(x), float(y)) for x, y in rng.uniform(2, 8, (3, 2))]
        frontiers = [_frontier(float(x), float(y)) for x, y in pts]
        selected, relaxed, _ = directional_fps(frontiers, agents, n, PHI45)
        cx = sum(a[0] for a in agents) / len(agents)
        cy = sum(a[1] for a in agents) / len(agents)
        strict = [f for f, r in zip(selected, relaxed) if not r]
        for f1, f2 in itertools.combinations(strict, 2):
            b1 = math.atan2(f1.position_m[1] - cy, f1.position_m[0] - cx)
            b2 = math.atan2(f2.position_m[1] - cy, f2.position_m[0] - cx)
            diff = abs(math.remainder(b1 - b2, 2 * math.pi))
            assert diff >= PHI45 - 1e-12


# ------------------------------------------------------------------ cost


def test_kinematic_cost_straight_ahead():
    assert kinematic_cost((0.0, 0.0), 0.0, (1.2, 0.0), 1.2, 2.0) == \
        pytest.approx(1.0, abs=1e-12)


def test_kinematic_cost_side_goal_pays_turn():
    got = kinematic_cost((0.0, 0.0), 0.0, (0.0, 1.2), 1.2, 2.0)
    assert got == pytest.approx(1.0 + 2.0 * math.pi / 2, abs=1e-12)


def test_kinematic_cost_zero_range_is_zero():
    assert kinematic_cost((3.0, 4.0), 1.1, (3.0, 4.0), 1.2, 2.0) == 0.0


def test_kinematic_cost_wraps_heading_error():
    # heading 3 rad, goal bearing -3 rad: the short way round is 2pi - 6
    goal = (math.cos(-3.0), math.sin(-3.0))
    got = kinematic_cost((0.0, 0.0), 3.0, goal, 1.2, 2.0)
    assert got == pytest.approx(1.0 / 1.2 + 2.0 * (2 * math.pi - 6.0),
                                abs=1e-12)


# ------------------------------------------------------------------ Hungarian


def test_hungarian_two_by_two():
    assert hungarian_assign([[1.0, 2.0], [2.0, 1.0]]) == [0, 1]


def test_hungarian_single_entry():
    assert hungarian_assign([[5.0]]) == [0]


def test_hungarian_empty():
    assert hungarian_assign([]) == []


def test_hungarian_matches_brute_force():
    rng = np.random.default_rng(47)
    for _ in range(300):
        m = rng.uniform(0, 10, (4, 4)).tolist()
        got = hungarian_assign(m)
        best = min(itertools.permutations(range(4)),
                   key=lambda p: sum(m[i][p[i]] for i in range(4)))
        best_cost = sum(m[i][best[i]] for i in range(4))
        assert assignment_total(m, got) == pytest.approx(best_cost, abs=1e-9)


def test_hungarian_rectangular_uses_best_columns():
    rng = np.random.default_rng(53)
    for _ in range(100):
        m = rng.uniform(0, 10, (3, 5)).tolist()
        got = hungarian_assign(m)
        assert len(set(got)) == 3
        best = min(itertools.permutations(range(5), 3),
                   key=lambda p: sum(m[i][p[i]] for i in range(3)))
        best_cost = sum(m[i][best[i]] for i in range(3))
        assert assignment_total(m, got) == pytest.approx(best_cost, abs=1e-9)


def test_hungarian_lexicographic_tie_break():
    rng = np.random.default_rng(59)
    for _ in range(200):
        m = rng.integers(0, 4, (4, 4)).astype(float).tolist()
        got = hungarian_assign(m)
        perms = list(itertools.permutations(range(4)))
        costs = [sum(m[i][p[i]] for i in range(4)) for p in perms]
        lo = min(costs)
        optimal = [p for p, c in zip(perms, costs) if c <= lo + 1e-9]
        assert tuple(got) == min(optimal)


def test_hungarian_ragged_matrix_rejected():
    with pytest.raises(InfeasibleMatrix):
        hungarian_assign([[1.0, 2.0], [3.0]])


def test_hungarian_more_rows_than_cols_rejected():
    with pytest.raises(InfeasibleMatrix):
        hungarian_assign([[1.0], [2.0]])


def test_hungarian_all_infinite_row_rejected():
    with pytest.raises(InfeasibleMatrix):
        hungarian_assign([[math.inf, math.nan], [1.0, 2.0]])


def test_hungarian_stray_infinities_avoided():
    m = [[math.inf, 1.0], [1.0, math.inf]]
    assert hungarian_assign(m) == [1, 0]


# ------------------------------------------------------------------ allocator


def _explored_strip_belief():
    """Training-size map, left half explored: frontier along the reveal."""
    belief = _belief()
    belief.cells[:, :20] = FREE
    return belief


def _make_allocator(mode="directional"):
    from pursuitsim.config import AllocatorParams
    cfg = make_config(allocator=AllocatorParams(mode=mode))
    rng = np.random.default_rng(123)
    return Allocator(cfg, rng)


def test_allocator_single_requester_takes_cheapest():
    alloc = _make_allocator()
    belief = _explored_strip_belief()
    agents = [pursuer(4.5, 5.125, theta=0.0)]
    assignment, record = alloc.request_batch([0], agents, belief, step=3)
    assert set(assignment) == {0}
    # facing the reveal line: the straight-ahead candidate is cheapest
    gx, gy = assignment[0]
    assert gx == pytest.approx(4.875)
    assert record.k >= 1
    assert alloc.locked[0] == assignment[0]


def _pocket_belief():
    """Four isolated explored strips: one frontier cluster each.

    Two sit due east at nearby bearings (a suppression pair seen from the
    west side of the map); the others are far north and far south.
    """
    belief = _belief()
    belief.cells[19:22, 32] = FREE  # east, rep (8.125, 5.125)
    belief.cells[26:29, 32] = FREE  # east-north-east, rep (8.125, 6.875)
    belief.cells[34:37, 8] = FREE   # north, rep (2.125, 8.875)
    belief.cells[3:6, 8] = FREE     # south, rep (2.125, 1.125)
    return belief


def test_allocator_assignment_is_injective():
    alloc = _make_allocator()
    belief = _pocket_belief()
    agents = [pursuer(2.0, 2.0), pursuer(2.0, 5.0, agent_id=1),
              pursuer(2.0, 8.0, agent_id=2)]
    assignment, _ = alloc.request_batch([0, 1, 2], agents, belief, step=0)
    goals = list(assignment.values())
    assert len(goals) == len(set(goals)) == 3


def test_allocator_starved_requesters_left_out():
    alloc = _make_allocator()
    belief = _belief()
    # one tiny explored pocket: a single frontier cluster
    belief.cells[10:13, 10] = FREE
    agents = [pursuer(2.0, 2.0, agent_id=i) for i in range(5)]
    assignment, record = alloc.request_batch(
        [0, 1, 2, 3, 4], agents, belief, step=0)
    assert len(assignment) == 1  # four rows land on padded columns
    assert len(record.padded_cols) == 4
    assert record.cost_matrix is not None
    assert all(len(row) == 5 for row in record.cost_matrix)


def test_allocator_no_frontiers_raises():
    alloc = _make_allocator()
    belief = _belief()
    belief.cells[:, :] = FREE
    with pytest.raises(NoFrontiers):
        alloc.request_batch([0], [pursuer(5.0, 5.0)], belief, step=0)


def test_allocator_greedy_allows_duplicates():
    alloc = _make_allocator("greedy")
    belief = _explored_strip_belief()
    agents = [pursuer(4.0, 5.0), pursuer(4.0, 5.0, agent_id=1)]
    assignment, record = alloc.request_batch([0, 1], agents, belief, step=0)
    assert assignment[0] == assignment[1]
    assert record.mode == "greedy"


def test_allocator_random_mode_is_seed_deterministic():
    belief = _explored_strip_belief()
    agents = [pursuer(2.0, 2.0), pursuer(2.0, 8.0, agent_id=1)]
    a1, _ = _make_allocator("random").request_batch([0, 1], agents,
                                                    belief.copy(), step=0)
    a2, _ = _make_allocator("random").request_batch([0, 1], agents,
                                                    belief.copy(), step=0)
    assert a1 == a2


def test_allocator_locked_goals_steer_suppression():
    alloc = _make_allocator()
    belief = _pocket_belief()
    agents = [pursuer(2.0, 5.0), pursuer(2.5, 5.0, agent_id=1)]
    first, _ = alloc.request_batch([0], agents, belief, step=0)
    assert first[0] == (8.125, 5.125)  # cheapest: straight ahead east
    # agent 1 requests later; agent 0 keeps its east lock, so both easterly
    # clusters are shadowed and only re-enter as relaxed quota filler
    second, record = alloc.request_batch([1], agents, belief, step=1)
    assert 1 in second
    assert record.suppressed_count == 2
    assert record.relaxed == [False, False, True, True]
    # north and south tie on max-min distance; scan-order index breaks it
    assert record.candidates[:2] == [(2.125, 1.125), (2.125, 8.875)]
    cx = (2.0 + 2.5) / 2
    lb = math.atan2(5.125 - 5.0, 8.125 - cx)
    for cand, relaxed in zip(record.candidates, record.relaxed):
        if relaxed:
            continue
        b = math.atan2(cand[1] - 5.0, cand[0] - cx)
        assert abs(math.remainder(b - lb, 2 * math.pi)) >= PHI45


def test_allocator_k_respects_quota_formula():
    alloc = _make_allocator()
    belief = _explored_strip_belief()
    agents = [pursuer(2.0, 5.0)]
    _, record = alloc.request_batch([0], agents, belief, step=0)
    # one requester: K = max(2, 6) capped by the frontier count
    assert record.k == min(6, record.frontier_count)
