import math

import numpy as np
import pytest

from pursuitsim.errors import GenerationFailed
from pursuitsim.world import (cell_of, center_of, obstacle_raster,
                              spawn_agents, truth_blocked_raster, wall_raster)

from conftest import make_config


def test_cell_center_round_trip():
    res = 0.25
    shape = (40, 40)
    for ix, iy in [(0, 0), (39, 39), (7, 21)]:
        x, y = center_of(ix, iy, res)
        assert cell_of(x, y, res, shape) == (ix, iy)


def test_cell_of_clamps_to_grid():
    shape = (40, 40)
    assert cell_of(-1.0, 5.0, 0.25, shape) == (0, 20)
    assert cell_of(99.0, 99.0, 0.25, shape) == (39, 39)


def test_spawn_deterministic():
    cfg = make_config(obstacles=[(5.0, 5.0, 0.6)])
    a = spawn_agents(cfg, seed=4)
    b = spawn_agents(cfg, seed=4)
    assert a == b
    assert spawn_agents(cfg, seed=5) != a


def test_spawn_constraints_hold():
    cfg = make_config(obstacles=[(3.0, 3.0, 0.5), (7.0, 6.0, 0.7)])
    r = cfg.agent_radius_m
    for seed in range(40):
        w = spawn_agents(cfg, seed=seed)
        agents = w.agents
        assert [a.role for a in agents] == ["pursuer"] * 3 + ["evader"]
        for a in agents:
            assert -math.pi < a.theta_rad <= math.pi
            assert a.v_mps == 0.0
            assert r <= a.x_m <= cfg.map_width_m - r
            assert r <= a.y_m <= cfg.map_height_m - r
            for ob in cfg.obstacles:
                d = math.hypot(a.x_m - ob.center_x_m, a.y_m - ob.center_y_m)
                assert d >= ob.radius_m + r
        for i, a in enumerate(agents):
            for b in agents[i + 1:]:
                assert math.hypot(a.x_m - b.x_m, a.y_m - b.y_m) >= 2 * r
        ev = w.evader
        for p in w.pursuers:
            assert math.hypot(p.x_m - ev.x_m, p.y_m - ev.y_m) >= cfg.d_spawn_min_m


def test_spawn_infeasible_raises():
    diag = math.hypot(10.0, 10.0)
    cfg = make_config(d_spawn_min_m=diag)
    with pytest.raises(GenerationFailed):
        spawn_agents(cfg, seed=0)


def test_obstacle_raster_against_sampling_oracle():
    cfg = make_config(obstacles=[(3.1, 4.2, 0.62), (7.4, 7.0, 0.41)])
    raster = obstacle_raster(cfg)
    res = cfg.grid_resolution_m
    ny, nx = raster.shape
    # dense sampling: 9x9 points per cell bounds the overlap test to ~0.02 m
    eps = res * math.sqrt(2) / 16
    pts = (np.arange(9) + 0.5) / 9 * res
    for iy in range(ny):
        for ix in range(nx):
            xs = ix * res + pts
            ys = iy * res + pts
            inside = 0.0
            clear = math.inf
            for ob in cfg.obstacles:
                dx = xs[:, None] - ob.center_x_m
                dy = ys[None, :] - ob.center_y_m
                d = np.sqrt(dx * dx + dy * dy)
                inside = max(inside, float(ob.radius_m - d.min()))
                clear = min(clear, float(d.min() - ob.radius_m))
            if inside > eps:
                assert raster[iy, ix], (ix, iy)
            if clear > eps:
                assert not raster[iy, ix], (ix, iy)


def test_wall_raster_is_border_ring():
    w = wall_raster((8, 12))
    assert w[0, :].all() and w[-1, :].all()
    assert w[:, 0].all() and w[:, -1].all()
    assert not w[1:-1, 1:-1].any()


def test_truth_blocked_combines_walls_and_obstacles():
    cfg = make_config(obstacles=[(5.0, 5.0, 0.6)])
    blocked = truth_blocked_raster(cfg)
    assert blocked[0, 0]
    cx, cy = 19, 19  # cell containing obstacle center (5.0 / 0.25 = 20 edge)
    assert blocked[cy, cx]
    assert not blocked[5, 5]
