import dataclasses
import math

import pytest

from pursuitsim.config import (CircularObstacle, ScenarioConfig,
                               default_stage_table, get_stage, load_config,
                               save_config)
from pursuitsim.errors import ConfigError, GenerationFailed
from pursuitsim.world import (build_training_map, default_obstacle_count,
                              free_space_connected, generate_random_map,
                              truth_blocked_raster)

from conftest import make_config


def test_training_map_defaults():
    cfg = build_training_map()
    assert cfg.map_width_m == 10.0
    assert cfg.map_height_m == 10.0
    assert len(cfg.obstacles) == 4
    assert cfg.n_pursuers == 3
    assert cfg.dt_s == 0.2
    assert cfg.t_max_steps == 512
    assert cfg.d_cap_m == 0.8
    assert cfg.agent_radius_m == 0.25
    assert cfg.v_max_pursuer_mps == 1.2
    # obstacles inside bounds, clear of the outer wall
    for ob in cfg.obstacles:
        assert ob.radius_m < ob.center_x_m < cfg.map_width_m - ob.radius_m
        assert ob.radius_m < ob.center_y_m < cfg.map_height_m - ob.radius_m


def test_yaml_round_trip(tmp_path):
    cfg = build_training_map(rng_seed=7, stage_id=2)
    path = tmp_path / "cfg.yaml"
    save_config(cfg, str(path))
    assert load_config(str(path)) == cfg


def test_dict_round_trip():
    cfg = build_training_map()
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_validation_rejects_bad_values():
    with pytest.raises(ConfigError):
        make_config(width=10.1)  # not a whole number of cells
    with pytest.raises(ConfigError):
        make_config(obstacles=[(0.3, 5.0, 0.5)])  # intersects the wall
    with pytest.raises(ConfigError):
        make_config(obstacles=[(5.0, 5.0, -1.0)])
    with pytest.raises(ConfigError):
        make_config(stage_id=6)
    with pytest.raises(ConfigError):
        make_config(n_pursuers=0)
    with pytest.raises(ConfigError):
        make_config(fov_override_m=0.0)
    with pytest.raises(ConfigError):
        dataclasses.replace(build_training_map(),
                            allocator=dataclasses.replace(
                                build_training_map().allocator, mode="wat"))


def test_random_map_deterministic():
    a = generate_random_map(20.0, 20.0, 10, seed=7)
    b = generate_random_map(20.0, 20.0, 10, seed=7)
    assert a == b
    c = generate_random_map(20.0, 20.0, 10, seed=8)
    assert c != a


def test_random_map_zero_obstacles():
    cfg = generate_random_map(15.0, 15.0, 0, seed=1)
    assert cfg.obstacles == ()
    assert cfg.map_width_m == 15.0


def test_random_map_free_space_fully_connected():
    cfg = generate_random_map(20.0, 20.0, 10, seed=3)
    blocked = truth_blocked_raster(cfg)
    ny, nx = blocked.shape
    # flood-fill oracle: BFS over free cells from one seed must reach them all
    free_total = int((blocked == 0).sum())
    start = None
    for iy in range(ny):
        for ix in range(nx):
            if not blocked[iy, ix]:
                start = (ix, iy)
                break
        if start:
            break
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx2, ny2 = x + dx, y + dy
            if 0 <= nx2 < nx and 0 <= ny2 < ny and not blocked[ny2, nx2] \
                    and (nx2, ny2) not in seen:
                seen.add((nx2, ny2))
                stack.append((nx2, ny2))
    assert len(seen) == free_total
    assert free_space_connected(cfg)


def test_random_map_geometry_constraints():
    cfg = generate_random_map(20.0, 20.0, 14, seed=11)
    assert len(cfg.obstacles) == 14
    for ob in cfg.obstacles:
        assert 0.4 <= ob.radius_m <= 0.9
        assert min(ob.center_x_m, 20.0 - ob.center_x_m) - ob.radius_m >= 0.75 - 1e-9
        assert min(ob.center_y_m, 20.0 - ob.center_y_m) - ob.radius_m >= 0.75 - 1e-9
    for i, a in enumerate(cfg.obstacles):
        for b in cfg.obstacles[i + 1:]:
            d = math.hypot(a.center_x_m - b.center_x_m,
                           a.center_y_m - b.center_y_m)
            assert d - a.radius_m - b.radius_m >= 1.0 - 1e-9


def test_default_obstacle_count():
    assert default_obstacle_count(15.0) == 8
    assert default_obstacle_count(20.0) == 14
    assert default_obstacle_count(10.0) == 8


def test_stage_table_values():
    t = default_stage_table()
    assert [s.r_fov_m for s in t] == [10.0, 4.0, 1.5, 1.5, 1.5]
    assert [s.evader_v_max_mps for s in t] == [1.1, 1.1, 1.1, 1.2, 1.3]
    assert [s.lambda_time for s in t] == [-0.5, -0.5, -1.25, -2.0, -2.0]
    assert [s.c_col for s in t] == [10.0, 10.0, 15.0, 20.0, 20.0]
    # exploration shaping is boosted at the sensing-cliff stage only
    assert [s.w_cell for s in t] == [0.1, 0.1, 0.2, 0.1, 0.1]
    assert [s.w_prog for s in t] == [1.0, 1.0, 2.0, 1.0, 1.0]
    for s in t:
        assert s.lambda_pot == 1.0
        assert s.lambda_align == 0.5
        assert s.c_static == 0.5
        assert s.c_cap == 4000.0
        assert s.c_clean_cap == 6000.0


def test_stage_monotonicity():
    t = default_stage_table()
    for a, b in zip(t, t[1:]):
        assert b.r_fov_m <= a.r_fov_m
        assert abs(b.lambda_time) >= abs(a.lambda_time)
        assert b.c_col >= a.c_col
        assert b.evader_v_max_mps >= a.evader_v_max_mps


def test_get_stage():
    assert get_stage(1).stage_id == 1
    assert get_stage(5).stage_id == 5
    with pytest.raises(ConfigError):
        get_stage(0)
    with pytest.raises(ConfigError):
        get_stage(6)


def test_fov_override():
    cfg = build_training_map()
    assert cfg.fov_override_m == 2.0
    assert cfg.r_fov_m == 2.0
    raw = dataclasses.replace(cfg, fov_override_m=None, stage_id=1)
    assert raw.r_fov_m == 10.0


def test_grid_shape():
    cfg = make_config(width=10.0, height=5.0)
    assert cfg.grid_shape == (20, 40)  # (ny, nx)
