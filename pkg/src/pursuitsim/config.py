"""Scenario configuration, curriculum stage table, and YAML round-trip."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CircularObstacle:
    center_x_m: float
    center_y_m: float
    radius_m: float

    @property
    def center(self) -> tuple[float, float]:
        return (self.center_x_m, self.center_y_m)


@dataclass(frozen=True)
class CurriculumStage:
    """One row of the five-stage training curriculum.

    c_col and c_static are stored as positive magnitudes; the safety penalty
    applies the minus sign. lambda_time is stored signed (a per-step cost).
    """

    stage_id: int
    r_fov_m: float                # target detection radius
    evader_v_max_mps: float
    lambda_time: float            # signed per-step reward
    c_col: float                  # collision penalty magnitude
    c_static: float               # idling penalty magnitude (v < 0.05 m/s)
    lambda_pot: float             # potential-shaping weight
    lambda_align: float           # guidance alignment weight
    w_cell: float                 # per newly known cell
    w_prog: float                 # per meter of geodesic progress
    c_cap: float                  # capture bonus
    c_clean_cap: float            # collision-free capture bonus


def default_stage_table() -> tuple[CurriculumStage, ...]:
    """The pinned five-stage schedule, index 0 = stage 1."""
    common = dict(lambda_pot=1.0, lambda_align=0.5, c_static=0.5,
                  c_cap=4000.0, c_clean_cap=6000.0)
    return (
        CurriculumStage(1, 10.0, 1.1, -0.5, 10.0, w_cell=0.1, w_prog=1.0, **common),
        CurriculumStage(2, 4.0, 1.1, -0.5, 10.0, w_cell=0.1, w_prog=1.0, **common),
        # Stage 3 is the sensing cliff: exploration shaping doubles.
        CurriculumStage(3, 1.5, 1.1, -1.25, 15.0, w_cell=0.2, w_prog=2.0, **common),
        CurriculumStage(4, 1.5, 1.2, -2.0, 20.0, w_cell=0.1, w_prog=1.0, **common),
        CurriculumStage(5, 1.5, 1.3, -2.0, 20.0, w_cell=0.1, w_prog=1.0, **common),
    )


def get_stage(stage_id: int) -> CurriculumStage:
    table = default_stage_table()
    if not 1 <= stage_id <= len(table):
        raise ConfigError(f"stage_id must be in 1..{len(table)}, got {stage_id}")
    return table[stage_id - 1]


@dataclass(frozen=True)
class SensingParams:
    lidar_max_range_m: float = 10.0
    fov_aperture_rad: float = TWO_PI   # full disc by default
    lkp_ttl_steps: int = 40
    lkp_arrival_radius_m: float = 0.5


@dataclass(frozen=True)
class PlannerParams:
    refresh_interval_steps: int = 3
    lookahead_m: float = 1.5


@dataclass(frozen=True)
class AllocatorParams:
    mode: str = "directional"          # directional | greedy | random | no-suppress
    phi_suppress_rad: float = math.radians(45.0)
    w_angle: float = 2.0               # seconds per radian of heading error
    min_cluster_cells: int = 3
    k_min: int = 6                     # K = max(2 * requesters, k_min), capped
    pad_cost: float = 1.0e6            # finite cost for padded candidate columns


@dataclass(frozen=True)
class FsmParams:
    d_approach_m: float = 2.0          # Approach -> Sweep handoff distance
    sweep_radius_m: float = 2.0
    sweep_max_steps: int = 50


@dataclass(frozen=True)
class ControlParams:
    k_p_heading: float = 2.0
    k_p_speed: float = 1.0
    evader_repulsion_range_m: float = 3.5
    evader_wall_margin_m: float = 1.0


@dataclass(frozen=True)
class PhysicsParams:
    damp_head_on: float = 0.2          # impact angle < 45 deg from inward normal
    damp_grazing: float = 0.9
    impact_angle_threshold_rad: float = math.pi / 4.0
    repulsion_trigger_m: float = 0.6
    k_rep: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one episode setup. Frozen and hashable by value."""

    map_width_m: float
    map_height_m: float
    obstacles: tuple[CircularObstacle, ...]
    n_pursuers: int = 3
    dt_s: float = 0.2
    t_max_steps: int = 512
    d_cap_m: float = 0.8               # capture iff distance strictly below
    agent_radius_m: float = 0.25
    v_max_pursuer_mps: float = 1.2
    grid_resolution_m: float = 0.25
    d_spawn_min_m: float = 3.0         # min pursuer-evader spawn separation
    stage_id: int = 5
    fov_override_m: float | None = 2.0  # None -> use the stage value
    rng_seed: int = 0
    sensing: SensingParams = field(default_factory=SensingParams)
    planner: PlannerParams = field(default_factory=PlannerParams)
    allocator: AllocatorParams = field(default_factory=AllocatorParams)
    fsm: FsmParams = field(default_factory=FsmParams)
    control: ControlParams = field(default_factory=ControlParams)
    physics: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self) -> None:
        self.validate()

    # Derived accessors ----------------------------------------------------

    @property
    def stage(self) -> CurriculumStage:
        return get_stage(self.stage_id)

    @property
    def r_fov_m(self) -> float:
        if self.fov_override_m is not None:
            return self.fov_override_m
        return self.stage.r_fov_m

    @property
    def grid_shape(self) -> tuple[int, int]:
        """(ny, nx) cell counts; map extents must be whole cells."""
        nx = round(self.map_width_m / self.grid_resolution_m)
        ny = round(self.map_height_m / self.grid_resolution_m)
        return (ny, nx)

    def validate(self) -> None:
        res = self.grid_resolution_m
        if res <= 0:
            raise ConfigError("grid_resolution_m must be positive")
        for name, extent in (("map_width_m", self.map_width_m),
                             ("map_height_m", self.map_height_m)):
            if extent <= 0:
                raise ConfigError(f"{name} must be positive")
            cells = extent / res
            if abs(cells - round(cells)) > 1e-9:
                raise ConfigError(f"{name}={extent} is not a whole number of cells")
        if self.n_pursuers < 1:
            raise ConfigError("n_pursuers must be >= 1")
        if self.dt_s <= 0 or self.t_max_steps < 1:
            raise ConfigError("dt_s must be positive and t_max_steps >= 1")
        if self.d_cap_m <= 0 or self.agent_radius_m <= 0:
            raise ConfigError("d_cap_m and agent_radius_m must be positive")
        if self.v_max_pursuer_mps <= 0:
            raise ConfigError("v_max_pursuer_mps must be positive")
        if self.fov_override_m is not None and self.fov_override_m <= 0:
            raise ConfigError("fov_override_m must be positive or None")
        get_stage(self.stage_id)  # raises on bad id
        if self.allocator.mode not in ("directional", "greedy", "random", "no-suppress"):
            raise ConfigError(f"unknown allocator mode {self.allocator.mode!r}")
        for ob in self.obstacles:
            if ob.radius_m <= 0:
                raise ConfigError("obstacle radius must be positive")
            x, y, r = ob.center_x_m, ob.center_y_m, ob.radius_m
            if not (0 < x < self.map_width_m and 0 < y < self.map_height_m):
                raise ConfigError("obstacle center must lie inside the map")
            if (min(x, self.map_width_m - x) < r
                    or min(y, self.map_height_m - y) < r):
                raise ConfigError("obstacle must not intersect the outer wall")

    # Serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["obstacles"] = [dataclasses.asdict(o) for o in self.obstacles]
        return d

    @staticmethod
    def from_dict(d: dict) -> "ScenarioConfig":
        try:
            data = dict(d)
            data["obstacles"] = tuple(
                CircularObstacle(**o) for o in data.get("obstacles", ())
            )
            for key, cls in (("sensing", SensingParams), ("planner", PlannerParams),
                             ("allocator", AllocatorParams), ("fsm", FsmParams),
                             ("control", ControlParams), ("physics", PhysicsParams)):
                if key in data and isinstance(data[key], dict):
                    data[key] = cls(**data[key])
            return ScenarioConfig(**data)
        except TypeError as exc:
            raise ConfigError(f"bad scenario config: {exc}") from exc


def save_config(config: ScenarioConfig, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        d = yaml.safe_load(fh)
    if not isinstance(d, dict):
        raise ConfigError(f"{path} does not contain a mapping")
    return ScenarioConfig.from_dict(d)
