"""Continuous kinematics, collision resolution, repulsion, and capture."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .config import ScenarioConfig
from .world import AgentState, WorldState

TWO_PI = 2.0 * math.pi

# Per-step action bounds, enforced on construction.
DTHETA_MAX_RAD = 0.6
DV_MAX_MPS = 0.4

SPEED_EPS_MPS = 0.05  # below this the agent counts as static


def wrap_angle(a: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi]."""
    a = a % TWO_PI  # [0, 2pi)
    if a > math.pi:
        a -= TWO_PI
    return a


@dataclass(frozen=True)
class KinematicAction:
    """One control step [dtheta, dv]; out-of-range values clamp silently."""

    dtheta_rad: float = 0.0
    dv_mps: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "dtheta_rad",
            min(max(float(self.dtheta_rad), -DTHETA_MAX_RAD), DTHETA_MAX_RAD))
        object.__setattr__(
            self, "dv_mps",
            min(max(float(self.dv_mps), -DV_MAX_MPS), DV_MAX_MPS))


def integrate(state: AgentState, action: KinematicAction, dt: float,
              v_max: float) -> AgentState:
    """Unicycle update: the new heading and new speed both act this step."""
    theta = wrap_angle(state.theta_rad + action.dtheta_rad)
    v = min(max(state.v_mps + action.dv_mps, 0.0), v_max)
    x = state.x_m + v * math.cos(theta) * dt
    y = state.y_m + v * math.sin(theta) * dt
    return replace(state, x_m=x, y_m=y, theta_rad=theta, v_mps=v)


def _project_clear(x: float, y: float, config: ScenarioConfig,
                   fallback: tuple[float, float]) -> tuple[float, float]:
    """Push a point out of all obstacle discs and wall margins (no damping)."""
    r = config.agent_radius_m
    lo = r
    hi_x = config.map_width_m - r
    hi_y = config.map_height_m - r
    for _ in range(3):
        moved = False
        for ob in config.obstacles:
            dx = x - ob.center_x_m
            dy = y - ob.center_y_m
            rr = ob.radius_m + r
            if dx * dx + dy * dy < rr * rr:
                d = math.hypot(dx, dy)
                if d < 1e-12:
                    fx = fallback[0] - ob.center_x_m
                    fy = fallback[1] - ob.center_y_m
                    fn = math.hypot(fx, fy)
                    dx, dy = (fx / fn, fy / fn) if fn > 1e-12 else (1.0, 0.0)
                else:
                    dx, dy = dx / d, dy / d
                x = ob.center_x_m + dx * rr
                y = ob.center_y_m + dy * rr
                moved = True
        cx = min(max(x, lo), hi_x)
        cy = min(max(y, lo), hi_y)
        if cx != x or cy != y:
            x, y = cx, cy
            moved = True
        if not moved:
            break
    return x, y


def _resolve_agent(prev: AgentState, prop: AgentState,
                   config: ScenarioConfig) -> tuple[AgentState, bool, bool]:
    """Slide the proposed pose out of walls and obstacles.

    Returns (state, wall_hit, obstacle_hit). On contact the speed is damped by
    0.2 (impact within 45 deg of the inward surface normal) or 0.9 (grazing);
    with several contacts the strongest damping wins. Headings never change.
    """
    p = config.physics
    r = config.agent_radius_m
    x, y = prop.x_m, prop.y_m
    ux = math.cos(prop.theta_rad)
    uy = math.sin(prop.theta_rad)
    wall = False
    obstacle = False
    damp = 1.0

    def impact_damp(nin_x: float, nin_y: float) -> float:
        c = min(max(ux * nin_x + uy * nin_y, -1.0), 1.0)
        angle = math.acos(c)
        if angle < p.impact_angle_threshold_rad:
            return p.damp_head_on
        return p.damp_grazing

    # Obstacles first: wall-slide along the tangent, then push to the surface.
    # The contact normal comes from the pre-step pose, which is guaranteed to
    # lie outside the disc.
    for ob in config.obstacles:
        dx = x - ob.center_x_m
        dy = y - ob.center_y_m
        rr = ob.radius_m + r
        if dx * dx + dy * dy >= rr * rr:
            continue
        obstacle = True
        nx_ = prev.x_m - ob.center_x_m
        ny_ = prev.y_m - ob.center_y_m
        nn = math.hypot(nx_, ny_)
        if nn < 1e-12:
            nx_, ny_ = 1.0, 0.0
        else:
            nx_, ny_ = nx_ / nn, ny_ / nn
        damp = min(damp, impact_damp(-nx_, -ny_))
        mvx = x - prev.x_m
        mvy = y - prev.y_m
        along = mvx * nx_ + mvy * ny_
        x = prev.x_m + mvx - along * nx_
        y = prev.y_m + mvy - along * ny_
        ddx = x - ob.center_x_m
        ddy = y - ob.center_y_m
        dn = math.hypot(ddx, ddy)
        if dn < 1e-12:
            ddx, ddy, dn = nx_, ny_, 1.0
        if dn < rr:
            x = ob.center_x_m + ddx / dn * rr
            y = ob.center_y_m + ddy / dn * rr

    # Walls clamp; the tangential coordinate is untouched (sliding).
    lo = r
    hi_x = config.map_width_m - r
    hi_y = config.map_height_m - r
    if x < lo:
        wall = True
        damp = min(damp, impact_damp(-1.0, 0.0))
        x = lo
    elif x > hi_x:
        wall = True
        damp = min(damp, impact_damp(1.0, 0.0))
        x = hi_x
    if y < lo:
        wall = True
        damp = min(damp, impact_damp(0.0, -1.0))
        y = lo
    elif y > hi_y:
        wall = True
        damp = min(damp, impact_damp(0.0, 1.0))
        y = hi_y

    # Composite contacts (slide into a second surface) get a positional fix.
    x, y = _project_clear(x, y, config, fallback=(prev.x_m, prev.y_m))

    v = prop.v_mps * damp if (wall or obstacle) else prop.v_mps
    return replace(prop, x_m=x, y_m=y, v_mps=v), wall, obstacle


def apply_repulsion(pursuers: list[AgentState],
                    config: ScenarioConfig) -> list[AgentState]:
    """Symmetric positional push between close pursuer pairs.

    Pairs (i < j) in index order; each member of a pair at distance d below
    the trigger moves k_rep * (trigger - d) / 2 along the separation axis.
    Displaced poses are re-projected out of obstacles and walls. No damping,
    no flags: this is positional anti-bunching, not an impact.
    """
    p = config.physics
    pos = [[a.x_m, a.y_m] for a in pursuers]
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            dx = pos[j][0] - pos[i][0]
            dy = pos[j][1] - pos[i][1]
            d = math.hypot(dx, dy)
            if d >= p.repulsion_trigger_m:
                continue
            if d < 1e-12:
                ax, ay = 1.0, 0.0  # coincident pair: push along +x
            else:
                ax, ay = dx / d, dy / d
            push = p.k_rep * (p.repulsion_trigger_m - d) / 2.0
            pos[i][0] -= ax * push
            pos[i][1] -= ay * push
            pos[j][0] += ax * push
            pos[j][1] += ay * push
    out = []
    for a, (x, y) in zip(pursuers, pos):
        if x != a.x_m or y != a.y_m:
            x, y = _project_clear(x, y, config, fallback=(a.x_m, a.y_m))
        out.append(a.moved_to(x, y))
    return out


def check_capture(pursuers, evader, d_cap: float) -> bool:
    """Capture iff any pursuer is strictly closer than d_cap."""
    for p in pursuers:
        if math.hypot(p.x_m - evader.x_m, p.y_m - evader.y_m) < d_cap:
            return True
    return False


@dataclass(frozen=True)
class StepOutcome:
    """Per-step physics events, agent-indexed pursuers first then evader."""

    wall_hit: tuple[bool, ...]
    obstacle_hit: tuple[bool, ...]
    teammate_hit: tuple[bool, ...]
    displacement_m: tuple[tuple[float, float], ...]
    captured: bool
    clean_capture: bool

    def collided(self, i: int) -> bool:
        return self.wall_hit[i] or self.obstacle_hit[i] or self.teammate_hit[i]


def step_world(world: WorldState, pursuer_actions, evader_action,
               config: ScenarioConfig,
               prior_collision: bool = False) -> tuple[WorldState, StepOutcome]:
    """Advance the world one step.

    Order: integrate everyone, resolve wall/obstacle contacts, apply pursuer
    repulsion, flag teammate contacts, check capture. prior_collision feeds
    the clean-capture flag (any pursuer collision earlier in the episode).
    """
    stage = config.stage
    new_pursuers: list[AgentState] = []
    wall: list[bool] = []
    obst: list[bool] = []
    for st, act in zip(world.pursuers, pursuer_actions):
        prop = integrate(st, act, config.dt_s, config.v_max_pursuer_mps)
        st2, w, o = _resolve_agent(st, prop, config)
        new_pursuers.append(st2)
        wall.append(w)
        obst.append(o)
    eprop = integrate(world.evader, evader_action, config.dt_s,
                      stage.evader_v_max_mps)
    ev2, ew, eo = _resolve_agent(world.evader, eprop, config)
    wall.append(ew)
    obst.append(eo)

    new_pursuers = apply_repulsion(new_pursuers, config)

    n = len(new_pursuers)
    mate = [False] * (n + 1)  # the evader never carries a teammate flag
    touch = 2.0 * config.agent_radius_m
    for i in range(n):
        for j in range(i + 1, n):
            d = math.hypot(new_pursuers[i].x_m - new_pursuers[j].x_m,
                           new_pursuers[i].y_m - new_pursuers[j].y_m)
            if d < touch:
                mate[i] = True
                mate[j] = True

    captured = check_capture(new_pursuers, ev2, config.d_cap_m)
    pursuer_collision = any(wall[:n]) or any(obst[:n]) or any(mate[:n])
    clean = captured and not prior_collision and not pursuer_collision

    step2 = world.step + 1
    world2 = WorldState(
        pursuers=tuple(new_pursuers),
        evader=ev2,
        step=step2,
        captured=world.captured or captured,
        capture_step=world.capture_step if world.captured
        else (step2 if captured else None),
    )
    displacement = tuple(
        (a2.x_m - a1.x_m, a2.y_m - a1.y_m)
        for a1, a2 in zip(world.agents, world2.agents))
    outcome = StepOutcome(
        wall_hit=tuple(wall),
        obstacle_hit=tuple(obst),
        teammate_hit=tuple(mate),
        displacement_m=displacement,
        captured=captured,
        clean_capture=clean,
    )
    return world2, outcome
