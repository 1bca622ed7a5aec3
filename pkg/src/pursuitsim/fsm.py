"""Per-agent hierarchical mode machine: Pursuit vs Exploration sub-states."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import FsmParams
from .errors import SweepComplete
from .sensing import LkpRecord, nearest_unknown_in_disc, unknown_in_disc

PURSUIT = "pursuit"
EXPLORATION = "exploration"

AWAITING = "awaiting"
APPROACH = "approach"
SWEEP = "sweep"


@dataclass
class SweepState:
    anchor: tuple[float, float]
    steps_in_sweep: int = 0


@dataclass
class AgentMode:
    """Current mode of one pursuer.

    goal is the locked frontier point while exploring (approach and sweep);
    pursuit holds no lock.
    """

    top: str = EXPLORATION
    sub: str | None = AWAITING
    goal: tuple[float, float] | None = None
    sweep: SweepState | None = None


def assign_goal(mode: AgentMode, goal: tuple[float, float]) -> AgentMode:
    """Allocator callback: a requested goal arrived, start approaching."""
    return AgentMode(EXPLORATION, APPROACH, goal, None)


def fsm_step(mode: AgentMode, position: tuple[float, float], visible: bool,
             lkp: LkpRecord, unknown_mask: np.ndarray, resolution: float,
             params: FsmParams) -> tuple[AgentMode, list[str]]:
    """One transition evaluation. Returns (new mode, events).

    Events: "request" (needs a goal this step) and "unlock" (releases its
    locked goal). Target knowledge (a live detection or a valid LKP) preempts
    everything instantly; losing it falls back to exploration through a fresh
    request. unknown_mask flags the cells still worth observing; sweeps end
    when their disc holds none of them or after sweep_max_steps.
    """
    events: list[str] = []
    target_known = visible or lkp.valid

    if mode.top == PURSUIT:
        if target_known:
            return mode, events
        mode = AgentMode(EXPLORATION, AWAITING, None, None)
        events.append("request")
        return mode, events

    if target_known:
        if mode.goal is not None:
            events.append("unlock")
        return AgentMode(PURSUIT, None, None, None), events

    if mode.sub == AWAITING:
        events.append("request")
        return mode, events

    if mode.sub == APPROACH:
        gx, gy = mode.goal
        # the target area may have been observed en route; a sweep there
        # would be informationless, so release and re-request
        if not unknown_in_disc(unknown_mask, resolution, mode.goal,
                               params.sweep_radius_m):
            events.append("unlock")
            events.append("request")
            return AgentMode(EXPLORATION, AWAITING, None, None), events
        if math.hypot(position[0] - gx, position[1] - gy) < params.d_approach_m:
            return AgentMode(EXPLORATION, SWEEP, mode.goal,
                             SweepState(anchor=mode.goal)), events
        return mode, events

    if mode.sub == SWEEP:
        sw = mode.sweep
        sw.steps_in_sweep += 1
        done = sw.steps_in_sweep >= params.sweep_max_steps
        if not done and not unknown_in_disc(unknown_mask, resolution,
                                            sw.anchor,
                                            params.sweep_radius_m):
            done = True
        if done:
            events.append("unlock")
            events.append("request")
            return AgentMode(EXPLORATION, AWAITING, None, None), events
        return mode, events

    raise ValueError(f"invalid mode {mode!r}")


def pursuit_goal(visible: bool, evader_pos: tuple[float, float],
                 lkp: LkpRecord) -> tuple[float, float]:
    """Chase the live detection when available, otherwise the stored LKP."""
    if visible:
        return evader_pos
    return (lkp.x_m, lkp.y_m)


def sweep_goal(mode: AgentMode, position: tuple[float, float],
               unknown_mask: np.ndarray, resolution: float,
               params: FsmParams) -> tuple[float, float]:
    """Nearest observable-Unknown cell center inside the sweep disc.

    Raises SweepComplete when the disc holds nothing left to observe; the
    step loop treats that as the sweep's natural end (it cannot normally
    happen mid-step because the transition check runs on the same mask).
    """
    cell = nearest_unknown_in_disc(unknown_mask, resolution, mode.sweep.anchor,
                                   params.sweep_radius_m, position)
    if cell is None:
        raise SweepComplete(f"sweep at {mode.sweep.anchor} has no cells left")
    ix, iy = cell
    return ((ix + 0.5) * resolution, (iy + 0.5) * resolution)
