"""Mode machine transitions: pursuit preemption, approach, sweep lifecycle."""
import math

import numpy as np
import pytest

from pursuitsim.config import FsmParams
from pursuitsim.errors import SweepComplete
from pursuitsim.fsm import (APPROACH, AWAITING, EXPLORATION, PURSUIT, SWEEP,
                            AgentMode, SweepState, assign_goal, fsm_step,
                            pursuit_goal, sweep_goal)
from pursuitsim.sensing import LkpRecord

PARAMS = FsmParams()
RES = 0.25


def _mask(*cells, shape=(40, 40)):
    m = np.zeros(shape, dtype=bool)
    for ix, iy in cells:
        m[iy, ix] = True
    return m


def _no_lkp():
    return LkpRecord()


def test_visible_target_preempts_exploration():
    mode = AgentMode(EXPLORATION, APPROACH, (5.0, 5.0), None)
    out, events = fsm_step(mode, (1.0, 1.0), True, _no_lkp(),
                           _mask((20, 20)), RES, PARAMS)
    assert out.top == PURSUIT
    assert out.sub is None
    assert out.goal is None
    assert events == ["unlock"]


def test_valid_lkp_also_preempts():
    mode = AgentMode(EXPLORATION, AWAITING, None, None)
    lkp = LkpRecord(4.0, 4.0, 10, True)
    out, events = fsm_step(mode, (1.0, 1.0), False, lkp,
                           _mask((20, 20)), RES, PARAMS)
    assert out.top == PURSUIT
    assert events == []  # nothing was locked


def test_pursuit_holds_while_target_known():
    mode = AgentMode(PURSUIT, None, None, None)
    out, events = fsm_step(mode, (1.0, 1.0), True, _no_lkp(),
                           _mask((20, 20)), RES, PARAMS)
    assert out.top == PURSUIT
    assert events == []


def test_pursuit_lost_target_requests_goal():
    mode = AgentMode(PURSUIT, None, None, None)
    out, events = fsm_step(mode, (1.0, 1.0), False, _no_lkp(),
                           _mask((20, 20)), RES, PARAMS)
    assert out.top == EXPLORATION
    assert out.sub == AWAITING
    assert events == ["request"]


def test_awaiting_requests_every_step():
    mode = AgentMode(EXPLORATION, AWAITING, None, None)
    out, events = fsm_step(mode, (1.0, 1.0), False, _no_lkp(),
                           _mask((20, 20)), RES, PARAMS)
    assert out.sub == AWAITING
    assert events == ["request"]


def test_assign_goal_enters_approach():
    mode = assign_goal(AgentMode(), (3.0, 4.0))
    assert mode.top == EXPLORATION
    assert mode.sub == APPROACH
    assert mode.goal == (3.0, 4.0)


def test_approach_reaches_goal_starts_sweep():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, APPROACH, goal, None)
    # unknown cell right at the goal keeps the sweep worthwhile
    mask = _mask((20, 20))
    out, events = fsm_step(mode, (5.125, 3.225), False, _no_lkp(),
                           mask, RES, PARAMS)  # 1.9 m away < 2.0
    assert out.sub == SWEEP
    assert out.sweep.anchor == goal
    assert out.sweep.steps_in_sweep == 0
    assert events == []


def test_approach_beyond_handoff_distance_keeps_walking():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, APPROACH, goal, None)
    out, events = fsm_step(mode, (5.125, 3.0), False, _no_lkp(),
                           _mask((20, 20)), RES, PARAMS)  # 2.125 m away
    assert out.sub == APPROACH
    assert events == []


def test_approach_releases_stale_goal():
    # everything around the goal was observed en route: sweeping is pointless
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, APPROACH, goal, None)
    empty = np.zeros((40, 40), dtype=bool)
    out, events = fsm_step(mode, (1.0, 1.0), False, _no_lkp(),
                           empty, RES, PARAMS)
    assert out.sub == AWAITING
    assert out.goal is None
    assert events == ["unlock", "request"]


def test_approach_keeps_goal_with_unknown_outside_disc():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, APPROACH, goal, None)
    # the only unknown cell is 3 m from the goal: outside the 2 m sweep disc
    mask = _mask((32, 20))
    out, events = fsm_step(mode, (1.0, 1.0), False, _no_lkp(),
                           mask, RES, PARAMS)
    assert out.sub == AWAITING
    assert events == ["unlock", "request"]


def test_sweep_counts_steps_and_times_out():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 0))
    mask = _mask((20, 20))
    for i in range(49):
        mode, events = fsm_step(mode, (5.0, 5.0), False, _no_lkp(),
                                mask, RES, PARAMS)
        assert mode.sub == SWEEP, f"ended early on iteration {i}"
        assert events == []
    assert mode.sweep.steps_in_sweep == 49
    mode, events = fsm_step(mode, (5.0, 5.0), False, _no_lkp(),
                            mask, RES, PARAMS)
    assert mode.sub == AWAITING  # 50th increment hits the cap
    assert events == ["unlock", "request"]


def test_sweep_ends_when_disc_fully_observed():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 3))
    empty = np.zeros((40, 40), dtype=bool)
    out, events = fsm_step(mode, (5.0, 5.0), False, _no_lkp(),
                           empty, RES, PARAMS)
    assert out.sub == AWAITING
    assert out.goal is None
    assert events == ["unlock", "request"]


def test_sweep_preempted_by_detection_unlocks():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 10))
    out, events = fsm_step(mode, (5.0, 5.0), True, _no_lkp(),
                           _mask((20, 20)), RES, PARAMS)
    assert out.top == PURSUIT
    assert events == ["unlock"]


def test_lkp_expiry_mid_pursuit_falls_back():
    # an invalid (just expired) record no longer counts as target knowledge
    mode = AgentMode(PURSUIT, None, None, None)
    expired = LkpRecord(4.0, 4.0, 41, False)
    out, events = fsm_step(mode, (1.0, 1.0), False, expired,
                           _mask((20, 20)), RES, PARAMS)
    assert out.top == EXPLORATION
    assert events == ["request"]


# ------------------------------------------------------------------ goals


def test_pursuit_goal_prefers_live_detection():
    lkp = LkpRecord(1.0, 1.0, 5, True)
    assert pursuit_goal(True, (6.0, 7.0), lkp) == (6.0, 7.0)
    assert pursuit_goal(False, (6.0, 7.0), lkp) == (1.0, 1.0)


def test_sweep_goal_nearest_cell():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 0))
    mask = _mask((22, 20), (26, 20))  # 0.5 m and 1.5 m east of the anchor
    got = sweep_goal(mode, (5.125, 5.125), mask, RES, PARAMS)
    assert got == (5.625, 5.125)


def test_sweep_goal_tie_breaks_row_major():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 0))
    mask = _mask((20, 18), (20, 22))  # equidistant south and north
    got = sweep_goal(mode, (5.125, 5.125), mask, RES, PARAMS)
    assert got == (5.125, 4.625)  # lower row first


def test_sweep_goal_empty_disc_raises():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 0))
    with pytest.raises(SweepComplete):
        sweep_goal(mode, (5.125, 5.125), np.zeros((40, 40), dtype=bool),
                   RES, PARAMS)


def test_sweep_goal_measures_distance_from_agent_not_anchor():
    goal = (5.125, 5.125)
    mode = AgentMode(EXPLORATION, SWEEP, goal, SweepState(goal, 0))
    mask = _mask((23, 20), (17, 20))  # east and west cells inside the disc
    # agent stands east of the anchor: the east cell is closer to it
    got = sweep_goal(mode, (6.0, 5.125), mask, RES, PARAMS)
    assert got == (5.875, 5.125)
