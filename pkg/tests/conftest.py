import numpy as np
import pytest

from pursuitsim.config import CircularObstacle, ScenarioConfig
from pursuitsim.sensing import BeliefMap
from pursuitsim.world import AgentState


def make_config(width=10.0, height=10.0, obstacles=(), **kw):
    return ScenarioConfig(map_width_m=width, map_height_m=height,
                          obstacles=tuple(CircularObstacle(*o) for o in obstacles),
                          **kw)


def pursuer(x, y, theta=0.0, v=0.0, agent_id=0):
    return AgentState("pursuer", agent_id, x, y, theta, v)


def evader(x, y, theta=0.0, v=0.0):
    return AgentState("evader", 3, x, y, theta, v)


@pytest.fixture
def empty10():
    return make_config()


@pytest.fixture
def blank_belief(empty10):
    return BeliefMap(empty10)
