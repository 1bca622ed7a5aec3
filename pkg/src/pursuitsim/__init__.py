"""Deterministic multi-robot pursuit-evasion simulator.

Three pursuers with local sensing cooperate against a scripted evader:
lidar scans feed a shared belief map, frontier clusters are allocated with
directional farthest-point sampling plus optimal assignment, A* paths drive
a guidance layer, and a mode machine arbitrates pursuit against exploration.
Every episode is a pure function of (config, seed).
"""

from ._kernels import get_backend
from .config import (CircularObstacle, CurriculumStage, ScenarioConfig,
                     default_stage_table, get_stage, load_config, save_config)
from .errors import (ConfigError, DegenerateWaypoint, EpisodeFinished,
                     GenerationFailed, InfeasibleMatrix, NoFrontiers,
                     PursuitSimError, SweepComplete)
from .physics import KinematicAction, StepOutcome, step_world, wrap_angle
from .rewards import (GAMMA, RewardBreakdown, build_observation,
                      observation_dim, observation_layout)
from .runner import (BatchReport, EpisodeResult, EpisodeSession, StepResult,
                     build_scenario, run_batch, run_episode)
from .sensing import FREE, OCCUPIED, UNKNOWN, BeliefMap, LkpRecord
from .world import (AgentState, WorldState, build_training_map,
                    generate_random_map, spawn_agents)

__version__ = "0.1.0"

__all__ = [
    "AgentState", "BatchReport", "BeliefMap", "CircularObstacle",
    "ConfigError", "CurriculumStage", "DegenerateWaypoint", "EpisodeFinished",
    "EpisodeResult", "EpisodeSession", "FREE", "GAMMA", "GenerationFailed",
    "InfeasibleMatrix", "KinematicAction", "LkpRecord", "NoFrontiers",
    "OCCUPIED", "PursuitSimError", "RewardBreakdown", "ScenarioConfig",
    "StepOutcome", "StepResult", "SweepComplete", "UNKNOWN", "WorldState",
    "build_observation", "build_scenario", "build_training_map",
    "default_stage_table", "generate_random_map", "get_backend", "get_stage",
    "load_config", "observation_dim", "observation_layout", "run_batch",
    "run_episode", "save_config", "spawn_agents", "step_world", "wrap_angle",
]
