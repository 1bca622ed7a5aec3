"""Exception types shared across the simulator."""


class PursuitSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(PursuitSimError):
    """Scenario or stage configuration failed validation."""


class GenerationFailed(PursuitSimError):
    """Random map rejection sampling exhausted its attempt budget."""


class NoFrontiers(PursuitSimError):
    """Frontier extraction produced no admissible clusters."""


class InfeasibleMatrix(PursuitSimError):
    """Assignment cost matrix has a row with no finite entry."""


class DegenerateWaypoint(PursuitSimError):
    """Guidance requested for a waypoint coincident with the agent."""


class SweepComplete(PursuitSimError):
    """No unknown cells remain inside the active sweep disc."""


class EpisodeFinished(PursuitSimError):
    """step() called on a session whose episode already ended."""
