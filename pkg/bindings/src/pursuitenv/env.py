"""A thin reset/step/close/metadata wrapper around one simulator episode.

External trainers drive the three pursuers with per-agent [dtheta, dv]
actions; the evader policy and the frontier allocator stay inside the core.
Only flat numeric arrays and plain dicts cross the boundary.
"""
from __future__ import annotations

import numpy as np

from pursuitsim.config import ScenarioConfig, load_config
from pursuitsim.errors import ConfigError, EpisodeFinished
from pursuitsim.physics import DTHETA_MAX_RAD, DV_MAX_MPS
from pursuitsim.rewards import observation_dim
from pursuitsim.runner import EpisodeSession

SCHEMA = "pursuitenv/1"


class PursuitEnv:
    """One handle runs one episode at a time.

    reset() starts a fresh episode and returns the step-0 observation matrix,
    bit-identical to what the native runner computes for the same config and
    seed. step() applies one action per pursuer and returns the next
    observations, per-agent rewards, a done flag, and an info dict whose
    reward breakdowns and agent modes are plain dicts and string pairs.

    Out-of-range action values clamp silently to the per-step limits, exactly
    as the native runner clamps them; non-finite values are rejected. Every
    call after the episode ends (and any step or metadata call before the
    first reset, or after close) raises EpisodeFinished.
    """

    def __init__(self) -> None:
        self._session: EpisodeSession | None = None
        self._config: ScenarioConfig | None = None

    # Lifecycle ------------------------------------------------------------

    def reset(self, config, seed: int = 0) -> np.ndarray:
        """Start a new episode; returns the (n_pursuers, obs_dim) matrix.

        config may be a ScenarioConfig, a plain dict of its fields, or a path
        to a scenario YAML file. Validation errors propagate as ConfigError.
        """
        cfg = self._coerce(config)
        self._session = EpisodeSession(cfg, seed=seed)
        self._config = cfg
        return self._session.observations().copy()

    def step(self, actions):
        """Apply per-pursuer [dtheta, dv] and advance the episode one step."""
        session = self._require_session()
        acts = np.asarray(actions, dtype=float)
        want = (self._config.n_pursuers, 2)
        if acts.shape != want:
            raise ValueError(f"actions must have shape {want}, got {acts.shape}")
        if not np.isfinite(acts).all():
            raise ValueError("actions must be finite")
        out = session.step(acts)
        info = {
            "step": out.info["step"],
            "captured": out.info["captured"],
            "clean_capture": out.info["clean_capture"],
            "coverage": out.info["coverage"],
            "modes": out.info["modes"],
            "rewards": [
                {"mission": b.r_mission, "safety": b.r_safety,
                 "guide": b.r_guide, "explore": b.r_explore, "total": b.total}
                for b in out.info["breakdowns"]],
        }
        return out.obs.copy(), out.rewards.copy(), out.done, info

    def close(self) -> None:
        """Drop the episode; the handle can be reset again afterwards."""
        self._session = None
        self._config = None

    # Introspection ----------------------------------------------------------

    def metadata(self) -> dict:
        """Schema id, dimensions, action bounds, and the config echo."""
        if self._config is None:
            raise EpisodeFinished("no active episode: call reset() first")
        n = self._config.n_pursuers
        return {
            "schema": SCHEMA,
            "n_pursuers": n,
            "observation_dim": observation_dim(n),
            "action_shape": [n, 2],
            "action_low": [-DTHETA_MAX_RAD, -DV_MAX_MPS],
            "action_high": [DTHETA_MAX_RAD, DV_MAX_MPS],
            "dt_s": self._config.dt_s,
            "t_max_steps": self._config.t_max_steps,
            "config": self._config.to_dict(),
        }

    @property
    def done(self) -> bool:
        return self._session is not None and self._session.done

    @property
    def session(self) -> EpisodeSession:
        """The underlying episode session (read access for inspection)."""
        return self._require_session()

    def result(self):
        """The EpisodeResult once the episode has finished."""
        return self._require_session().result()

    def write_log(self, path: str) -> None:
        """Write the episode's trajectory log, same format as the native CLI."""
        self._require_session().write_log(path)

    # Internals --------------------------------------------------------------

    def _require_session(self) -> EpisodeSession:
        if self._session is None:
            raise EpisodeFinished("no active episode: call reset() first")
        return self._session

    @staticmethod
    def _coerce(config) -> ScenarioConfig:
        if isinstance(config, ScenarioConfig):
            return config
        if isinstance(config, dict):
            return ScenarioConfig.from_dict(config)
        if isinstance(config, str):
            return load_config(config)
        raise ConfigError(
            f"config must be a ScenarioConfig, dict, or YAML path, "
            f"got {type(config).__name__}")
