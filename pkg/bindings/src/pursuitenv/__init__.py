"""Gym-style environment bindings over the pursuitsim episode loop."""
from .env import SCHEMA, PursuitEnv

__all__ = ["PursuitEnv", "SCHEMA"]
