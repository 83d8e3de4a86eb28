from .actions import Action, canonical, enumerate_actions, full_configuration
from .chronics import Chronics, ChronicsError, read_chronics, write_chronics
from .core import EnvUsageError, GridState, TopologyEnv, Transition, UnusableEpisodeError
from .signals import (
    EnvConfig,
    blackout_reward,
    compute_reward,
    compute_safety_cost,
    load_generation_ratio,
    trajectory_objectives,
)

__all__ = [
    "Action", "canonical", "enumerate_actions", "full_configuration", "Chronics",
    "ChronicsError", "read_chronics", "write_chronics", "EnvUsageError", "GridState",
    "TopologyEnv", "Transition", "UnusableEpisodeError", "EnvConfig", "blackout_reward",
    "compute_reward", "compute_safety_cost", "load_generation_ratio",
    "trajectory_objectives",
]
