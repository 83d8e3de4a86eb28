"""Reward, safety cost and trajectory objectives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvConfig:
    """Episode and signal parameters.

    ``overflow_window`` is the number of consecutive overloaded steps a line
    tolerates before its protection opens it; a line above
    ``hard_overflow`` times its rating opens at once. Set ``protection``
    to False to disable tripping.
    """

    penalty: float = 1.0
    alpha_v: float = 0.9
    alpha_l: float = 0.1
    kappa: float = 1.0
    max_episode_length: int = 288
    cooldown_steps: int = 3
    protection: bool = True
    overflow_window: int = 2
    hard_overflow: float = 2.0
    blackout_penalty: bool = True
    pf_tolerance: float = 1e-8
    pf_max_iterations: int = 20

    def __post_init__(self):
        for name in ("penalty", "alpha_v", "alpha_l", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.max_episode_length <= 0:
            raise ValueError("max_episode_length must be positive")
        if self.cooldown_steps < 0 or self.overflow_window < 0:
            raise ValueError("cooldown_steps and overflow_window must be nonnegative")


def load_generation_ratio(load: np.ndarray, gen: np.ndarray) -> float:
    """Sum of per-bus load/generation ratios with a guard for pure-load buses.

    Buses with generation contribute ``L_p / P_p``; the demand of buses
    without generation enters once as ``sum(L_pure) / sum(P)``.
    """
    load = np.asarray(load, dtype=float)
    gen = np.asarray(gen, dtype=float)
    has_gen = gen != 0
    total = float(np.sum(load[has_gen] / gen[has_gen]))
    pure = float(np.sum(load[~has_gen]))
    if pure:
        total_gen = float(np.sum(gen))
        total += pure / total_gen if total_gen else np.inf
    return total


def compute_reward(gen, gen_ref, load, config: EnvConfig, dt: float) -> float:
    """Per-step reward from per-bus generation, references and demand (p.u.)."""
    tracking = float(np.sum((np.asarray(gen, float) - np.asarray(gen_ref, float)) ** 2))
    return -load_generation_ratio(load, gen) - config.penalty * dt * tracking


def blackout_reward(gen_ref_rows, config: EnvConfig, dt: float) -> float:
    """Tracking penalty with zero output from the failure step to the episode end.

    ``gen_ref_rows`` is (steps, gens) in p.u.
    """
    if not config.blackout_penalty:
        return 0.0
    return -config.penalty * dt * float(np.sum(np.asarray(gen_ref_rows, float) ** 2))


def compute_safety_cost(c_v: float, c_l: float, config: EnvConfig) -> float:
    return config.alpha_v * c_v + config.alpha_l * c_l


def trajectory_objectives(transitions, config: EnvConfig) -> tuple[float, float, float]:
    """Return ``(J_op, J_safe, J)`` for a nonempty list of transitions."""
    if not transitions:
        raise ValueError("trajectory objectives need at least one transition")
    j_op = -sum(tr.r for tr in transitions)
    j_safe = sum(compute_safety_cost(tr.c_v, tr.c_l, config) for tr in transitions)
    j_safe /= len(transitions)
    return j_op, j_safe, j_op + config.kappa * j_safe
