from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env.signals import EnvConfig, compute_safety_cost


@dataclass(frozen=True, eq=False)
class Batch:
    obs: np.ndarray  # (B, D)
    actions: np.ndarray  # (B,) int
    rewards: np.ndarray
    costs: np.ndarray  # C = alpha_v C_v + alpha_l C_l
    next_obs: np.ndarray
    dones: np.ndarray  # 1.0 where the next state is terminal

    def __len__(self) -> int:
        return self.actions.shape[0]


def make_batch(transitions, config: EnvConfig) -> Batch:
    """Stack transitions that carry ``obs``, ``next_obs`` and ``action_index``."""
    return Batch(
        obs=np.stack([tr.obs for tr in transitions]),
        actions=np.array([tr.action_index for tr in transitions], dtype=int),
        rewards=np.array([tr.r for tr in transitions], dtype=float),
        costs=np.array([compute_safety_cost(tr.c_v, tr.c_l, config) for tr in transitions]),
        next_obs=np.stack([tr.next_obs for tr in transitions]),
        dones=np.array([1.0 if tr.s_next.terminal else 0.0 for tr in transitions]),
    )
