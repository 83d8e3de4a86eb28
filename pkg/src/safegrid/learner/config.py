from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LearnerConfig:
    """Safety-SAC hyperparameters.

    ``lambda_init`` is the starting multiplier; the safety critic only
    receives gradient through ``lambda * L_c``. ``reward_scale`` multiplies
    rewards inside the critic targets. ``grad_clip`` (global norm, 0 = off)
    applies per update group.
    """

    gamma: float = 0.99
    alpha: float = 0.2
    beta: float = 1.0
    eps_c: float = 1.0
    lr_pi: float = 5e-5
    lr_q: float = 1e-4
    lr_lambda: float = 1e-3
    lr_e: float = 5e-5
    batch_size: int = 32
    buffer_capacity: int = 5000
    total_steps: int = 10000
    soft_rate: float = 0.005
    latent_dim: int = 128
    hidden_dim: int = 128
    n_hist: int = 6
    dropout: float = 0.1
    lambda_init: float = 1.0
    reward_scale: float = 1.0
    grad_clip: float = 0.0
    warmup: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        for name in ("beta", "lr_lambda", "lambda_init", "grad_clip", "warmup"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("lr_pi", "lr_q", "lr_e", "batch_size", "buffer_capacity", "total_steps",
                     "latent_dim", "hidden_dim", "n_hist", "reward_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.soft_rate <= 1.0:
            raise ValueError("soft_rate must lie in [0, 1]")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size exceeds buffer_capacity")
