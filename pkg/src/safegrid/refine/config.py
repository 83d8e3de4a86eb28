from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RefinementConfig:
    """Trigger, retry and prompt settings of the buffer refinement."""

    r_thr: float = 0.3
    f: int = 200
    K: int = 3
    N_LLM: int = 512
    top_k: int = 5
    overload_threshold: float = 100.0
    v_low: float = 0.95
    v_high: float = 1.05

    def __post_init__(self):
        if self.f < 1 or self.K < 1 or self.N_LLM < 1:
            raise ValueError("f, K and N_LLM must be at least 1")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if not self.v_low < self.v_high:
            raise ValueError("v_low must be below v_high")
