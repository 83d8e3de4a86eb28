"""Episode-level evaluation metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

OVERLOAD_WEIGHT = 0.9
VIOLATION_WEIGHT = 0.1


@dataclass(frozen=True)
class EpisodeMetrics:
    """Rates are percentages of steps; ``survival_step`` counts completed steps."""

    survival_step: int
    cumulative_reward: float
    overload_rate: float
    violation_rate: float
    safety_cost_metric: float
    seed: int | None = None
    offset: int | None = None

    def __post_init__(self):
        if self.survival_step < 0:
            raise ValueError("survival_step must be nonnegative")
        for name in ("overload_rate", "violation_rate"):
            if not 0.0 <= getattr(self, name) <= 100.0:
                raise ValueError(f"{name} must lie in [0, 100]")

    def as_dict(self) -> dict:
        return asdict(self)


def safety_cost_metric(overload_rate: float, violation_rate: float,
                       w_overload: float = OVERLOAD_WEIGHT,
                       w_violation: float = VIOLATION_WEIGHT) -> float:
    return w_overload * overload_rate + w_violation * violation_rate


def _signals(item) -> tuple[float, float, float]:
    if hasattr(item, "r"):
        return item.r, item.c_v, item.c_l
    r, c_v, c_l = item
    return r, c_v, c_l


def compute_metrics(trace, seed: int | None = None, offset: int | None = None,
                    w_overload: float = OVERLOAD_WEIGHT,
                    w_violation: float = VIOLATION_WEIGHT) -> EpisodeMetrics:
    """Metrics of one episode from its transitions or ``(r, C_v, C_l)`` triples."""
    steps = [_signals(x) for x in trace]
    if not steps:
        raise ValueError("metrics need a nonempty trace")
    n = len(steps)
    overload = 100.0 * sum(1 for _, _, c_l in steps if c_l > 0) / n
    violation = 100.0 * sum(1 for _, c_v, _ in steps if c_v > 0) / n
    return EpisodeMetrics(
        survival_step=n,
        cumulative_reward=float(sum(r for r, _, _ in steps)),
        overload_rate=overload,
        violation_rate=violation,
        safety_cost_metric=safety_cost_metric(overload, violation, w_overload, w_violation),
        seed=seed,
        offset=offset,
    )
