from .metrics import EpisodeMetrics, compute_metrics, safety_cost_metric
from .report import (
    FIELDS,
    ReportError,
    RunReport,
    emit_report,
    parse_report_csv,
    plot_learning_curves,
    report_csv,
)
from .rollout import DoNothingPolicy, LearnerPolicy, rollout, run_episode

__all__ = [
    "EpisodeMetrics", "compute_metrics", "safety_cost_metric", "FIELDS", "ReportError",
    "RunReport", "emit_report", "parse_report_csv", "plot_learning_curves", "report_csv",
    "DoNothingPolicy", "LearnerPolicy", "rollout", "run_episode",
]
