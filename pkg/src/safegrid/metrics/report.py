"""Run reports: aggregation, CSV round-trip and learning-curve figures.

CSV schema: header ``row,seed,offset,survival_step,cumulative_reward,
overload_rate,violation_rate,safety_cost_metric,fingerprint``. Episode rows
have ``row=episode``; two trailing rows ``mean`` and ``std`` (population)
aggregate every episode. Numbers are written with ``repr`` so they parse
back exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import EpisodeMetrics

FIELDS = ("survival_step", "cumulative_reward", "overload_rate", "violation_rate",
          "safety_cost_metric")
HEADER = ("row", "seed", "offset") + FIELDS + ("fingerprint",)


class ReportError(RuntimeError):
    pass


@dataclass
class RunReport:
    episodes: list[EpisodeMetrics] = field(default_factory=list)
    fingerprint: str = ""
    skipped: int = 0

    def values(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.episodes], dtype=float)

    def mean(self, name: str) -> float:
        return float(np.mean(self.values(name))) if self.episodes else float("nan")

    def std(self, name: str) -> float:
        return float(np.std(self.values(name))) if self.episodes else float("nan")

    def summary(self) -> dict[str, tuple[float, float]]:
        return {f: (self.mean(f), self.std(f)) for f in FIELDS}

    def extend(self, other: "RunReport") -> None:
        self.episodes += other.episodes
        self.skipped += other.skipped


def _opt(v) -> str:
    return "" if v is None else str(v)


def report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for i, e in enumerate(report.episodes):
        w.writerow([i, _opt(e.seed), _opt(e.offset)]
                   + [repr(e.survival_step)] + [repr(float(getattr(e, f))) for f in FIELDS[1:]]
                   + [report.fingerprint])
    if report.episodes:
        for kind, fn in (("mean", report.mean), ("std", report.std)):
            w.writerow([kind, "", ""] + [repr(fn(f)) for f in FIELDS] + [report.fingerprint])
    return buf.getvalue()


def parse_report_csv(text: str) -> tuple[RunReport, dict[str, dict[str, float]]]:
    """Inverse of :func:`report_csv`; returns the report and the aggregate rows."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != HEADER:
        raise ReportError("not a run report: unexpected header")
    report = RunReport()
    aggregates = {}
    for rec in rows[1:]:
        if not rec:
            continue
        report.fingerprint = rec[-1]
        nums = dict(zip(FIELDS, (float(x) for x in rec[3:3 + len(FIELDS)])))
        if rec[0] in ("mean", "std"):
            aggregates[rec[0]] = nums
            continue
        report.episodes.append(EpisodeMetrics(
            survival_step=int(nums["survival_step"]),
            cumulative_reward=nums["cumulative_reward"],
            overload_rate=nums["overload_rate"],
            violation_rate=nums["violation_rate"],
            safety_cost_metric=nums["safety_cost_metric"],
            seed=int(rec[1]) if rec[1] else None,
            offset=int(rec[2]) if rec[2] else None,
        ))
    return report, aggregates


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


CURVE_PANELS = (
    ("cumulative_reward", "episode reward"),
    ("survival_step", "survival step"),
    ("overload_rate", "overload rate (%)"),
    ("violation_rate", "violation rate (%)"),
)


def plot_learning_curves(curves: dict[str, list[tuple[int, float]]], path: str | Path,
                         provenance: str, title: str = "") -> Path:
    """Four-panel SVG of training metrics against training step.

    ``curves`` maps a run label to rows of ``(step, reward, survival,
    overload, violation)``; ``provenance`` is embedded as an XML comment.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, (_, label) in zip(axes.flat, CURVE_PANELS):
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    for run, rows in curves.items():
        if not rows:
            continue
        data = np.asarray(rows, dtype=float)
        for k, ax in enumerate(axes.flat):
            ax.plot(data[:, 0], data[:, k + 1], label=run, lw=1)
    for ax in axes[1]:
        ax.set_xlabel("training step")
    if len(curves) > 1:
        axes[0, 0].legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = buf.getvalue()
    comment = "<!-- provenance: " + provenance.replace("--", "- -") + " -->\n"
    head, sep, rest = svg.partition("?>\n")
    svg = head + sep + comment + rest if sep else comment + svg
    return write_text(path, svg)


def emit_report(report: RunReport, out_dir: str | Path, name: str = "eval",
                curves: dict | None = None, provenance: str = "") -> dict[str, Path]:
    out = Path(out_dir)
    paths = {"csv": write_text(out / f"{name}.csv", report_csv(report))}
    if curves:
        paths["svg"] = plot_learning_curves(curves, out / f"{name}_curves.svg", provenance)
    return paths
