"""Bundled desk fixtures: the 5-bus case and its stressed daily chronics.

The 5-bus network has one cheap corridor (line 1, substation 1 to 3) that
overloads on afternoon peaks. Left alone, its protection opens it and the
remaining corridor out of the slack cannot carry the load, so the grid
collapses. Splitting substation 3 so that line 1 feeds only the local load
relieves the corridor.
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

import numpy as np

from .env.chronics import Chronics, write_chronics
from .grid.case import GridCase, load_case

DATA = files("safegrid") / "data"

STEPS_PER_DAY = 288
STEP_MINUTES = 5.0


def bundled_case(name: str) -> GridCase:
    return load_case((DATA / f"{name}.yaml").read_text())


def case_text(name: str) -> str:
    return (DATA / f"{name}.yaml").read_text()


def daily_profile(peak: float, trough: float = 0.7, peak_hour: float = 15.0,
                  width: float = 3.5) -> np.ndarray:
    """Load multiplier over one day of 5-minute steps with an afternoon peak."""
    hours = np.arange(STEPS_PER_DAY) * STEP_MINUTES / 60.0
    return trough + (peak - trough) * np.exp(-(((hours - peak_hour) / width) ** 2))


def stressed_chronics(case: GridCase, days: int = 8, seed: int = 7,
                      peak_range: tuple[float, float] = (1.25, 1.4),
                      noise: float = 0.01) -> Chronics:
    """Daily chronics whose peaks push the base topology past its ratings.

    Non-slack generators follow the load multiplier; the slack reference is
    the lossless balance of the remaining demand.
    """
    rng = np.random.default_rng(seed)
    scales = []
    for _ in range(days):
        peak = rng.uniform(*peak_range)
        scales.append(daily_profile(peak))
    scale = np.concatenate(scales + [scales[-1][-1:]])
    rows = scale.size
    nominal_p = np.array([ld.p for ld in case.loads])
    nominal_q = np.array([ld.q for ld in case.loads])
    jitter = 1.0 + noise * rng.standard_normal((rows, len(case.loads)))
    load_p = scale[:, None] * nominal_p[None, :] * jitter
    load_q = scale[:, None] * nominal_q[None, :] * jitter

    slack_id = case.slack_generator.id
    gen_ids = tuple(g.id for g in case.generators)
    gen_p = np.zeros((rows, len(gen_ids)))
    for j, g in enumerate(case.generators):
        if g.id != slack_id:
            gen_p[:, j] = np.clip(scale * g.p, g.pmin, g.pmax)
    slack_col = gen_ids.index(slack_id)
    gen_p[:, slack_col] = load_p.sum(axis=1) - gen_p.sum(axis=1)
    return Chronics(
        load_ids=tuple(ld.id for ld in case.loads),
        gen_ids=gen_ids,
        load_p=load_p,
        load_q=load_q,
        gen_p=gen_p,
        gen_q=np.zeros_like(gen_p),
        step_minutes=STEP_MINUTES,
        horizon=STEPS_PER_DAY,
    )


def constant_chronics(case: GridCase, rows: int, scale: float = 1.0,
                      horizon: int | None = None) -> Chronics:
    """Flat chronics at ``scale`` times the case nominal dispatch."""
    load_p = np.tile([ld.p * scale for ld in case.loads], (rows, 1))
    load_q = np.tile([ld.q * scale for ld in case.loads], (rows, 1))
    gen_p = np.tile([g.p * scale for g in case.generators], (rows, 1))
    return Chronics(
        load_ids=tuple(ld.id for ld in case.loads),
        gen_ids=tuple(g.id for g in case.generators),
        load_p=load_p,
        load_q=load_q,
        gen_p=gen_p,
        gen_q=np.zeros_like(gen_p),
        step_minutes=STEP_MINUTES,
        horizon=horizon or rows - 1,
    )


def write_fixtures(out_dir: str | Path) -> dict[str, Path]:
    """Write the 5-bus case, its stressed chronics and the desk config.

    The config names the data files relative to itself.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    case_path = out / "case5.yaml"
    case_path.write_text(case_text("case5"))
    chron_path = out / "case5_stressed.csv"
    write_chronics(stressed_chronics(bundled_case("case5")), chron_path)
    config_path = out / "desk.ini"
    text = (DATA / "desk.ini").read_text()
    text = text.replace("case = bundled:case5", f"case = {case_path.name}")
    text = text.replace("chronics = bundled:case5_stressed", f"chronics = {chron_path.name}")
    config_path.write_text(text)
    return {"case": case_path, "chronics": chron_path, "config": config_path}
