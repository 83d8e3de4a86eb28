"""Time-series of demands and generator references driving an episode.

On disk a chronics set is a headered CSV with one row per step and the
columns ``load_<id>_p``, ``gen_<id>_p`` and ``gen_<id>_q`` (optional
``load_<id>_q``), plus a YAML sidecar with ``step_minutes`` and
``horizon`` next to it (same stem, ``.yaml`` suffix).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from ..grid.case import GridCase


class ChronicsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Chronics:
    load_ids: tuple[int, ...]
    gen_ids: tuple[int, ...]
    load_p: np.ndarray  # (rows, loads) MW
    load_q: np.ndarray  # (rows, loads) MVAr
    gen_p: np.ndarray  # (rows, gens) MW reference
    gen_q: np.ndarray  # (rows, gens) MVAr set-points
    step_minutes: float
    horizon: int

    def __post_init__(self):
        rows = self.load_p.shape[0]
        if rows < self.horizon:
            raise ChronicsError(f"{rows} rows is fewer than the horizon {self.horizon}")
        if np.any(self.load_p < 0):
            raise ChronicsError("negative demand in chronics")
        if self.step_minutes <= 0 or self.horizon <= 0:
            raise ChronicsError("step_minutes and horizon must be positive")

    @property
    def n_rows(self) -> int:
        return self.load_p.shape[0]

    def row(self, t: int) -> tuple[dict, dict, dict, dict]:
        """Element dictionaries (load_p, load_q, gen_p, gen_q) of row ``t``."""
        if not 0 <= t < self.n_rows:
            raise IndexError(f"chronics row {t} outside [0, {self.n_rows})")
        return (
            dict(zip(self.load_ids, self.load_p[t].tolist())),
            dict(zip(self.load_ids, self.load_q[t].tolist())),
            dict(zip(self.gen_ids, self.gen_p[t].tolist())),
            dict(zip(self.gen_ids, self.gen_q[t].tolist())),
        )

    def check_case(self, case: GridCase) -> None:
        missing_l = {ld.id for ld in case.loads} - set(self.load_ids)
        missing_g = {g.id for g in case.generators} - set(self.gen_ids)
        if missing_l or missing_g:
            raise ChronicsError(
                f"chronics lack columns for loads {sorted(missing_l)} "
                f"and generators {sorted(missing_g)}"
            )


_COLUMN = re.compile(r"^(load|gen)_(\d+)_(p|q)$")


def read_chronics(path: str | Path, case: GridCase | None = None) -> Chronics:
    path = Path(path)
    sidecar = path.with_suffix(".yaml")
    if not sidecar.exists():
        raise ChronicsError(f"missing sidecar {sidecar}")
    meta = yaml.safe_load(sidecar.read_text()) or {}
    try:
        step_minutes = float(meta["step_minutes"])
        horizon = int(meta["horizon"])
    except (KeyError, TypeError, ValueError):
        raise ChronicsError(f"{sidecar}: needs numeric step_minutes and horizon") from None

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ChronicsError(f"{path}: empty file")
        columns = {}
        for i, name in enumerate(header):
            m = _COLUMN.match(name.strip())
            if not m:
                raise ChronicsError(f"{path}: unrecognised column '{name}'")
            columns[(m.group(1), int(m.group(2)), m.group(3))] = i
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ChronicsError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                raise ChronicsError(f"{path}:{lineno}: non-numeric field") from None
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(header))

    load_ids = tuple(sorted(i for k, i, q in columns if k == "load" and q == "p"))
    gen_ids = tuple(sorted(i for k, i, q in columns if k == "gen" and q == "p"))

    def block(kind, ids, quantity, fallback=None):
        out = np.zeros((data.shape[0], len(ids)))
        for j, ident in enumerate(ids):
            col = columns.get((kind, ident, quantity))
            if col is not None:
                out[:, j] = data[:, col]
            elif fallback is not None:
                out[:, j] = fallback(ident, j)
        return out

    load_p = block("load", load_ids, "p")

    def scaled_q(ident, j):
        # constant power factor from the case nominal values
        if case is None:
            return 0.0
        ld = case.load(ident)
        return load_p[:, j] * (ld.q / ld.p) if ld.p else 0.0

    chron = Chronics(
        load_ids=load_ids,
        gen_ids=gen_ids,
        load_p=load_p,
        load_q=block("load", load_ids, "q", scaled_q),
        gen_p=block("gen", gen_ids, "p"),
        gen_q=block("gen", gen_ids, "q", lambda i, j: 0.0),
        step_minutes=step_minutes,
        horizon=horizon,
    )
    if case is not None:
        chron.check_case(case)
    return chron


def write_chronics(chron: Chronics, path: str | Path) -> None:
    path = Path(path)
    header, cols = [], []
    for j, ident in enumerate(chron.load_ids):
        header += [f"load_{ident}_p", f"load_{ident}_q"]
        cols += [chron.load_p[:, j], chron.load_q[:, j]]
    for j, ident in enumerate(chron.gen_ids):
        header += [f"gen_{ident}_p", f"gen_{ident}_q"]
        cols += [chron.gen_p[:, j], chron.gen_q[:, j]]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in np.column_stack(cols):
            w.writerow([repr(float(v)) for v in row])
    path.with_suffix(".yaml").write_text(
        yaml.safe_dump({"step_minutes": chron.step_minutes, "horizon": chron.horizon})
    )
