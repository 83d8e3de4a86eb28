"""Static network description and the YAML case-file loader.

Case files are a single YAML document with the sections ``buses``,
``substations``, ``lines``, ``generators``, ``loads`` and ``slack``.
Line parameters are per-unit on ``base_mva``; generator and load powers
are MW / MVAr. See ``docs/case_schema.md`` for the full field list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml


class CaseError(ValueError):
    """Malformed case text (syntax, missing field, bad type or dangling id)."""


class CaseInvariantError(CaseError):
    """Well-formed case text that violates a physical or structural invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    substation: int
    vmin: float = 0.95
    vmax: float = 1.05
    base_kv: float = 1.0


@dataclass(frozen=True)
class Substation:
    id: int
    controllable: bool = True


@dataclass(frozen=True)
class Line:
    id: int
    from_sub: int
    to_sub: int
    r: float
    x: float
    b: float
    imax: float


@dataclass(frozen=True)
class Generator:
    id: int
    substation: int
    pmin: float
    pmax: float
    p: float = 0.0
    q: float = 0.0
    vset: float | None = 1.0

    @property
    def is_pv(self) -> bool:
        return self.vset is not None


@dataclass(frozen=True)
class Load:
    id: int
    substation: int
    p: float = 0.0
    q: float = 0.0


@dataclass(frozen=True)
class GridCase:
    name: str
    base_mva: float
    buses: tuple[Bus, ...]
    substations: tuple[Substation, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    slack_bus: int
    _sub_elements: dict[int, tuple[str, ...]] = field(
        init=False, repr=False, compare=False
    )
    _index: dict[str, dict] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        elements: dict[int, list[str]] = {s.id: [] for s in self.substations}
        for ln in self.lines:
            elements[ln.from_sub].append(line_or_key(ln.id))
            elements[ln.to_sub].append(line_ex_key(ln.id))
        for g in self.generators:
            elements[g.substation].append(gen_key(g.id))
        for ld in self.loads:
            elements[ld.substation].append(load_key(ld.id))
        object.__setattr__(
            self, "_sub_elements", {k: tuple(v) for k, v in elements.items()}
        )
        index = {
            "line": {ln.id: ln for ln in self.lines},
            "gen": {g.id: g for g in self.generators},
            "load": {ld.id: ld for ld in self.loads},
            "bus_of_sub": {b.substation: b for b in self.buses},
        }
        object.__setattr__(self, "_index", index)

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def element_keys(self) -> tuple[str, ...]:
        return tuple(k for s in self.substations for k in self._sub_elements[s.id])

    def substation_elements(self, sub_id: int) -> tuple[str, ...]:
        return self._sub_elements[sub_id]

    def element_substation(self, key: str) -> int:
        kind, ident = split_key(key)
        if kind == "line_or":
            return self.line(ident).from_sub
        if kind == "line_ex":
            return self.line(ident).to_sub
        if kind == "gen":
            return self.generator(ident).substation
        if kind == "load":
            return self.load(ident).substation
        raise KeyError(key)

    def line(self, line_id: int) -> Line:
        return self._index["line"][line_id]

    def generator(self, gen_id: int) -> Generator:
        return self._index["gen"][gen_id]

    def load(self, load_id: int) -> Load:
        return self._index["load"][load_id]

    def bus_of_substation(self, sub_id: int) -> Bus:
        return self._index["bus_of_sub"][sub_id]

    @property
    def slack_substation(self) -> int:
        return next(b.substation for b in self.buses if b.id == self.slack_bus)

    @property
    def slack_generator(self) -> Generator:
        sub = self.slack_substation
        return next(g for g in self.generators if g.substation == sub)

    @property
    def controllable_substations(self) -> tuple[int, ...]:
        return tuple(s.id for s in self.substations if s.controllable)


def line_or_key(line_id: int) -> str:
    return f"line_or:{line_id}"


def line_ex_key(line_id: int) -> str:
    return f"line_ex:{line_id}"


def gen_key(gen_id: int) -> str:
    return f"gen:{gen_id}"


def load_key(load_id: int) -> str:
    return f"load:{load_id}"


def split_key(key: str) -> tuple[str, int]:
    kind, _, ident = key.partition(":")
    return kind, int(ident)


_SECTIONS = ("buses", "substations", "lines", "generators", "loads", "slack")


def _field(entry: dict, name: str, where: str, kind=float, default=...):
    if name not in entry:
        if default is ...:
            raise CaseError(f"{where}: missing field '{name}'")
        return default
    value = entry[name]
    if value is None and default is None:
        return None
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise TypeError
        return kind(value)
    except (TypeError, ValueError):
        raise CaseError(
            f"{where}: field '{name}' expects {kind.__name__}, got {value!r}"
        ) from None


def _entries(doc: dict, section: str) -> list[dict]:
    items = doc.get(section)
    if items is None:
        return []
    if not isinstance(items, list):
        raise CaseError(f"section '{section}' must be a list")
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise CaseError(f"{section}[{i}]: expected a mapping, got {item!r}")
    return items


def load_case(text: str) -> GridCase:
    """Parse case-file text into a validated :class:`GridCase`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise CaseError(f"case text is not valid YAML{loc}: {exc}") from None
    if not isinstance(doc, dict):
        raise CaseError("case text must be a mapping with the case sections")
    missing = [s for s in _SECTIONS if s not in doc]
    if missing:
        raise CaseError(f"missing section(s): {', '.join(missing)}")

    buses = tuple(
        Bus(
            id=_field(e, "id", f"buses[{i}]", int),
            substation=_field(e, "substation", f"buses[{i}]", int),
            vmin=_field(e, "vmin", f"buses[{i}]", float, 0.95),
            vmax=_field(e, "vmax", f"buses[{i}]", float, 1.05),
            base_kv=_field(e, "base_kv", f"buses[{i}]", float, 1.0),
        )
        for i, e in enumerate(_entries(doc, "buses"))
    )
    subs = tuple(
        Substation(
            id=_field(e, "id", f"substations[{i}]", int),
            controllable=_field(e, "controllable", f"substations[{i}]", bool, True),
        )
        for i, e in enumerate(_entries(doc, "substations"))
    )
    lines = tuple(
        Line(
            id=_field(e, "id", f"lines[{i}]", int),
            from_sub=_field(e, "from", f"lines[{i}]", int),
            to_sub=_field(e, "to", f"lines[{i}]", int),
            r=_field(e, "r", f"lines[{i}]"),
            x=_field(e, "x", f"lines[{i}]"),
            b=_field(e, "b", f"lines[{i}]", float, 0.0),
            imax=_field(e, "imax", f"lines[{i}]"),
        )
        for i, e in enumerate(_entries(doc, "lines"))
    )
    gens = tuple(
        Generator(
            id=_field(e, "id", f"generators[{i}]", int),
            substation=_field(e, "substation", f"generators[{i}]", int),
            pmin=_field(e, "pmin", f"generators[{i}]", float, 0.0),
            pmax=_field(e, "pmax", f"generators[{i}]"),
            p=_field(e, "p", f"generators[{i}]", float, 0.0),
            q=_field(e, "q", f"generators[{i}]", float, 0.0),
            vset=_field(e, "vset", f"generators[{i}]", float, None)
            if "vset" in e
            else 1.0,
        )
        for i, e in enumerate(_entries(doc, "generators"))
    )
    loads = tuple(
        Load(
            id=_field(e, "id", f"loads[{i}]", int),
            substation=_field(e, "substation", f"loads[{i}]", int),
            p=_field(e, "p", f"loads[{i}]", float, 0.0),
            q=_field(e, "q", f"loads[{i}]", float, 0.0),
        )
        for i, e in enumerate(_entries(doc, "loads"))
    )
    try:
        slack = int(doc["slack"])
    except (TypeError, ValueError):
        raise CaseError(f"slack: expected a bus id, got {doc['slack']!r}") from None

    sub_ids = {s.id for s in subs}
    for ln in lines:
        for end in (ln.from_sub, ln.to_sub):
            if end not in sub_ids:
                raise CaseError(f"line {ln.id}: unknown substation {end}")
    for b in buses:
        if b.substation not in sub_ids:
            raise CaseError(f"bus {b.id}: unknown substation {b.substation}")
    for g in gens:
        if g.substation not in sub_ids:
            raise CaseError(f"generator {g.id}: unknown substation {g.substation}")
    for ld in loads:
        if ld.substation not in sub_ids:
            raise CaseError(f"load {ld.id}: unknown substation {ld.substation}")

    case = GridCase(
        name=str(doc.get("name", "case")),
        base_mva=_field(doc, "base_mva", "case", float, 100.0),
        buses=buses,
        substations=subs,
        lines=lines,
        generators=gens,
        loads=loads,
        slack_bus=slack,
    )
    validate_case(case)
    return case


def read_case(path: str | Path) -> GridCase:
    return load_case(Path(path).read_text())


def _no_duplicates(kind: str, ids) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise CaseInvariantError(f"duplicate {kind} id {i}")
        seen.add(i)


def validate_case(case: GridCase) -> None:
    """Check the structural and physical invariants; raise on the first offender."""
    if not case.buses:
        raise CaseInvariantError("case has no buses")
    if not case.substations:
        raise CaseInvariantError("case has no substations")
    if case.base_mva <= 0:
        raise CaseInvariantError(f"base_mva must be positive, got {case.base_mva}")
    _no_duplicates("bus", [b.id for b in case.buses])
    _no_duplicates("substation", [s.id for s in case.substations])
    _no_duplicates("line", [ln.id for ln in case.lines])
    _no_duplicates("generator", [g.id for g in case.generators])
    _no_duplicates("load", [ld.id for ld in case.loads])

    hosted = [b.substation for b in case.buses]
    _no_duplicates("bus substation", hosted)
    orphan = {s.id for s in case.substations} - set(hosted)
    if orphan:
        raise CaseInvariantError(f"substation {min(orphan)} has no bus")

    for b in case.buses:
        if not 0 < b.vmin < b.vmax:
            raise CaseInvariantError(
                f"bus {b.id}: voltage limits must satisfy 0 < vmin < vmax"
            )
        if b.base_kv <= 0:
            raise CaseInvariantError(f"bus {b.id}: base_kv must be positive")
    for ln in case.lines:
        if ln.r < 0:
            raise CaseInvariantError(f"line {ln.id}: negative resistance")
        if ln.x == 0:
            raise CaseInvariantError(f"line {ln.id}: zero reactance")
        if ln.imax <= 0:
            raise CaseInvariantError(f"line {ln.id}: thermal rating must be positive")
        if ln.from_sub == ln.to_sub:
            raise CaseInvariantError(f"line {ln.id}: both ends on substation {ln.to_sub}")
    for g in case.generators:
        if g.pmin > g.pmax:
            raise CaseInvariantError(f"generator {g.id}: pmin exceeds pmax")
        if g.vset is not None and g.vset <= 0:
            raise CaseInvariantError(f"generator {g.id}: vset must be positive")
    for ld in case.loads:
        if ld.p < 0:
            raise CaseInvariantError(f"load {ld.id}: negative demand")

    slack = [b for b in case.buses if b.id == case.slack_bus]
    if len(slack) != 1:
        raise CaseInvariantError(f"slack bus {case.slack_bus} is not a bus of the case")
    sub = slack[0].substation
    slack_gens = [g for g in case.generators if g.substation == sub]
    if not slack_gens:
        raise CaseInvariantError(f"slack bus {case.slack_bus} hosts no generator")
    if slack_gens[0].vset is None:
        raise CaseInvariantError(
            f"slack generator {slack_gens[0].id} needs a voltage set-point"
        )


def dump_case(case: GridCase) -> str:
    """Serialize a case back to case-file text."""
    doc = {
        "name": case.name,
        "base_mva": case.base_mva,
        "slack": case.slack_bus,
        "buses": [
            {"id": b.id, "substation": b.substation, "vmin": b.vmin, "vmax": b.vmax,
             "base_kv": b.base_kv}
            for b in case.buses
        ],
        "substations": [
            {"id": s.id, "controllable": s.controllable} for s in case.substations
        ],
        "lines": [
            {"id": ln.id, "from": ln.from_sub, "to": ln.to_sub, "r": ln.r, "x": ln.x,
             "b": ln.b, "imax": ln.imax}
            for ln in case.lines
        ],
        "generators": [
            {"id": g.id, "substation": g.substation, "pmin": g.pmin, "pmax": g.pmax,
             "p": g.p, "q": g.q, "vset": g.vset}
            for g in case.generators
        ],
        "loads": [
            {"id": ld.id, "substation": ld.substation, "p": ld.p, "q": ld.q}
            for ld in case.loads
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
