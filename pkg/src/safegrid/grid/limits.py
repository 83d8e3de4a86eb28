from __future__ import annotations

from dataclasses import dataclass

from .case import GridCase
from .powerflow import PowerFlowSolution


@dataclass(frozen=True)
class LimitReport:
    """Voltage and thermal violation fractions of one solved operating point.

    ``violating_buses`` holds ``(bus_id, V)`` with the most extreme busbar
    voltage of the bus; ``overloaded_lines`` holds ``(line_id, usage %)``.
    """

    c_v: float
    c_l: float
    violating_buses: tuple[tuple[int, float], ...]
    overloaded_lines: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "c_v": self.c_v,
            "c_l": self.c_l,
            "violating_buses": [list(x) for x in self.violating_buses],
            "overloaded_lines": [list(x) for x in self.overloaded_lines],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LimitReport":
        return cls(
            c_v=d["c_v"],
            c_l=d["c_l"],
            violating_buses=tuple((int(b), float(v)) for b, v in d["violating_buses"]),
            overloaded_lines=tuple((int(j), float(u)) for j, u in d["overloaded_lines"]),
        )


def line_loading(case: GridCase, sol: PowerFlowSolution) -> dict[int, float]:
    """Loading ratio I / I_max per line; out-of-service lines load 0."""
    return {ln.id: sol.line_current.get(ln.id, 0.0) / ln.imax for ln in case.lines}


def evaluate_limits(case: GridCase, sol: PowerFlowSolution) -> LimitReport:
    """Count buses outside [V_min, V_max] and lines above I_max (both strict).

    A split substation has two busbar voltages; its bus violates when
    either energized busbar does.
    """
    if not sol.converged:
        raise ValueError("limits are only defined on a converged solution")
    per_sub: dict[int, list[float]] = {}
    for node, vm in zip(sol.nodes, sol.voltage_magnitude):
        per_sub.setdefault(node.substation, []).append(float(vm))

    violating = []
    for bus in case.buses:
        worst = None
        for vm in per_sub.get(bus.substation, ()):
            if vm < bus.vmin or vm > bus.vmax:
                dev = max(bus.vmin - vm, vm - bus.vmax)
                if worst is None or dev > worst[0]:
                    worst = (dev, vm)
        if worst is not None:
            violating.append((bus.id, worst[1]))

    overloaded = []
    for ln in case.lines:
        current = sol.line_current.get(ln.id, 0.0)
        if current > ln.imax:
            overloaded.append((ln.id, 100.0 * current / ln.imax))

    return LimitReport(
        c_v=len(violating) / case.n_buses,
        c_l=len(overloaded) / case.n_lines if case.n_lines else 0.0,
        violating_buses=tuple(violating),
        overloaded_lines=tuple(overloaded),
    )
