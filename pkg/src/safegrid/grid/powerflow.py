"""Polar Newton-Raphson AC power flow on an effective node graph.

Only the island that contains the slack node is solved. Branches use the
pi model: series impedance ``r + jx`` with half the total charging
susceptance ``b`` at each end. Loads are constant PQ; generators with a
voltage set-point are PV buses and their reactive output is unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import EffectiveGraph, Node


class PowerFlowError(RuntimeError):
    """Base class for solver failures; the caller treats them as terminal."""


class DivergenceError(PowerFlowError):
    def __init__(self, message: str, iterations: int, mismatch: float):
        super().__init__(message)
        self.iterations = iterations
        self.mismatch = mismatch


class SingularJacobianError(PowerFlowError):
    pass


@dataclass(frozen=True)
class PowerFlowOptions:
    tolerance: float = 1e-8
    max_iterations: int = 20


@dataclass(frozen=True)
class Injections:
    """Net nodal injections (generation minus demand) in MW / MVAr.

    ``vset`` holds the voltage magnitude of the slack node and of every PV
    node; nodes absent from it are PQ.
    """

    p_mw: dict[int, float]
    q_mvar: dict[int, float]
    vset: dict[int, float]
    base_mva: float = 100.0


@dataclass(frozen=True)
class PowerFlowSolution:
    nodes: tuple[Node, ...]
    voltage_magnitude: np.ndarray
    voltage_angle: np.ndarray
    line_current: dict[int, float]
    line_flow_p: dict[int, float]
    line_flow_p_to: dict[int, float]
    p_injection_mw: np.ndarray
    q_injection_mvar: np.ndarray
    mismatch_norm: float
    converged: bool
    iterations: int
    base_mva: float = 100.0
    extras: dict = field(default_factory=dict, compare=False)

    def voltage_at(self, node: Node) -> float:
        return float(self.voltage_magnitude[self.nodes.index(node)])

    def to_dict(self) -> dict:
        return {
            "nodes": [list(n) for n in self.nodes],
            "vm": self.voltage_magnitude.tolist(),
            "va": self.voltage_angle.tolist(),
            "line_current": {str(k): v for k, v in self.line_current.items()},
            "line_flow_p": {str(k): v for k, v in self.line_flow_p.items()},
            "line_flow_p_to": {str(k): v for k, v in self.line_flow_p_to.items()},
            "p_inj": self.p_injection_mw.tolist(),
            "q_inj": self.q_injection_mvar.tolist(),
            "mismatch_norm": self.mismatch_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "base_mva": self.base_mva,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PowerFlowSolution":
        return cls(
            nodes=tuple(Node(*n) for n in d["nodes"]),
            voltage_magnitude=np.asarray(d["vm"], dtype=float),
            voltage_angle=np.asarray(d["va"], dtype=float),
            line_current={int(k): v for k, v in d["line_current"].items()},
            line_flow_p={int(k): v for k, v in d["line_flow_p"].items()},
            line_flow_p_to={int(k): v for k, v in d["line_flow_p_to"].items()},
            p_injection_mw=np.asarray(d["p_inj"], dtype=float),
            q_injection_mvar=np.asarray(d["q_inj"], dtype=float),
            mismatch_norm=d["mismatch_norm"],
            converged=d["converged"],
            iterations=d["iterations"],
            base_mva=d["base_mva"],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PowerFlowSolution):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def admittance_matrix(n: int, edges) -> np.ndarray:
    """Dense bus admittance matrix for ``n`` nodes and (u, v, r, x, b) edges."""
    ybus = np.zeros((n, n), dtype=complex)
    for u, v, r, x, b in edges:
        ys = 1.0 / complex(r, x)
        ysh = 0.5j * b
        ybus[u, u] += ys + ysh
        ybus[v, v] += ys + ysh
        ybus[u, v] -= ys
        ybus[v, u] -= ys
    return ybus


def newton_raphson(
    ybus: np.ndarray,
    s_spec: np.ndarray,
    v0: np.ndarray,
    slack: int,
    pv: np.ndarray,
    pq: np.ndarray,
    tolerance: float = 1e-8,
    max_iterations: int = 20,
) -> tuple[np.ndarray, float, int]:
    """Solve ``V * conj(Ybus V) = S`` for the complex voltage vector.

    ``iterations`` counts mismatch evaluations, so a flat start that is
    already balanced reports 1. Raises :class:`DivergenceError` when
    ``max_iterations`` evaluations pass without meeting ``tolerance``.
    """
    v = v0.astype(complex).copy()
    vm = np.abs(v)
    va = np.angle(v)
    pvpq = np.concatenate([pv, pq]).astype(int)
    npvpq, npq = len(pvpq), len(pq)
    mismatch = np.inf
    for it in range(1, max_iterations + 1):
        ibus = ybus @ v
        mis = v * np.conj(ibus) - s_spec
        f = np.concatenate([mis.real[pvpq], mis.imag[pq]])
        if not np.all(np.isfinite(f)):
            raise DivergenceError("non-finite mismatch", it, np.inf)
        mismatch = float(np.max(np.abs(f))) if f.size else 0.0
        if mismatch < tolerance:
            return v, mismatch, it
        if it == max_iterations:
            break

        diag_v = np.diag(v)
        diag_i = np.diag(ibus)
        diag_vn = np.diag(v / vm)
        ds_dvm = diag_v @ np.conj(ybus @ diag_vn) + np.conj(diag_i) @ diag_vn
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        jac = np.block(
            [
                [ds_dva.real[np.ix_(pvpq, pvpq)], ds_dvm.real[np.ix_(pvpq, pq)]],
                [ds_dva.imag[np.ix_(pq, pvpq)], ds_dvm.imag[np.ix_(pq, pq)]],
            ]
        )
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(f"singular Jacobian at iteration {it}") from None
        va[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:npvpq + npq]
        v = vm * np.exp(1j * va)
    raise DivergenceError(
        f"no convergence after {max_iterations} iterations "
        f"(max mismatch {mismatch:.3e} p.u.)",
        max_iterations,
        mismatch,
    )


def solve_power_flow(
    graph: EffectiveGraph,
    injections: Injections,
    options: PowerFlowOptions = PowerFlowOptions(),
) -> PowerFlowSolution:
    """Solve the slack island of ``graph`` from a flat start."""
    if graph.slack_node is None:
        raise SingularJacobianError("graph has no slack node")
    island = graph.slack_island
    local = {g: i for i, g in enumerate(island)}
    n = len(island)
    base = injections.base_mva
    slack = local[graph.slack_node]

    edges = [e for e in graph.edges if e.u in local]
    ybus = admittance_matrix(n, [(local[e.u], local[e.v], e.r, e.x, e.b) for e in edges])

    s_spec = np.zeros(n, dtype=complex)
    v0 = np.ones(n, dtype=complex)
    pv, pq = [], []
    for g, i in local.items():
        s_spec[i] = complex(injections.p_mw.get(g, 0.0), injections.q_mvar.get(g, 0.0)) / base
        if g in injections.vset:
            v0[i] = injections.vset[g]
            if i != slack:
                pv.append(i)
        elif i != slack:
            pq.append(i)

    v, mismatch, iterations = newton_raphson(
        ybus, s_spec, v0, slack, np.array(pv, dtype=int), np.array(pq, dtype=int),
        options.tolerance, options.max_iterations,
    )
    vm = np.abs(v)
    if np.any(vm <= 0):
        raise DivergenceError("non-positive voltage magnitude", iterations, mismatch)

    s_calc = v * np.conj(ybus @ v) * base
    current: dict[int, float] = {}
    flow_p: dict[int, float] = {}
    flow_p_to: dict[int, float] = {}
    for e in graph.edges:
        if e.u not in local:
            continue
        vf, vt = v[local[e.u]], v[local[e.v]]
        ys = 1.0 / complex(e.r, e.x)
        i_f = (vf - vt) * ys + vf * 0.5j * e.b
        i_t = (vt - vf) * ys + vt * 0.5j * e.b
        current[e.line] = float(max(abs(i_f), abs(i_t)))
        flow_p[e.line] = float((vf * np.conj(i_f)).real * base)
        flow_p_to[e.line] = float((vt * np.conj(i_t)).real * base)

    return PowerFlowSolution(
        nodes=tuple(graph.nodes[g] for g in island),
        voltage_magnitude=vm,
        voltage_angle=np.angle(v),
        line_current=current,
        line_flow_p=flow_p,
        line_flow_p_to=flow_p_to,
        p_injection_mw=s_calc.real,
        q_injection_mvar=s_calc.imag,
        mismatch_norm=mismatch,
        converged=True,
        iterations=iterations,
        base_mva=base,
    )
