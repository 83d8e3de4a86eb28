"""Glue between element-level dispatch and the node-level solver."""

from __future__ import annotations

from dataclasses import dataclass

from .case import GridCase, gen_key, load_key
from .limits import LimitReport, evaluate_limits
from .powerflow import (
    Injections,
    PowerFlowOptions,
    PowerFlowSolution,
    solve_power_flow,
)
from .topology import EffectiveGraph, TopologyState, build_effective_graph


class IslandingError(RuntimeError):
    """A load or generator ended up in an island without the slack."""

    def __init__(self, message: str, stranded: tuple[str, ...]):
        super().__init__(message)
        self.stranded = stranded


def nodal_injections(
    case: GridCase,
    graph: EffectiveGraph,
    load_p: dict[int, float],
    load_q: dict[int, float],
    gen_p: dict[int, float],
    gen_q: dict[int, float],
) -> Injections:
    """Aggregate element powers (MW / MVAr) onto graph nodes."""
    p: dict[int, float] = {}
    q: dict[int, float] = {}
    vset: dict[int, float] = {}
    for idx, elements in enumerate(graph.node_elements):
        pi = qi = 0.0
        for key in elements:
            kind, ident = key.split(":")
            ident = int(ident)
            if kind == "load":
                pi -= load_p.get(ident, 0.0)
                qi -= load_q.get(ident, 0.0)
            elif kind == "gen":
                gen = case.generator(ident)
                pi += gen_p.get(ident, 0.0)
                if gen.is_pv:
                    vset.setdefault(idx, gen.vset)
                else:
                    qi += gen_q.get(ident, 0.0)
        p[idx] = pi
        q[idx] = qi
    if graph.slack_node is not None:
        vset[graph.slack_node] = case.slack_generator.vset
    return Injections(p, q, vset, case.base_mva)


def stranded_elements(graph: EffectiveGraph) -> tuple[str, ...]:
    """Loads and generators outside the slack island."""
    energized = set(graph.slack_island)
    return tuple(
        key
        for idx, elements in enumerate(graph.node_elements)
        if idx not in energized
        for key in elements
        if key.startswith(("gen:", "load:"))
    )


@dataclass(frozen=True)
class Snapshot:
    graph: EffectiveGraph
    solution: PowerFlowSolution
    limits: LimitReport


def solve_case(
    case: GridCase,
    topo: TopologyState | None = None,
    load_p: dict[int, float] | None = None,
    load_q: dict[int, float] | None = None,
    gen_p: dict[int, float] | None = None,
    gen_q: dict[int, float] | None = None,
    options: PowerFlowOptions = PowerFlowOptions(),
) -> Snapshot:
    """Solve one operating point; omitted dispatch falls back to case nominals.

    Raises :class:`IslandingError` when an element is cut off from the
    slack, and the solver's errors on divergence.
    """
    topo = topo or TopologyState.initial(case)
    load_p = {ld.id: ld.p for ld in case.loads} if load_p is None else load_p
    load_q = {ld.id: ld.q for ld in case.loads} if load_q is None else load_q
    gen_p = {g.id: g.p for g in case.generators} if gen_p is None else gen_p
    gen_q = {g.id: g.q for g in case.generators} if gen_q is None else gen_q
    graph = build_effective_graph(case, topo)
    stranded = stranded_elements(graph)
    if stranded or graph.slack_node is None:
        raise IslandingError(
            f"elements outside the slack island: {', '.join(stranded)}", stranded
        )
    inj = nodal_injections(case, graph, load_p, load_q, gen_p, gen_q)
    sol = solve_power_flow(graph, inj, options)
    return Snapshot(graph, sol, evaluate_limits(case, sol))


def slack_generation_mw(case: GridCase, snap: Snapshot, gen_p: dict[int, float],
                        load_p: dict[int, float]) -> float:
    """Active output of the slack generator implied by the solved injection."""
    node = snap.graph.slack_node
    sol_idx = snap.solution.nodes.index(snap.graph.nodes[node])
    p = float(snap.solution.p_injection_mw[sol_idx])
    slack_id = case.slack_generator.id
    for key in snap.graph.node_elements[node]:
        kind, ident = key.split(":")
        ident = int(ident)
        if kind == "load":
            p += load_p.get(ident, 0.0)
        elif kind == "gen" and ident != slack_id:
            p -= gen_p.get(ident, 0.0)
    return p


__all__ = [
    "IslandingError", "Snapshot", "nodal_injections", "slack_generation_mw",
    "solve_case", "stranded_elements", "gen_key", "load_key",
]
