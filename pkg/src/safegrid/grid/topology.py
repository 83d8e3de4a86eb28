"""Busbar assignments and reduction of a topology to its electrical node graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .case import GridCase, line_ex_key, line_or_key


@dataclass(frozen=True)
class TopologyState:
    """Per-element busbar ids, line connectivity and switching cooldowns.

    Instances are treated as values: every update returns a new object.
    """

    element_busbar: dict[str, int]
    line_status: dict[int, bool]
    cooldowns: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for key, bb in self.element_busbar.items():
            if bb not in (0, 1):
                raise ValueError(f"element {key}: busbar must be 0 or 1, got {bb}")
        for key, cd in self.cooldowns.items():
            if not isinstance(cd, int) or cd < 0:
                raise ValueError(f"element {key}: cooldown must be a nonnegative int")

    @classmethod
    def initial(cls, case: GridCase) -> "TopologyState":
        keys = case.element_keys
        return cls(
            element_busbar={k: 0 for k in keys},
            line_status={ln.id: True for ln in case.lines},
            cooldowns={k: 0 for k in keys},
        )

    def with_busbars(self, changes: dict[str, int]) -> "TopologyState":
        busbar = dict(self.element_busbar)
        busbar.update(changes)
        return TopologyState(busbar, dict(self.line_status), dict(self.cooldowns))

    def with_lines_out(self, line_ids) -> "TopologyState":
        status = dict(self.line_status)
        for j in line_ids:
            status[j] = False
        return TopologyState(dict(self.element_busbar), status, dict(self.cooldowns))

    def tick_cooldowns(self, acted=(), duration: int = 0) -> "TopologyState":
        cooldowns = {k: max(0, v - 1) for k, v in self.cooldowns.items()}
        for key in acted:
            cooldowns[key] = duration
        return TopologyState(dict(self.element_busbar), dict(self.line_status), cooldowns)

    def to_dict(self) -> dict:
        return {
            "element_busbar": dict(self.element_busbar),
            "line_status": {str(k): v for k, v in self.line_status.items()},
            "cooldowns": dict(self.cooldowns),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TopologyState":
        return cls(
            element_busbar={k: int(v) for k, v in d["element_busbar"].items()},
            line_status={int(k): bool(v) for k, v in d["line_status"].items()},
            cooldowns={k: int(v) for k, v in d["cooldowns"].items()},
        )


class Node(NamedTuple):
    substation: int
    busbar: int


class Edge(NamedTuple):
    line: int
    u: int
    v: int
    r: float
    x: float
    b: float


@dataclass(frozen=True)
class EffectiveGraph:
    """Electrical nodes (one per used busbar), in-service lines and islands.

    ``islands`` partitions node indices into connected components; the
    component containing ``slack_node`` is the one the solver works on.
    """

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    islands: tuple[tuple[int, ...], ...]
    node_elements: tuple[tuple[str, ...], ...]
    slack_node: int | None

    def index(self, node: Node) -> int:
        return self.nodes.index(node)

    def island_of(self, node_idx: int) -> tuple[int, ...]:
        for isl in self.islands:
            if node_idx in isl:
                return isl
        raise KeyError(node_idx)

    @property
    def slack_island(self) -> tuple[int, ...]:
        if self.slack_node is None:
            return ()
        return self.island_of(self.slack_node)


def build_effective_graph(case: GridCase, topo: TopologyState) -> EffectiveGraph:
    """Reduce ``topo`` to nodes, edges and islands.

    Each substation contributes one node per busbar with at least one
    assigned element; disconnected lines carry no edge.
    """
    nodes: list[Node] = []
    node_elements: list[tuple[str, ...]] = []
    where: dict[str, int] = {}
    for sub in case.substations:
        per_bb: dict[int, list[str]] = {0: [], 1: []}
        for key in case.substation_elements(sub.id):
            per_bb[topo.element_busbar[key]].append(key)
        for bb in (0, 1):
            if per_bb[bb]:
                for key in per_bb[bb]:
                    where[key] = len(nodes)
                nodes.append(Node(sub.id, bb))
                node_elements.append(tuple(per_bb[bb]))

    edges = tuple(
        Edge(ln.id, where[line_or_key(ln.id)], where[line_ex_key(ln.id)], ln.r, ln.x, ln.b)
        for ln in case.lines
        if topo.line_status.get(ln.id, True)
    )

    parent = list(range(len(nodes)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for e in edges:
        ru, rv = find(e.u), find(e.v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for i in range(len(nodes)):
        groups.setdefault(find(i), []).append(i)
    islands = tuple(tuple(g) for _, g in sorted(groups.items()))

    slack_key = f"gen:{case.slack_generator.id}"
    slack_node = where.get(slack_key)
    return EffectiveGraph(tuple(nodes), edges, islands, tuple(node_elements), slack_node)
