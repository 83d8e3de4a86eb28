"""Structured advisor prompt built from one replay transition."""

from __future__ import annotations

from ..env.core import GridState, Transition
from ..grid.case import GridCase, split_key
from ..grid.limits import line_loading
from .config import RefinementConfig

MARKER = "proposed LINE changes:"

FORMAT_INSTRUCTIONS = f"""Please provide your response in the following format:
1. [Analysis of critical issues]
2. [Analysis of current topology]
3. [Deep reasoning of bad line change examples]
4. Proposed line changes (bus_id must be 0 or 1)

{MARKER} {{line_id : new_bus_id}}"""


def severity(usage_pct: float) -> str:
    return "moderate" if usage_pct <= 120.0 else "severe"


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def overloaded_lines(case: GridCase, state: GridState, cfg: RefinementConfig):
    """``(line_id, usage %)`` above the threshold, worst first, at most top_k."""
    rho = line_loading(case, state.solution)
    over = [(j, 100.0 * r) for j, r in rho.items() if 100.0 * r > cfg.overload_threshold]
    over.sort(key=lambda x: (-x[1], x[0]))
    return over[: cfg.top_k]


def voltage_nodes(state: GridState, cfg: RefinementConfig):
    sol = state.solution
    under, over = [], []
    for node, vm in zip(sol.nodes, sol.voltage_magnitude):
        if vm < cfg.v_low:
            under.append((node, float(vm)))
        elif vm > cfg.v_high:
            over.append((node, float(vm)))
    return under, over


def _node_name(node) -> str:
    return f"{node.substation}" if node.busbar == 0 else f"{node.substation}.{node.busbar}"


def _voltage_impact(tr: Transition) -> str:
    if tr.s_next.failed:
        return f"grid failed ({tr.s_next.reason.split(':')[0]})"
    before = tr.s.solution.voltage_magnitude
    after = tr.s_next.solution.voltage_magnitude
    return (
        f"min voltage {before.min():.3f} -> {after.min():.3f} pu, "
        f"max voltage {before.max():.3f} -> {after.max():.3f} pu"
    )


def build_prompt(tr: Transition, case: GridCase, cfg: RefinementConfig) -> str:
    s = tr.s
    if s.solution is None:
        raise ValueError("prompt needs a state with a converged solution")
    topo = s.topology
    out = [
        "You are an expert power grid operator with deep knowledge of",
        "transmission line overloads and voltage regulation.",
        "",
        f"NOW, let's analyze the current situation at row {s.t} (episode step {s.step}) "
        "step by step.",
        "",
        "1. Grid overview",
        f"  -- Total elements: {len(case.element_keys)}",
        f"  -- Operable substations: {list(case.controllable_substations)}",
        f"  -- Total lines: {case.n_lines}",
        f"  -- Voltage normal range: {cfg.v_low}-{cfg.v_high} pu",
        "",
        f"2. Top-{cfg.top_k} overloaded lines (threshold: {_fmt(cfg.overload_threshold)}%)",
    ]
    over = overloaded_lines(case, s, cfg)
    if not over:
        out.append("  none")
    for j, usage in over:
        ln = case.line(j)
        out += [
            f"  -- Line {j} ({usage:.1f}%, {severity(usage)})",
            f"  -- Connection: Sub {ln.from_sub} <-> Sub {ln.to_sub}",
            f"  -- Active power flow: {s.solution.line_flow_p.get(j, 0.0):.2f} MW",
        ]

    under, high = voltage_nodes(s, cfg)
    out += ["", "3. Voltage abnormalities"]
    out.append(
        f"  Under-voltage nodes (<{cfg.v_low} pu): "
        + (", ".join(f"Node {_node_name(n)}: {v:.3f} pu" for n, v in under) or "none")
    )
    out.append(
        f"  Over-voltage nodes (>{cfg.v_high} pu): "
        + (", ".join(f"Node {_node_name(n)}: {v:.3f} pu" for n, v in high) or "none")
    )

    crucial: list[int] = []
    for j, _ in over:
        ln = case.line(j)
        crucial += [ln.from_sub, ln.to_sub]
    crucial += [n.substation for n, _ in under + high]
    crucial = list(dict.fromkeys(crucial))
    out += ["", "4. Crucial substations (overload / voltage-related)"]
    if not crucial:
        out.append("  none")
    volt_by_sub: dict[int, list[str]] = {}
    for node, vm in zip(s.solution.nodes, s.solution.voltage_magnitude):
        volt_by_sub.setdefault(node.substation, []).append(f"{_node_name(node)}: {vm:.3f} pu")
    for sub in crucial:
        bars: dict[int, list[int]] = {0: [], 1: []}
        down = []
        for key in case.substation_elements(sub):
            kind, ident = split_key(key)
            if not kind.startswith("line"):
                continue
            if not topo.line_status[ident]:
                down.append(ident)
            else:
                bars[topo.element_busbar[key]].append(ident)
        out += [
            f"  Substation {sub}",
            f"  -- Bus 0 lines: {bars[0] or 'none'}",
            f"  -- Bus 1 lines: {bars[1] or 'none'}",
            f"  -- Disconnected lines: {down or 'none'}",
            f"  -- Voltage nodes: {', '.join(volt_by_sub.get(sub, [])) or 'none'}",
        ]

    out += [
        "",
        "5. Bad action examples (RL-derived)",
        f"  -- Avoid: {tr.a.describe()}",
        f"  -- Reward: {tr.r:.6g}",
        f"  -- Voltage impact: {_voltage_impact(tr)}",
    ]

    cooling: dict[int, int] = {}
    for key, left in topo.cooldowns.items():
        kind, ident = split_key(key)
        if left > 0 and kind.startswith("line"):
            cooling[ident] = max(cooling.get(ident, 0), left)
    out += [
        "",
        "6. Operational constraints",
        f"  -- Lines in cooldown: {sorted(cooling) or 'none'}",
        "  -- Remaining steps: "
        + (", ".join(f"{j}: {cooling[j]}" for j in sorted(cooling)) or "none"),
        "",
        FORMAT_INSTRUCTIONS,
    ]
    return "\n".join(out)
