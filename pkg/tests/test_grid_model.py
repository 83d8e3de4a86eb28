import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safegrid.fixtures import case_text
from safegrid.grid import (
    CaseError,
    CaseInvariantError,
    LimitReport,
    Node,
    PowerFlowSolution,
    TopologyState,
    build_effective_graph,
    dump_case,
    evaluate_limits,
    load_case,
)
from safegrid.grid.snapshot import solve_case


def test_case5_counts(case5):
    assert case5.n_buses == 5
    assert case5.n_lines == 6


def test_dump_round_trip(case14):
    assert load_case(dump_case(case14)) == case14


def test_empty_bus_list_is_invariant_error():
    text = case_text("case2").replace(
        "buses:\n  - {id: 1, substation: 1, vmin: 0.95, vmax: 1.05, base_kv: 138.0}\n"
        "  - {id: 2, substation: 2, vmin: 0.95, vmax: 1.05, base_kv: 138.0}\n",
        "buses: []\n",
    )
    with pytest.raises(CaseInvariantError):
        load_case(text)


def test_dangling_substation_reference():
    text = case_text("case2").replace("{id: 0, from: 1, to: 2,", "{id: 0, from: 1, to: 99,")
    with pytest.raises(CaseError, match="99"):
        load_case(text)


def test_bad_field_names_location():
    text = case_text("case2").replace("x: 0.1", "x: abc")
    with pytest.raises(CaseError, match="x"):
        load_case(text)


def test_invalid_yaml_reports_location():
    with pytest.raises(CaseError, match="line"):
        load_case("buses: [\n  - {")


def test_identity_topology_graph(case14):
    graph = build_effective_graph(case14, TopologyState.initial(case14))
    assert len(graph.nodes) == len(case14.substations)
    assert len(graph.edges) == case14.n_lines
    assert len(graph.islands) == 1


def test_all_lines_out_isolates_every_node(case5):
    topo = TopologyState.initial(case5).with_lines_out([ln.id for ln in case5.lines])
    graph = build_effective_graph(case5, topo)
    assert len(graph.edges) == 0
    assert len(graph.islands) == len(graph.nodes) == 5


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_graph_soundness_and_merge(case14, data):
    keys = list(TopologyState.initial(case14).element_busbar)
    chosen = data.draw(st.lists(st.sampled_from(keys), unique=True, max_size=8))
    topo = TopologyState.initial(case14).with_busbars({k: 1 for k in chosen})
    graph = build_effective_graph(case14, topo)
    n = len(graph.nodes)
    for e in graph.edges:
        assert 0 <= e.u < n and 0 <= e.v < n
    assert sorted(i for isl in graph.islands for i in isl) == list(range(n))
    merged = build_effective_graph(case14, topo.with_busbars({k: 0 for k in chosen}))
    base = build_effective_graph(case14, TopologyState.initial(case14))
    assert merged.nodes == base.nodes and merged.edges == base.edges


def test_solver_determinism(case14):
    a = solve_case(case14).solution
    b = solve_case(case14).solution
    assert a == b
    assert np.array_equal(a.voltage_magnitude, b.voltage_magnitude)


# -- limits ----------------------------------------------------------------

def _fake_solution(case, vm, currents):
    nodes = tuple(Node(b.substation, 0) for b in case.buses)
    n = len(nodes)
    return PowerFlowSolution(
        nodes=nodes, voltage_magnitude=np.asarray(vm, float), voltage_angle=np.zeros(n),
        line_current=dict(currents), line_flow_p={}, line_flow_p_to={},
        p_injection_mw=np.zeros(n), q_injection_mvar=np.zeros(n), mismatch_norm=0.0,
        converged=True, iterations=1,
    )


def _four_bus_case():
    buses = "\n".join(
        f"  - {{id: {i}, substation: {i}, vmin: 0.95, vmax: 1.05, base_kv: 1.0}}" for i in range(1, 5)
    )
    lines = "\n".join(
        f"  - {{id: {j}, from: {a}, to: {b}, r: 0.01, x: 0.1, b: 0.0, imax: 1.0}}"
        for j, (a, b) in enumerate([(1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (1, 4)])
    )
    text = (
        "name: four\nbase_mva: 100.0\nslack: 1\nbuses:\n" + buses
        + "\nsubstations:\n" + "\n".join(f"  - {{id: {i}}}" for i in range(1, 5))
        + "\nlines:\n" + lines
        + "\ngenerators:\n  - {id: 0, substation: 1, pmin: 0, pmax: 100, p: 0, vset: 1.0}"
        + "\nloads:\n  - {id: 0, substation: 2, p: 0, q: 0}\n"
    )
    return load_case(text)


def test_limits_examples():
    case = _four_bus_case()
    ok = {j: 0.5 for j in range(6)}
    rep = evaluate_limits(case, _fake_solution(case, [1.0, 1.08, 0.92, 1.12], ok))
    assert rep.c_v == 0.75
    rep = evaluate_limits(case, _fake_solution(case, [1.0] * 4, ok))
    assert (rep.c_v, rep.c_l) == (0.0, 0.0)
    rep = evaluate_limits(case, _fake_solution(case, [1.0] * 4, {**ok, 3: 1.1}))
    assert rep.c_l == 1 / 6
    assert rep.overloaded_lines == ((3, pytest.approx(110.0)),)


def test_limits_boundaries_are_feasible():
    case = _four_bus_case()
    rep = evaluate_limits(case, _fake_solution(case, [0.95, 1.05, 1.0, 1.0], {j: 1.0 for j in range(6)}))
    assert (rep.c_v, rep.c_l) == (0.0, 0.0)


def test_limits_reject_unconverged():
    case = _four_bus_case()
    sol = _fake_solution(case, [1.0] * 4, {})
    with pytest.raises(ValueError):
        evaluate_limits(case, PowerFlowSolution(**{**sol.__dict__, "converged": False}))


def brute_force_limits(case, vm, currents):
    bad_buses = 0
    for i, bus in enumerate(case.buses):
        if not (bus.vmin <= vm[i] <= bus.vmax):
            bad_buses += 1
    bad_lines = 0
    for ln in case.lines:
        if currents[ln.id] > ln.imax:
            bad_lines += 1
    return bad_buses / case.n_buses, bad_lines / case.n_lines


def test_limits_match_brute_force(case14):
    rng = np.random.default_rng(0)
    for _ in range(1000):
        vm = rng.uniform(0.9, 1.1, case14.n_buses)
        # put some values exactly on the boundaries
        edge = rng.random(case14.n_buses) < 0.1
        vm[edge] = rng.choice([0.95, 1.05], edge.sum())
        currents = {ln.id: float(rng.uniform(0.0, 1.3) * ln.imax) for ln in case14.lines}
        for ln in case14.lines:
            if rng.random() < 0.05:
                currents[ln.id] = ln.imax
        rep = evaluate_limits(case14, _fake_solution(case14, vm, currents))
        assert (rep.c_v, rep.c_l) == brute_force_limits(case14, vm, currents)


def test_limit_report_round_trip(case5):
    rep = solve_case(case5).limits
    assert LimitReport.from_dict(rep.to_dict()) == rep
