"""Acceptance criteria 1 to 9 at their stated tolerances.

Each test records one PASS/FAIL line, printed together at the end of the
run. The desk experiment (criterion 8) trains ten agents and takes several
minutes.
"""

import dataclasses
import json
import pickle
import time

import numpy as np
import pytest

from safegrid.config import RunConfig
from safegrid.env import Action, enumerate_actions
from safegrid.fixtures import DATA
from safegrid.grid import Node, PowerFlowSolution, evaluate_limits
from safegrid.grid.snapshot import solve_case
from safegrid.learner import PlainSAC, SafetySAC
from safegrid.refine import MARKER, MockAdvisor, RefinementConfig, ReplayBuffer, refine_buffer
from safegrid.refine.parse import OK, parse_proposal
from safegrid.training import evaluate, train

from conftest import RELIEF_TEXT
from learner_helpers import bandit_distance, gradient_errors, lagrange_trace, random_batch
from test_grid_powerflow import _power_balance_residual, bisect_two_bus, two_bus_voltage
from test_grid_model import brute_force_limits


def test_criterion_1_power_flow(criterion, case2, case5, case14):
    start = time.perf_counter()
    snap2 = solve_case(case2)
    dv = abs(snap2.solution.voltage_magnitude[1] - two_bus_voltage(1.0, 0.1, 0.5, 0.0))
    oracle_gap = abs(two_bus_voltage(1.0, 0.1, 0.5, 0.0) - bisect_two_bus(1.0, 0.1, 0.5, 0.0))
    worst_mismatch, worst_iters, worst_balance = 0.0, 0, 0.0
    for case in (case5, case14):
        snap = solve_case(case)
        worst_mismatch = max(worst_mismatch, snap.solution.mismatch_norm)
        worst_iters = max(worst_iters, snap.solution.iterations)
        worst_balance = max(worst_balance, _power_balance_residual(snap))
    elapsed = time.perf_counter() - start
    ok = (dv < 1e-8 and oracle_gap < 1e-10 and worst_mismatch < 1e-8 and worst_iters <= 20
          and worst_balance < 1e-7 and elapsed < 1.0)
    detail = (f"|dV|={dv:.1e}, mismatch={worst_mismatch:.1e}, iterations={worst_iters}, "
              f"balance={worst_balance:.1e}, {elapsed:.2f}s")
    assert criterion(1, ok, detail)


def test_criterion_2_violation_semantics(criterion, case14):
    rng = np.random.default_rng(7)
    nodes = tuple(Node(b.substation, 0) for b in case14.buses)
    n = len(nodes)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        vm = rng.uniform(0.9, 1.1, n)
        edge = rng.random(n) < 0.1
        vm[edge] = rng.choice([0.95, 1.05], edge.sum())
        currents = {ln.id: float(rng.uniform(0.0, 1.3) * ln.imax) for ln in case14.lines}
        sol = PowerFlowSolution(nodes, vm, np.zeros(n), currents, {}, {}, np.zeros(n),
                                np.zeros(n), 0.0, True, 1)
        rep = evaluate_limits(case14, sol)
        mismatches += (rep.c_v, rep.c_l) != brute_force_limits(case14, vm, currents)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5.0
    assert criterion(2, ok, f"{mismatches} mismatches in 1000 solutions, {elapsed:.2f}s")


def test_criterion_3_gradient_checks(criterion):
    start = time.perf_counter()
    worst: dict[str, float] = {}
    for seed in range(20):
        for name, err in gradient_errors(seed).items():
            worst[name] = max(worst.get(name, 0.0), err)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-4 and elapsed < 30.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s"
    assert criterion(3, ok, detail)


def test_criterion_4_entropy_optimum(criterion):
    start = time.perf_counter()
    gaps = [bandit_distance([0.0, 1.0], alpha=1.0),
            bandit_distance([0.5, -1.0, 2.0, 1.2], alpha=0.5, seed=3)]
    elapsed = time.perf_counter() - start
    ok = max(gaps) < 1e-2 and elapsed < 30.0
    assert criterion(4, ok, f"L1 gaps {gaps[0]:.1e}, {gaps[1]:.1e} after 5000 steps; "
                            f"{elapsed:.1f}s")


def test_criterion_5_lagrange_dynamics(criterion):
    calm = lagrange_trace(eps_c=1.0, qc_logit=3.0, steps=1000)
    hot = lagrange_trace(eps_c=0.1, qc_logit=3.0, steps=1000)
    ok = (all(v == 0.0 for v in calm) and all(b > a for a, b in zip(hot, hot[1:]))
          and min(calm + hot) >= 0.0)
    assert criterion(5, ok, f"satisfied: lambda stays {max(calm)}; violated: "
                            f"0 -> {hot[-1]:.3f} strictly increasing")


def test_criterion_6_refinement_protocol(criterion, env5, tmp_path):
    rng = np.random.default_rng(0)
    actions = enumerate_actions(env5.case)
    buf = ReplayBuffer(2000)
    s = env5.reset(0)
    while len(buf) < 600:
        a = actions[rng.integers(len(actions))] if rng.random() < 0.2 else Action.do_nothing()
        tr = buf.push(env5.step(s, a))
        s = env5.reset(int(rng.integers(0, 1500))) if tr.s_next.terminal else tr.s_next
    originals = {t.uid: pickle.dumps(t) for t in buf.snapshot()}
    cfg = RefinementConfig(r_thr=-5.0, N_LLM=64)

    for i, text in enumerate(["no idea", f"{MARKER} {{}}", RELIEF_TEXT]):
        (tmp_path / f"{i}.txt").write_text(text)
    seen = []

    class Recording(MockAdvisor):
        def advise(self, prompt, tr, history):
            seen.append(tr.r)
            return super().advise(prompt, tr, history)

    stats = refine_buffer(buf, Recording(tmp_path), env5, cfg, keep_results=True)
    a_ok = bool(seen) and all(r < cfg.r_thr for r in seen)
    b_ok = all(pickle.dumps(buf.find(uid)) == blob for uid, blob in originals.items())
    d_ok = True
    for res in stats.results:
        if res.refined is not None:
            sim = env5.step(res.original.s, res.refined.a)
            d_ok &= (sim.r, sim.c_v, sim.c_l) == (res.refined.r, res.refined.c_v, res.refined.c_l)
            d_ok &= sim.s_next == res.refined.s_next

    garbage = tmp_path / "garbage"
    garbage.mkdir()
    (garbage / "0.txt").write_text("The grid looks fine to me.")
    one = ReplayBuffer(10)
    one.push(next(t for t in buf.snapshot() if t.r < cfg.r_thr and not t.refined))
    failed = refine_buffer(one, MockAdvisor(garbage), env5, cfg, keep_results=True)
    c_ok = (failed.accepted == 0 and len(one) == 1
            and len(failed.results[0].rounds) == cfg.K)

    fuzz = np.random.default_rng(99)
    fuzz_ok = True
    for i in range(10_000):
        if i % 2:
            data = fuzz.integers(0, 256, fuzz.integers(0, 200), dtype=np.uint8).tobytes()
        else:
            data = bytearray(RELIEF_TEXT.encode())
            for _ in range(fuzz.integers(1, 6)):
                pos = int(fuzz.integers(0, len(data) + 1))
                data[pos:pos + 1] = bytes([int(fuzz.integers(0, 256))])
            data = bytes(data)
        p = parse_proposal(data, set(range(6)))
        fuzz_ok &= (p.status == OK) == bool(p.changes)

    ok = a_ok and b_ok and c_ok and d_ok and fuzz_ok and stats.accepted > 0
    detail = (f"(a) {len(seen)} advisor calls all below r_thr={a_ok}, (b) originals intact={b_ok}, "
              f"(c) K failures -> none={c_ok}, (d) {stats.accepted} re-simulations exact={d_ok}, "
              f"fuzz 10000={fuzz_ok}")
    assert criterion(6, ok, detail)


def test_criterion_7_ablation_identity(criterion):
    from safegrid.learner import LearnerConfig

    cfg = LearnerConfig(hidden_dim=8, latent_dim=4, beta=0.0, lambda_init=0.0, lr_lambda=0.0)
    safe, plain = SafetySAC(6, 5, cfg, seed=11), PlainSAC(6, 5, cfg, seed=11)
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    same = True
    for _ in range(100):
        ra = safe.train_step(random_batch(rng_a, 16, 6, 5))
        rb = plain.train_step(random_batch(rng_b, 16, 6, 5))
        same &= (ra["L_r"], ra["L_pi"]) == (rb["L_r"], rb["L_pi"])
    same &= all(np.array_equal(x, y) for x, y in zip(safe.actor.params, plain.actor.params))
    assert criterion(7, same, "L_r and L_pi traces bit-identical over 100 steps"
                     if same else "traces diverge")


PLAIN = ["advisor.mode=off", "learner.beta=0", "learner.lr_lambda=0", "learner.lambda_init=0"]


@pytest.mark.slow
def test_criterion_8_desk_experiment(criterion):
    base = RunConfig.from_ini((DATA / "desk.ini").read_text())
    runs = {"safety+rule": base, "plain": base.with_overrides(PLAIN)}
    start = time.perf_counter()
    means = {}
    for name, cfg in runs.items():
        surv, cost = [], []
        for seed in cfg.run.seed_list:
            rep = evaluate(cfg, train(cfg, seed).learner, seed)
            surv.append(rep.mean("survival_step"))
            cost.append(rep.mean("safety_cost_metric"))
        means[name] = (float(np.mean(surv)), float(np.mean(cost)))
    elapsed = time.perf_counter() - start
    (s_surv, s_cost), (p_surv, p_cost) = means["safety+rule"], means["plain"]
    gain = s_surv / p_surv - 1.0
    reduction = 1.0 - s_cost / p_cost if p_cost > 0 else (0.0 if s_cost > 0 else 1.0)
    ok = gain >= 0.2 and reduction >= 0.2 and elapsed < 900
    detail = (f"survival {s_surv:.1f} vs {p_surv:.1f} ({100 * gain:+.1f}%), safety cost "
              f"{s_cost:.3f} vs {p_cost:.3f} ({100 * reduction:.1f}% lower), {elapsed:.0f}s")
    assert criterion(8, ok, detail)


def _train_and_eval(cfg, out):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.ini").write_text(cfg.to_ini())
    res = train(cfg, 0, out)
    rep = evaluate(cfg, res.learner, 0)
    return res, rep


def test_criterion_9_determinism(criterion, tmp_path, mock_dir):
    small = ["run.seeds=0", "learner.total_steps=400", "refine.f=100", "run.eval_episodes=1",
             "env.max_episode_length=80"]
    verdicts = []
    for mode in (["advisor.mode=off"], ["advisor.mode=mock", f"advisor.directory={mock_dir}"]):
        cfg = RunConfig.from_ini((DATA / "desk.ini").read_text(), small + mode)
        first, rep1 = _train_and_eval(cfg, tmp_path / mode[0] / "a")
        echoed = RunConfig.read(tmp_path / mode[0] / "a" / "config.resolved.ini")
        second, rep2 = _train_and_eval(echoed, tmp_path / mode[0] / "b")
        params_same = all(np.array_equal(x, y) for x, y in
                          zip(first.learner.state_arrays().values(),
                              second.learner.state_arrays().values()))
        # a reloaded checkpoint must give the same evaluation
        from safegrid.learner import SafetySAC as _S

        reloaded, _ = _S.load(second.checkpoint)
        rep3 = evaluate(echoed, reloaded, 0)
        same = (params_same and first.curve == second.curve
                and [dataclasses.asdict(e) for e in rep1.episodes]
                == [dataclasses.asdict(e) for e in rep2.episodes]
                == [dataclasses.asdict(e) for e in rep3.episodes]
                and json.dumps(first.refinement) == json.dumps(second.refinement))
        verdicts.append((mode[0].split("=")[1], same))
    ok = all(v for _, v in verdicts)
    assert criterion(9, ok, ", ".join(f"advisor {m}: {'identical' if v else 'differs'}"
                                      for m, v in verdicts))
