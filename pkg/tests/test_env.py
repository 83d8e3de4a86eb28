import numpy as np
import pytest

from safegrid.env import (
    Action,
    Chronics,
    ChronicsError,
    EnvConfig,
    EnvUsageError,
    GridState,
    TopologyEnv,
    UnusableEpisodeError,
    compute_reward,
    compute_safety_cost,
    enumerate_actions,
    read_chronics,
    trajectory_objectives,
    write_chronics,
)
from safegrid.env.actions import canonical
from safegrid.fixtures import constant_chronics
from safegrid.grid import evaluate_limits

from conftest import run_until_overload


# -- signals ----------------------------------------------------------------

def test_reward_examples():
    cfg = EnvConfig(penalty=1.0)
    assert compute_reward([1.0], [1.0], [0.8], cfg, 1.0) == pytest.approx(-0.8)
    assert compute_reward([1.2], [1.0], [0.6], cfg, 1.0) == pytest.approx(-0.54)
    free = EnvConfig(penalty=0.0)
    assert compute_reward([1.2], [0.3], [0.6], free, 5.0) == pytest.approx(-0.5)


def test_reward_pure_load_bus_guard():
    cfg = EnvConfig(penalty=0.0)
    # bus 0 generates 1.0 and carries 0.2; bus 1 is pure load 0.5
    assert compute_reward([1.0, 0.0], [1.0, 0.0], [0.2, 0.5], cfg, 1.0) == pytest.approx(-0.7)


def test_reward_monotone_in_tracking_error():
    cfg = EnvConfig(penalty=0.5)
    devs = np.linspace(0, 1, 20)
    rewards = [compute_reward([1.0 + d], [1.0], [0.8], cfg, 5.0)
               + 0.8 / (1.0 + d) for d in devs]  # strip the ratio term
    assert all(a >= b for a, b in zip(rewards, rewards[1:]))


def test_safety_cost_examples():
    cfg = EnvConfig()
    assert compute_safety_cost(0.0, 0.0, cfg) == 0.0
    assert compute_safety_cost(0.5, 0.1, cfg) == pytest.approx(0.46)
    assert compute_safety_cost(0.25, 0.9, EnvConfig(alpha_v=1, alpha_l=0)) == 0.25


class _T:
    def __init__(self, r, c_v, c_l):
        self.r, self.c_v, self.c_l = r, c_v, c_l


def test_trajectory_objectives():
    cfg = EnvConfig()
    j_op, j_safe, j = trajectory_objectives([_T(-1, 0, 0), _T(-2, 0, 0)], cfg)
    assert (j_op, j_safe, j) == (3, 0, 3)
    _, j_safe, _ = trajectory_objectives([_T(-1, 0.5, 0.1), _T(-1, 0, 0)], cfg)
    assert j_safe == pytest.approx(0.23)
    j_op, _, j = trajectory_objectives([_T(-1, 1, 1)], EnvConfig(kappa=0))
    assert j == j_op
    with pytest.raises(ValueError):
        trajectory_objectives([], cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(penalty=-1)
    with pytest.raises(ValueError):
        EnvConfig(max_episode_length=0)


# -- chronics ---------------------------------------------------------------

def test_chronics_round_trip(tmp_path, case5, stressed):
    path = tmp_path / "c.csv"
    write_chronics(stressed, path)
    back = read_chronics(path, case5)
    assert np.array_equal(back.load_p, stressed.load_p)
    assert np.array_equal(back.gen_p, stressed.gen_p)
    assert back.horizon == stressed.horizon


def test_chronics_invariants(case5):
    c = constant_chronics(case5, 5)
    with pytest.raises(ChronicsError):
        Chronics(c.load_ids, c.gen_ids, -c.load_p, c.load_q, c.gen_p, c.gen_q, 5.0, 4)
    with pytest.raises(ChronicsError):
        Chronics(c.load_ids, c.gen_ids, c.load_p, c.load_q, c.gen_p, c.gen_q, 5.0, 50)


def test_chronics_missing_sidecar(tmp_path):
    (tmp_path / "x.csv").write_text("load_0_p\n1.0\n")
    with pytest.raises(ChronicsError, match="sidecar"):
        read_chronics(tmp_path / "x.csv")


# -- reset / validate / step --------------------------------------------------

def test_reset_mild_first_row(env5):
    s = env5.reset(0)
    assert not s.terminal and s.t == 0 and s.step == 0
    assert s.limits.c_v == 0 and s.limits.c_l == 0


def test_reset_bounds(env5):
    with pytest.raises(IndexError):
        env5.reset(env5.chronics.n_rows)


def test_reset_infeasible_row(case5):
    env = TopologyEnv(case5, constant_chronics(case5, 10, scale=30.0, horizon=5))
    with pytest.raises(UnusableEpisodeError):
        env.reset(0)


def test_validate_action(calm_env):
    s = calm_env.reset(0)
    noop = Action.do_nothing()
    assert calm_env.validate_action(s, noop) == (noop, None)
    a = Action.from_mapping({"line_or:4": 2})
    assert calm_env.validate_action(s, a) == (noop, "invalid busbar")
    assert calm_env.validate_action(s, Action.from_mapping({"line_or:77": 1}))[1] == "unknown element"
    two = Action.from_mapping({"line_or:4": 1, "line_or:0": 1})
    assert calm_env.validate_action(s, two)[1] == "multiple substations"
    cooled = GridState(**{**s.__dict__, "topology": s.topology.tick_cooldowns(["line_or:4"], 2)})
    ok = Action.from_mapping({"line_or:4": 1})
    assert calm_env.validate_action(cooled, ok) == (noop, "cooldown")


def test_do_nothing_fixed_point(calm_env):
    s = calm_env.reset(0)
    tr = calm_env.step(s, Action.do_nothing())
    assert np.array_equal(tr.s_next.solution.voltage_magnitude, s.solution.voltage_magnitude)
    assert tr.s_next.topology == s.topology


def test_action_sets_cooldowns(calm_env):
    s = calm_env.reset(0)
    a = Action.from_mapping({"line_ex:2": 1, "line_or:4": 1})
    tr = calm_env.step(s, a)
    assert tr.rejection is None
    cd = tr.s_next.topology.cooldowns
    assert cd["line_ex:2"] == cd["line_or:4"] == calm_env.config.cooldown_steps
    assert all(v == 0 for k, v in cd.items() if k not in a.keys())
    again = calm_env.step(tr.s_next, Action.from_mapping({"line_ex:2": 0}))
    assert again.rejection == "cooldown"


def test_islanding_action_is_terminal(calm_env):
    s = calm_env.reset(0)
    tr = calm_env.step(s, Action.from_mapping({"load:0": 1}))
    assert tr.s_next.terminal and tr.s_next.failed
    assert (tr.c_v, tr.c_l) == (1.0, 0.0)
    with pytest.raises(EnvUsageError):
        calm_env.step(tr.s_next, Action.do_nothing())


def test_step_is_pure_and_tuple_faithful(env5):
    s = env5.reset(0)
    before = s.to_json()
    for a in enumerate_actions(env5.case)[:12]:
        tr = env5.step(s, a)
        assert s.to_json() == before
        if not tr.s_next.failed:
            rep = evaluate_limits(env5.case, tr.s_next.solution)
            assert (tr.c_v, tr.c_l) == (rep.c_v, rep.c_l)
        assert 0 <= tr.c_v <= 1 and 0 <= tr.c_l <= 1


def test_horizon_ends_episode(calm_env):
    s = calm_env.reset(0)
    n = 0
    while not s.terminal:
        s = calm_env.step(s, Action.do_nothing()).s_next
        n += 1
    assert n == calm_env.episode_length and not s.failed


def test_stressed_do_nothing_collapses_and_split_survives(env5):
    tr = run_until_overload(env5)
    assert tr.s_next.failed
    assert 100 < tr.s_next.step < 288
    rescue = env5.step(tr.s, Action.from_mapping({"line_ex:1": 0, "line_ex:2": 1,
                                                  "line_or:4": 1, "load:0": 0}))
    assert not rescue.s_next.failed


def test_state_json_round_trip(env5):
    s = env5.step(env5.reset(0), Action.do_nothing()).s_next
    assert GridState.from_json(s.to_json()) == s


def test_enumerate_actions_are_canonical_and_unique(case5):
    acts = enumerate_actions(case5)
    assert acts[0].is_do_nothing
    assert len(set(acts)) == len(acts)
    for a in acts[1:]:
        assert canonical(a, case5) == a
        assert len(a.substations(case5)) == 1
