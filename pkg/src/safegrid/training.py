"""Training loop: Safety-SAC interaction with periodic buffer refinement."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .env.actions import enumerate_actions
from .env.chronics import read_chronics
from .env.core import TopologyEnv
from .fixtures import bundled_case, stressed_chronics
from .grid.case import read_case
from .learner import Featurizer, SafetySAC, make_batch
from .metrics import LearnerPolicy, RunReport, compute_metrics, rollout
from .refine import (
    MockAdvisor,
    RemoteAdvisor,
    ReplayBuffer,
    RuleBasedAdvisor,
    refine_buffer,
)

log = logging.getLogger(__name__)


def load_case_and_chronics(cfg: RunConfig):
    run = cfg.run
    if run.case.startswith("bundled:"):
        case = bundled_case(run.case.split(":", 1)[1])
    else:
        case = read_case(run.case)
    if run.chronics == "bundled:case5_stressed":
        chronics = stressed_chronics(case)
    elif run.chronics.startswith("bundled:"):
        raise FileNotFoundError(f"no bundled chronics named {run.chronics}")
    else:
        chronics = read_chronics(run.chronics, case)
    return case, chronics


def make_env(cfg: RunConfig) -> TopologyEnv:
    case, chronics = load_case_and_chronics(cfg)
    return TopologyEnv(case, chronics, cfg.env)


def episode_offsets(env: TopologyEnv, eval_episodes: int) -> tuple[list[int], list[int]]:
    """Split episode starts (multiples of the episode length) into train and eval."""
    length = env.episode_length
    starts = [o for o in env.valid_offsets() if o % length == 0]
    if len(starts) <= eval_episodes:
        raise ValueError(
            f"chronics hold {len(starts)} episodes; need more than eval_episodes={eval_episodes}"
        )
    return starts[:-eval_episodes], starts[-eval_episodes:]


def make_advisor(cfg: RunConfig, env: TopologyEnv):
    a = cfg.advisor
    if a.mode == "off":
        return None
    if a.mode == "rule":
        return RuleBasedAdvisor(env, a.top_lines)
    if a.mode == "mock":
        return MockAdvisor(a.directory)
    return RemoteAdvisor(a.endpoint, a.model, a.timeout)


@dataclass
class TrainResult:
    seed: int
    learner: SafetySAC
    curve: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    refinement: dict = field(default_factory=lambda: {"cycles": 0, "candidates": 0,
                                                       "accepted": 0, "advisor_errors": 0})
    last_report: dict = field(default_factory=dict)
    checkpoint: Path | None = None


def train(cfg: RunConfig, seed: int, out_dir: str | Path | None = None,
          env: TopologyEnv | None = None, advisor=None) -> TrainResult:
    """Run ``total_steps`` environment steps with one gradient step each."""
    env = env or make_env(cfg)
    lc = cfg.learner
    if advisor is None:
        advisor = make_advisor(cfg, env)
    actions = enumerate_actions(env.case)
    index_of = {a: i for i, a in enumerate(actions)}
    featurizer = Featurizer(env.case, env.config, env.episode_length, lc.n_hist)
    learner = SafetySAC(featurizer.dim, len(actions), lc, seed)
    buffer = ReplayBuffer(lc.buffer_capacity)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    train_offsets, _ = episode_offsets(env, cfg.run.eval_episodes)
    result = TrainResult(seed, learner)
    out = Path(out_dir) if out_dir else None

    def attach(orig, refined):
        return refined.with_learning_data(
            action_index=index_of[refined.a],
            obs=orig.obs,
            next_obs=featurizer.shift(orig.obs, refined.s_next),
        )

    state, obs, trace = None, None, []
    start = max(lc.batch_size, lc.warmup)
    for step in range(1, lc.total_steps + 1):
        if state is None or state.terminal:
            if trace:
                m = compute_metrics(trace)
                result.curve.append((step - 1, m.cumulative_reward, m.survival_step,
                                     m.overload_rate, m.violation_rate))
            state = env.reset(int(rng.choice(train_offsets)))
            obs = featurizer.reset(state)
            trace = []
        a = learner.select_action(obs, "sample", rng)
        tr = env.step(state, actions[a])
        next_obs = featurizer.push(tr.s_next)
        buffer.push(tr.with_learning_data(action_index=a, obs=obs, next_obs=next_obs))
        trace.append(tr)
        state, obs = tr.s_next, next_obs

        if len(buffer) >= start:
            result.last_report = learner.train_step(
                make_batch(buffer.sample(lc.batch_size, rng), env.config)
            )
        if advisor is not None and step % cfg.refine.f == 0:
            stats = refine_buffer(buffer, advisor, env, cfg.refine, attach)
            ref = result.refinement
            ref["cycles"] += 1
            ref["candidates"] += stats.candidates
            ref["accepted"] += stats.accepted
            ref["advisor_errors"] += stats.advisor_errors
            if stats.advisor_errors:
                log.warning("refinement cycle at step %d: %d advisor errors", step,
                            stats.advisor_errors)
        if out and cfg.run.checkpoint_every and step % cfg.run.checkpoint_every == 0:
            learner.save(out / f"checkpoint_seed{seed}_step{step}.npz")
    if trace:
        m = compute_metrics(trace)
        result.curve.append((lc.total_steps, m.cumulative_reward, m.survival_step,
                             m.overload_rate, m.violation_rate))
    if out:
        out.mkdir(parents=True, exist_ok=True)
        result.checkpoint = learner.save(
            out / f"checkpoint_seed{seed}.npz",
            extra={"fingerprint": cfg.fingerprint(), "refinement": result.refinement},
        )
    return result


def evaluate(cfg: RunConfig, learner: SafetySAC, seed: int,
             env: TopologyEnv | None = None) -> RunReport:
    env = env or make_env(cfg)
    actions = enumerate_actions(env.case)
    featurizer = Featurizer(env.case, env.config, env.episode_length, learner.config.n_hist)
    _, eval_offsets = episode_offsets(env, cfg.run.eval_episodes)
    policy = LearnerPolicy(learner, featurizer, actions, "greedy")
    return rollout(lambda: env, policy, eval_offsets, seed, cfg.fingerprint())


def write_config_echo(cfg: RunConfig, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.resolved.ini"
    path.write_text(cfg.to_ini())
    return path


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True))
    return path
