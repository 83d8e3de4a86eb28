"""Greedy evaluation rollouts."""

from __future__ import annotations

from typing import Callable

from ..env.actions import Action
from ..env.core import GridState, TopologyEnv, UnusableEpisodeError
from .metrics import compute_metrics
from .report import RunReport


class DoNothingPolicy:
    def begin(self, state: GridState) -> None:
        pass

    def __call__(self, state: GridState) -> Action:
        return Action.do_nothing()


class LearnerPolicy:
    """Greedy (or sampled) actions of a learner through a featurizer."""

    def __init__(self, learner, featurizer, actions, mode: str = "greedy", rng=None):
        self.learner = learner
        self.featurizer = featurizer
        self.actions = actions
        self.mode = mode
        self.rng = rng
        self._obs = None

    def begin(self, state: GridState) -> None:
        self._obs = self.featurizer.reset(state)

    def __call__(self, state: GridState) -> Action:
        idx = self.learner.select_action(self._obs, self.mode, self.rng)
        return self.actions[idx]

    def observe(self, state: GridState) -> None:
        self._obs = self.featurizer.push(state)


def run_episode(env: TopologyEnv, policy, offset: int) -> list:
    state = env.reset(offset)
    policy.begin(state)
    trace = []
    while not state.terminal:
        tr = env.step(state, policy(state))
        trace.append(tr)
        state = tr.s_next
        if hasattr(policy, "observe"):
            policy.observe(state)
    return trace


def rollout(env_factory: Callable[[], TopologyEnv], policy, offsets, seed: int | None = None,
            fingerprint: str = "") -> RunReport:
    """Run one episode per offset; unusable starting rows are skipped and counted."""
    offsets = list(offsets)
    if not offsets:
        raise ValueError("rollout needs at least one episode")
    env = env_factory()
    report = RunReport(fingerprint=fingerprint)
    for off in offsets:
        try:
            trace = run_episode(env, policy, off)
        except UnusableEpisodeError:
            report.skipped += 1
            continue
        report.episodes.append(compute_metrics(trace, seed=seed, offset=off))
    return report
