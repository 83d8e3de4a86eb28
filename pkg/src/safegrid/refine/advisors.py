"""Advisors answering refinement prompts with a ``proposed LINE changes`` list."""

from __future__ import annotations

import json
import logging
import os
import urllib.error
import urllib.request
from pathlib import Path

from ..env.actions import Action, enumerate_actions
from ..env.core import GridState, TopologyEnv, Transition
from ..grid.case import split_key
from ..grid.limits import line_loading
from .parse import OK, AdvisorProposal, parse_proposal
from .prompt import MARKER

log = logging.getLogger(__name__)

TOKEN_ENV = "SAFEGRID_ADVISOR_TOKEN"


class AdvisorError(RuntimeError):
    pass


def _overload_score(env: TopologyEnv, before: GridState, after: GridState) -> float:
    """Total overload above rating plus one unit per line protection opened."""
    rho = line_loading(env.case, after.solution)
    tripped = sum(
        1 for j, up in before.topology.line_status.items()
        if up and not after.topology.line_status[j]
    )
    return sum(max(0.0, r - 1.0) for r in rho.values()) + tripped


def line_changes(env: TopologyEnv, state: GridState, action: Action) -> dict[int, int] | None:
    """Express a full set-action as busbars of every line at its substation.

    Generators and loads cannot be named in a line list, so the labelling
    (or its busbar swap) must leave them where they are; ``None`` otherwise.
    """
    (sub,) = action.substations(env.case)
    target = action.as_dict()
    current = state.topology.element_busbar
    others = [k for k in target if not split_key(k)[0].startswith("line")]
    if all(target[k] == current[k] for k in others):
        pass
    elif all(1 - target[k] == current[k] for k in others):
        target = {k: 1 - v for k, v in target.items()}
    else:
        return None
    lines = {split_key(k)[1]: v for k, v in target.items() if split_key(k)[0].startswith("line")}
    if not lines:
        return None
    unchanged = all(
        target[k] == current[k] for k in target if split_key(k)[0].startswith("line")
    )
    return None if unchanged else lines


def format_changes(changes: dict[int, int] | None) -> str:
    if not changes:
        return "{}"
    return "{" + ", ".join(f"{j} : {b}" for j, b in sorted(changes.items())) + "}"


def rank_candidates(env: TopologyEnv, state: GridState, subs, exclude=()):
    """Simulate every line-expressible configuration of ``subs`` one step ahead.

    Returns ``(score, c_v, max_rho, index, action, changes)`` sorted best first,
    only for non-terminal outcomes.
    """
    actions = enumerate_actions(env.case)
    ranked = []
    for idx, act in enumerate(actions):
        if act.is_do_nothing or act in exclude:
            continue
        if act.substations(env.case) - set(subs):
            continue
        changes = line_changes(env, state, act)
        if changes is None:
            continue
        _, rejection = env.validate_action(state, act)
        if rejection:
            continue
        sim = env.step(state, act)
        if sim.s_next.failed:
            continue
        rho = line_loading(env.case, sim.s_next.solution)
        ranked.append((_overload_score(env, state, sim.s_next), sim.c_v,
                       max(rho.values()), idx, act, changes))
    ranked.sort(key=lambda x: x[:4])
    return ranked


def advise_rule_based(state: GridState, env: TopologyEnv, top_lines: int = 3,
                      exclude=()) -> tuple[AdvisorProposal, Action]:
    """One-step look-ahead search over the endpoints of the most-loaded lines.

    Proposes the candidate with the lowest overload score if it beats
    doing nothing, else do-nothing.
    """
    case = env.case
    rho = line_loading(case, state.solution)
    over = sorted((j for j, r in rho.items() if r > 1.0), key=lambda j: (-rho[j], j))
    nothing = Action.do_nothing()
    if not over:
        return parse_proposal(f"No overloads.\n{MARKER} {{}}"), nothing

    subs = []
    for j in over[:top_lines]:
        ln = case.line(j)
        for sub in (ln.from_sub, ln.to_sub):
            if sub in case.controllable_substations and sub not in subs:
                subs.append(sub)

    base = env.step(state, nothing)
    baseline = float("inf") if base.s_next.failed else _overload_score(env, state, base.s_next)
    ranked = rank_candidates(env, state, subs, exclude)
    if ranked and ranked[0][0] < baseline:
        score, _, _, _, act, changes = ranked[0]
        text = (
            f"Most loaded lines: {over[:top_lines]}. Best one-step reassignment found at "
            f"substations {subs} lowers the overload score from {baseline:.4f} to {score:.4f}.\n"
            f"{MARKER} {format_changes(changes)}"
        )
        return parse_proposal(text, {ln.id for ln in case.lines}), act
    return parse_proposal(f"No improving reassignment.\n{MARKER} {{}}"), nothing


class RuleBasedAdvisor:
    """Physics-guided baseline answering in the advisor text schema.

    Later rounds skip configurations proposed in earlier ones.
    """

    name = "rule"

    def __init__(self, env: TopologyEnv, top_lines: int = 3):
        self.env = env
        self.top_lines = top_lines
        self._tried: list[Action] = []

    def advise(self, prompt: str, tr: Transition, history) -> str:
        if not history:
            self._tried = []
        proposal, act = advise_rule_based(tr.s, self.env, self.top_lines, tuple(self._tried))
        if proposal.status == OK:
            self._tried.append(act)
        return proposal.raw_text


class MockAdvisor:
    """Replays the text files of a directory in name order, cycling."""

    name = "mock"

    def __init__(self, directory: str | Path):
        directory = Path(directory)
        self.responses = [p.read_text() for p in sorted(directory.glob("*.txt"))]
        if not self.responses:
            raise AdvisorError(f"no *.txt responses in {directory}")
        self.calls = 0

    def advise(self, prompt: str, tr: Transition, history) -> str:
        text = self.responses[self.calls % len(self.responses)]
        self.calls += 1
        return text


class RemoteAdvisor:
    """POSTs ``{"model", "prompt"}`` as JSON and returns the reply text.

    A JSON reply with a ``response`` or ``text`` field is unwrapped; any
    other body is returned as is. The bearer token, if any, comes from
    the ``SAFEGRID_ADVISOR_TOKEN`` environment variable.
    """

    name = "remote"

    def __init__(self, endpoint: str, model: str = "", timeout: float = 30.0):
        if not endpoint:
            raise ValueError("remote advisor needs an endpoint")
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout

    def advise(self, prompt: str, tr: Transition, history) -> str:
        body = json.dumps({"model": self.model, "prompt": prompt}).encode()
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read().decode("utf-8", errors="replace")
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise AdvisorError(f"advisor request to {self.endpoint} failed: {exc}") from exc
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError:
            return raw
        if isinstance(doc, dict):
            for key in ("response", "text"):
                if isinstance(doc.get(key), str):
                    return doc[key]
        return raw
