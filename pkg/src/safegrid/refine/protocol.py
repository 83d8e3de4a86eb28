"""Trigger selection and the simulate-validate-append refinement loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from ..env.actions import Action, full_configuration
from ..env.core import GridState, TopologyEnv, Transition
from ..env.signals import compute_safety_cost
from ..grid.case import GridCase, line_ex_key, line_or_key
from .buffer import ReplayBuffer
from .config import RefinementConfig
from .parse import NOOP, OK, AdvisorProposal, parse_proposal
from .prompt import build_prompt

log = logging.getLogger(__name__)


def select_candidates(buffer: ReplayBuffer, cfg: RefinementConfig,
                      skip_attempted: bool = True) -> list[Transition]:
    """Unrefined transitions with ``r < r_thr``, newest first, at most N_LLM."""
    out = []
    for tr in reversed(buffer.snapshot()):
        if tr.refined or not tr.r < cfg.r_thr:
            continue
        if skip_attempted and tr.uid in buffer.attempted:
            continue
        out.append(tr)
        if len(out) == cfg.N_LLM:
            break
    return out


def proposal_to_action(proposal: AdvisorProposal, state: GridState,
                       case: GridCase) -> tuple[Action | None, str | None]:
    """Turn a line-level proposal into a full set-action on one substation.

    The substation is the endpoint shared by every proposed line. Elements
    the proposal does not mention keep their current busbar.
    """
    if proposal.status == NOOP:
        return Action.do_nothing(), None
    if proposal.status != OK:
        return None, proposal.reason or "unparseable proposal"
    subs = None
    for j in proposal.changes:
        ln = case.line(j)
        ends = {ln.from_sub, ln.to_sub}
        subs = ends if subs is None else subs & ends
    if not subs:
        return None, "multiple substations"
    busbars = state.topology.element_busbar
    candidates = []
    for sub in sorted(subs):
        overrides = {
            (line_or_key(j) if case.line(j).from_sub == sub else line_ex_key(j)): bb
            for j, bb in proposal.changes.items()
        }
        action = full_configuration(case, sub, busbars, overrides)
        current = full_configuration(case, sub, busbars, {})
        candidates.append((action == current, sub, action))
    # a pair of endpoints is only ambiguous for single-line proposals; prefer
    # the end where the proposal actually changes something
    candidates.sort(key=lambda c: (c[0], c[1]))
    return candidates[0][2], None


@dataclass
class RoundRecord:
    round: int
    prompt: str
    raw_text: str
    proposal: AdvisorProposal | None
    action: Action | None
    outcome: str
    r_hat: float | None = None
    c_hat: float | None = None
    accepted: bool = False


@dataclass
class RefineResult:
    original: Transition
    refined: Transition | None
    rounds: list[RoundRecord] = field(default_factory=list)


def improves(r_hat: float, c_hat: float, r: float, c: float) -> bool:
    """Strict reward gain; equal reward with a lower safety cost also counts."""
    return r_hat > r or (r_hat == r and c_hat < c)


def refine(tr: Transition, advisor, env: TopologyEnv, K: int,
           cfg: RefinementConfig | None = None) -> RefineResult:
    """Up to ``K`` advisor rounds; return the first improving re-simulation."""
    cfg = cfg or RefinementConfig()
    case = env.case
    line_ids = {ln.id for ln in case.lines}
    c_orig = compute_safety_cost(tr.c_v, tr.c_l, env.config)
    prompt = build_prompt(tr, case, cfg)
    result = RefineResult(tr, None)
    history: list[AdvisorProposal] = []
    for k in range(1, K + 1):
        try:
            raw = advisor.advise(prompt, tr, history)
        except Exception as exc:  # transport failures never abort training
            log.warning("advisor round %d failed: %s", k, exc)
            result.rounds.append(RoundRecord(k, prompt, "", None, None, f"advisor error: {exc}"))
            continue
        proposal = parse_proposal(raw, line_ids)
        history.append(proposal)
        action, why = proposal_to_action(proposal, tr.s, case)
        if action is None:
            result.rounds.append(RoundRecord(k, prompt, raw, proposal, None, f"rejected: {why}"))
            continue
        _, rejection = env.validate_action(tr.s, action)
        if rejection:
            result.rounds.append(RoundRecord(k, prompt, raw, proposal, action,
                                             f"rejected: {rejection}"))
            continue
        sim = env.step(tr.s, action)
        c_hat = compute_safety_cost(sim.c_v, sim.c_l, env.config)
        rec = RoundRecord(k, prompt, raw, proposal, action, "", sim.r, c_hat)
        if improves(sim.r, c_hat, tr.r, c_orig):
            rec.outcome, rec.accepted = "accepted", True
            result.rounds.append(rec)
            result.refined = Transition(
                tr.s, action, sim.r, sim.c_v, sim.c_l, sim.s_next, refined=True,
                executed=sim.executed, source_uid=tr.uid,
            )
            return result
        rec.outcome = "no improvement"
        result.rounds.append(rec)
    return result


@dataclass
class CycleStats:
    candidates: int = 0
    accepted: int = 0
    advisor_errors: int = 0
    results: list[RefineResult] = field(default_factory=list)


def refine_buffer(buffer: ReplayBuffer, advisor, env: TopologyEnv, cfg: RefinementConfig,
                  attach: Callable[[Transition, Transition], Transition] | None = None,
                  keep_results: bool = False) -> CycleStats:
    """One refinement invocation over the current candidates.

    Candidates are processed one after another and refined tuples are pushed
    as soon as they are accepted, so an interrupted cycle keeps its progress.
    ``attach(original, refined)`` adds learner-side data before the push.
    """
    stats = CycleStats()
    for tr in select_candidates(buffer, cfg):
        buffer.attempted.add(tr.uid)
        stats.candidates += 1
        res = refine(tr, advisor, env, cfg.K, cfg)
        stats.advisor_errors += sum(r.outcome.startswith("advisor error") for r in res.rounds)
        if res.refined is not None:
            refined = attach(tr, res.refined) if attach else res.refined
            res.refined = buffer.push(refined)
            stats.accepted += 1
        if keep_results:
            stats.results.append(res)
    return stats
