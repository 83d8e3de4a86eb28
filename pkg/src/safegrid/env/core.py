"""Episodic topology-control environment.

The environment is a set of pure functions over immutable
:class:`GridState` snapshots: ``step`` never mutates its input, so any
stored state can be re-simulated with a different action.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..grid.case import GridCase, split_key
from ..grid.limits import LimitReport, evaluate_limits, line_loading
from ..grid.powerflow import PowerFlowError, PowerFlowOptions, PowerFlowSolution
from ..grid.snapshot import IslandingError, Snapshot, slack_generation_mw, solve_case
from ..grid.topology import TopologyState
from .actions import Action
from .chronics import Chronics
from .signals import EnvConfig, blackout_reward, compute_reward


class EnvUsageError(RuntimeError):
    pass


class UnusableEpisodeError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GridState:
    offset: int
    t: int
    step: int
    topology: TopologyState
    solution: PowerFlowSolution | None
    limits: LimitReport | None
    gen_p: dict[int, float]
    load_p: dict[int, float]
    overflow: dict[int, int] = field(default_factory=dict)
    terminal: bool = False
    failed: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "t": self.t,
            "step": self.step,
            "topology": self.topology.to_dict(),
            "solution": self.solution.to_dict() if self.solution else None,
            "limits": self.limits.to_dict() if self.limits else None,
            "gen_p": {str(k): v for k, v in self.gen_p.items()},
            "load_p": {str(k): v for k, v in self.load_p.items()},
            "overflow": {str(k): v for k, v in self.overflow.items()},
            "terminal": self.terminal,
            "failed": self.failed,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridState":
        return cls(
            offset=d["offset"],
            t=d["t"],
            step=d["step"],
            topology=TopologyState.from_dict(d["topology"]),
            solution=PowerFlowSolution.from_dict(d["solution"]) if d["solution"] else None,
            limits=LimitReport.from_dict(d["limits"]) if d["limits"] else None,
            gen_p={int(k): v for k, v in d["gen_p"].items()},
            load_p={int(k): v for k, v in d["load_p"].items()},
            overflow={int(k): v for k, v in d["overflow"].items()},
            terminal=d["terminal"],
            failed=d["failed"],
            reason=d["reason"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GridState":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridState):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True, eq=False)
class Transition:
    """One replay record ``(s, a, r, C_v, C_l, s')``.

    ``a`` is the requested action and ``executed`` what the environment
    applied after validation. ``obs``/``next_obs``/``action_index`` are
    filled in by the training loop for the learner.
    """

    s: GridState
    a: Action
    r: float
    c_v: float
    c_l: float
    s_next: GridState
    refined: bool = False
    executed: Action = Action()
    rejection: str | None = None
    action_index: int | None = None
    obs: np.ndarray | None = None
    next_obs: np.ndarray | None = None
    uid: int | None = None
    source_uid: int | None = None

    def with_learning_data(self, **kwargs) -> "Transition":
        return replace(self, **kwargs)


class TopologyEnv:
    """Case + chronics + config; stepping is a pure function of the state."""

    def __init__(self, case: GridCase, chronics: Chronics, config: EnvConfig = EnvConfig()):
        chronics.check_case(case)
        self.case = case
        self.chronics = chronics
        self.config = config
        self.options = PowerFlowOptions(config.pf_tolerance, config.pf_max_iterations)
        self.dt = chronics.step_minutes
        self._gen_idx = {g: j for j, g in enumerate(chronics.gen_ids)}

    @property
    def episode_length(self) -> int:
        return min(self.config.max_episode_length, self.chronics.horizon)

    def valid_offsets(self) -> range:
        return range(0, self.chronics.n_rows - self.episode_length)

    def _solve(self, topo: TopologyState, t: int) -> tuple[Snapshot, dict, dict]:
        load_p, load_q, gen_p, gen_q = self.chronics.row(t)
        snap = solve_case(self.case, topo, load_p, load_q, gen_p, gen_q, self.options)
        dispatch = dict(gen_p)
        dispatch[self.case.slack_generator.id] = slack_generation_mw(
            self.case, snap, gen_p, load_p
        )
        return snap, dispatch, load_p

    def reset(self, offset: int = 0) -> GridState:
        if offset not in self.valid_offsets():
            raise IndexError(
                f"episode offset {offset} outside chronics "
                f"(rows {self.chronics.n_rows}, episode length {self.episode_length})"
            )
        topo = TopologyState.initial(self.case)
        try:
            snap, dispatch, load_p = self._solve(topo, offset)
        except (PowerFlowError, IslandingError) as exc:
            raise UnusableEpisodeError(f"initial power flow at row {offset}: {exc}") from exc
        return GridState(offset, offset, 0, topo, snap.solution, snap.limits, dispatch, load_p)

    def validate_action(self, state: GridState, action: Action) -> tuple[Action, str | None]:
        """Return the action to execute and the rejection reason, if any."""
        if action.is_do_nothing:
            return action, None
        known = state.topology.element_busbar
        for key, bb in action.changes:
            if key not in known:
                return Action.do_nothing(), "unknown element"
            if bb not in (0, 1):
                return Action.do_nothing(), "invalid busbar"
        subs = action.substations(self.case)
        if len(subs) > 1:
            return Action.do_nothing(), "multiple substations"
        if not subs <= set(self.case.controllable_substations):
            return Action.do_nothing(), "substation not operable"
        if any(state.topology.cooldowns.get(k, 0) > 0 for k in action.keys()):
            return Action.do_nothing(), "cooldown"
        return action, None

    def _protect(self, topo: TopologyState, t: int, overflow: dict[int, int]):
        snap, dispatch, load_p = self._solve(topo, t)
        cfg = self.config
        if not cfg.protection:
            return snap, dispatch, load_p, topo, {}
        loading = line_loading(self.case, snap.solution)
        counts = {j: overflow.get(j, 0) + 1 for j, rho in loading.items() if rho > 1.0}
        trips = sorted(
            j for j, rho in loading.items()
            if rho > cfg.hard_overflow or counts.get(j, 0) > cfg.overflow_window
        )
        while trips:
            topo = topo.with_lines_out(trips)
            snap, dispatch, load_p = self._solve(topo, t)
            loading = line_loading(self.case, snap.solution)
            trips = sorted(j for j, rho in loading.items() if rho > cfg.hard_overflow)
        counts = {j: overflow.get(j, 0) + 1 for j, rho in loading.items() if rho > 1.0}
        return snap, dispatch, load_p, topo, counts

    def _bus_vectors(self, dispatch: dict, load_p: dict, t: int):
        base = self.case.base_mva
        index = {b.substation: i for i, b in enumerate(self.case.buses)}
        gen = np.zeros(self.case.n_buses)
        ref = np.zeros(self.case.n_buses)
        load = np.zeros(self.case.n_buses)
        ref_row = self.chronics.gen_p[t]
        for g in self.case.generators:
            i = index[g.substation]
            gen[i] += dispatch[g.id] / base
            ref[i] += ref_row[self._gen_idx[g.id]] / base
        for ld in self.case.loads:
            load[index[ld.substation]] += load_p[ld.id] / base
        return gen, ref, load

    def step(self, state: GridState, action: Action) -> Transition:
        if state.terminal:
            raise EnvUsageError("cannot step a terminal state")
        executed, rejection = self.validate_action(state, action)
        topo = state.topology
        if not executed.is_do_nothing:
            topo = topo.with_busbars(executed.as_dict())
        topo = topo.tick_cooldowns(executed.keys(), self.config.cooldown_steps)
        t = state.t + 1
        step = state.step + 1
        at_end = step >= self.episode_length

        try:
            snap, dispatch, load_p, topo, counts = self._protect(topo, t, state.overflow)
        except (PowerFlowError, IslandingError) as exc:
            last = state.offset + self.episode_length
            refs = self.chronics.gen_p[t:last + 1] / self.case.base_mva
            reward = blackout_reward(refs, self.config, self.dt)
            load_p = self.chronics.row(t)[0]
            nxt = GridState(
                state.offset, t, step, topo, None, None, {}, load_p, {},
                terminal=True, failed=True, reason=f"{type(exc).__name__}: {exc}",
            )
            # de-energized buses sit outside every voltage band; lines carry no current
            return Transition(state, action, reward, 1.0, 0.0, nxt,
                              executed=executed, rejection=rejection)

        gen, ref, load = self._bus_vectors(dispatch, load_p, t)
        reward = compute_reward(gen, ref, load, self.config, self.dt)
        nxt = GridState(
            state.offset, t, step, topo, snap.solution, snap.limits, dispatch, load_p,
            counts, terminal=at_end, reason="horizon" if at_end else "",
        )
        return Transition(state, action, reward, snap.limits.c_v, snap.limits.c_l, nxt,
                          executed=executed, rejection=rejection)

    def recompute_limits(self, state: GridState) -> LimitReport:
        return evaluate_limits(self.case, state.solution)

    def lines_at(self, state: GridState, sub: int) -> dict[int, list[int]]:
        """Line ids attached to each busbar of ``sub``."""
        out: dict[int, list[int]] = {0: [], 1: []}
        for key in self.case.substation_elements(sub):
            kind, ident = split_key(key)
            if kind.startswith("line"):
                out[state.topology.element_busbar[key]].append(ident)
        return out
