"""Fixed-length observation vectors with frame stacking."""

from __future__ import annotations

from collections import deque

import numpy as np

from ..env.core import GridState
from ..env.signals import EnvConfig
from ..grid.case import GridCase
from ..grid.limits import line_loading

CLIP = 5.0


class Featurizer:
    """Maps a :class:`GridState` to a bounded feature frame.

    Frame layout: line loadings (so entry ``j`` is line ``j``'s I/I_max),
    line in-service flags, overflow counters, two busbar voltages per
    substation, per-element busbar one-hots and cooldowns, load levels
    relative to nominal, normalized episode step, terminal flag.
    Terminal states map to zeros with only the terminal flag set.
    """

    def __init__(self, case: GridCase, config: EnvConfig, episode_length: int, n_hist: int = 6):
        if n_hist < 1:
            raise ValueError("n_hist must be at least 1")
        self.case = case
        self.config = config
        self.episode_length = episode_length
        self.n_hist = n_hist
        self.keys = case.element_keys
        self.subs = [s.id for s in case.substations]
        self._sub_index = {s: i for i, s in enumerate(self.subs)}
        m, e = case.n_lines, len(self.keys)
        self.frame_dim = 3 * m + 2 * len(self.subs) + 3 * e + len(case.loads) + 2
        self.dim = self.frame_dim * n_hist
        self._history: deque[np.ndarray] = deque(maxlen=n_hist)

    def frame(self, state: GridState) -> np.ndarray:
        out = np.zeros(self.frame_dim)
        if state.terminal:
            out[-1] = 1.0
            return out
        case, topo = self.case, state.topology
        m = case.n_lines
        rho = line_loading(case, state.solution)
        pos = 0
        for i, ln in enumerate(case.lines):
            out[i] = min(rho[ln.id], CLIP)
            out[m + i] = 1.0 if topo.line_status[ln.id] else 0.0
            out[2 * m + i] = state.overflow.get(ln.id, 0) / (self.config.overflow_window + 1)
        pos = 3 * m
        for node, vm in zip(state.solution.nodes, state.solution.voltage_magnitude):
            out[pos + 2 * self._sub_index[node.substation] + node.busbar] = min(vm, CLIP)
        pos += 2 * len(self.subs)
        cd = max(self.config.cooldown_steps, 1)
        for i, key in enumerate(self.keys):
            out[pos + 2 * i + topo.element_busbar[key]] = 1.0
            out[pos + 2 * len(self.keys) + i] = topo.cooldowns.get(key, 0) / cd
        pos += 3 * len(self.keys)
        for i, ld in enumerate(case.loads):
            out[pos + i] = min(state.load_p[ld.id] / ld.p, CLIP) if ld.p else 0.0
        pos += len(case.loads)
        out[pos] = state.step / self.episode_length
        return out

    def reset(self, state: GridState) -> np.ndarray:
        f = self.frame(state)
        self._history.clear()
        for _ in range(self.n_hist):
            self._history.append(f)
        return self.observation()

    def push(self, state: GridState) -> np.ndarray:
        self._history.append(self.frame(state))
        return self.observation()

    def observation(self) -> np.ndarray:
        return np.concatenate(list(self._history))

    def shift(self, obs: np.ndarray, state: GridState) -> np.ndarray:
        """Observation after ``state`` given the observation before it."""
        return np.concatenate([obs[self.frame_dim:], self.frame(state)])
