"""Fixed-capacity replay buffer with serialized appends."""

from __future__ import annotations

import threading
from dataclasses import replace

import numpy as np

from ..env.core import Transition


class BufferUsageError(RuntimeError):
    pass


class ReplayBuffer:
    """FIFO ring of transitions.

    Every pushed transition receives a monotonically increasing ``uid``.
    Refined transitions are pushed like any other and keep a pointer to the
    original through ``source_uid``; the original itself is never touched.
    """

    def __init__(self, capacity: int = 5000):
        if capacity < 1:
            raise ValueError("buffer capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition | None] = [None] * capacity
        self._head = 0  # slot of the oldest item
        self._size = 0
        self._next_uid = 0
        self._lock = threading.Lock()
        self.attempted: set[int] = set()

    def __len__(self) -> int:
        return self._size

    @property
    def appended(self) -> int:
        return self._next_uid

    def push(self, tr: Transition) -> Transition:
        with self._lock:
            tr = replace(tr, uid=self._next_uid)
            self._next_uid += 1
            slot = (self._head + self._size) % self.capacity
            if self._size == self.capacity:
                evicted = self._items[self._head]
                self.attempted.discard(evicted.uid)
                self._head = (self._head + 1) % self.capacity
            else:
                self._size += 1
            self._items[slot] = tr
            return tr

    def __getitem__(self, i: int) -> Transition:
        """Item ``i`` in age order, 0 being the oldest."""
        if not -self._size <= i < self._size:
            raise IndexError(i)
        return self._items[(self._head + i % self._size) % self.capacity]

    def snapshot(self) -> tuple[Transition, ...]:
        """Read-only copy of the contents, oldest first."""
        with self._lock:
            return tuple(self[i] for i in range(self._size))

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size > self._size:
            raise BufferUsageError(
                f"cannot sample {batch_size} transitions from a buffer of {self._size}"
            )
        return rng.choice(self._size, size=batch_size, replace=False)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform minibatch without replacement."""
        with self._lock:
            idx = self.sample_indices(batch_size, rng)
            return [self[int(i)] for i in idx]

    def find(self, uid: int) -> Transition | None:
        for tr in self.snapshot():
            if tr.uid == uid:
                return tr
        return None
