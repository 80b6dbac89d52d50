from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray          # allocation fractions w / W
    reward: float
    next_state: np.ndarray
    terminal: bool = False
    action_index: int = -1      # grid index for discrete agents

    def __post_init__(self) -> None:
        if abs(float(np.sum(self.action)) - 1.0) > 1e-9:
            raise ValueError("transition action fractions must sum to 1")


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is evicted first."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.state = np.zeros((capacity, state_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros(capacity)
        self.next_state = np.zeros((capacity, state_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.action_index = np.full(capacity, -1, dtype=np.int64)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, tr: Transition) -> None:
        i = self._next
        self.state[i] = tr.state
        self.action[i] = tr.action
        self.reward[i] = tr.reward
        self.next_state[i] = tr.next_state
        self.terminal[i] = tr.terminal
        self.action_index[i] = tr.action_index
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _ordered_indices(self) -> np.ndarray:
        start = (self._next - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def transitions(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        return [Transition(self.state[i].copy(), self.action[i].copy(), float(self.reward[i]),
                           self.next_state[i].copy(), bool(self.terminal[i]),
                           int(self.action_index[i]))
                for i in self._ordered_indices()]

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        idx = self._ordered_indices()[idx]
        return {"state": self.state[idx], "action": self.action[idx], "reward": self.reward[idx],
                "next_state": self.next_state[idx], "terminal": self.terminal[idx],
                "action_index": self.action_index[idx]}
