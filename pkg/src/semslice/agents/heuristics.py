"""Static allocators; they ignore exploration and never learn."""
from __future__ import annotations

import numpy as np

from .simplex import AllocationAction, equal_allocation, proportional_allocation, project_to_simplex


class EqualAgent:
    kind = "equal"

    def __init__(self, n_slices: int, W: float, floors):
        self.n, self.W = n_slices, float(W)
        self.floors = np.asarray(floors, dtype=float)

    def act(self, features, explore: bool = False, rng=None, obs=None) -> tuple[AllocationAction, int]:
        action = equal_allocation(self.n, self.W)
        if np.any(action.bandwidth < self.floors):
            action = project_to_simplex(action.bandwidth, self.W, self.floors)
        return action, -1

    def observe(self, tr) -> None:
        pass

    def train(self, rng) -> None:
        return None

    def end_episode(self) -> None:
        pass

    def param_sets(self) -> dict:
        return {}

    def load_param_sets(self, sets) -> None:
        pass


class ProportionalAgent(EqualAgent):
    """Splits the residual above the floors in proportion to observed demand."""

    kind = "proportional"

    def act(self, features, explore: bool = False, rng=None, obs=None) -> tuple[AllocationAction, int]:
        if obs is None:
            raise ValueError("proportional allocation needs the raw observation")
        return proportional_allocation(obs.tdp, self.W, self.floors), -1
