"""Q-learning over a quantised simplex of bandwidth splits."""
from __future__ import annotations

import numpy as np

from .. import nn
from ..errors import DivergenceError
from .config import AgentConfig
from .replay import ReplayBuffer, Transition
from .simplex import AllocationAction, default_grid_levels, grid_allocations


def dqn_select_action(qnet: nn.ParamSet, features, epsilon: float, grid: np.ndarray,
                      rng: np.random.Generator) -> tuple[AllocationAction, int]:
    """Epsilon-greedy choice among grid rows; returns the allocation and its row index."""
    if len(grid) == 0:
        raise ValueError("empty action grid")
    if epsilon > 0 and rng.random() < epsilon:
        idx = int(rng.integers(0, len(grid)))
    else:
        q, _ = nn.forward(qnet, features)
        idx = int(np.argmax(q))
    return AllocationAction(grid[idx].copy()), idx


def dqn_targets(target_qnet: nn.ParamSet, batch: dict, gamma: float) -> np.ndarray:
    r = batch["reward"]
    if gamma == 0.0:
        return r.copy()
    q_next, _ = nn.forward(target_qnet, batch["next_state"])
    not_done = 1.0 - batch["terminal"].astype(float)
    return r + gamma * not_done * q_next.max(axis=1)


def dqn_train_step(qnet: nn.ParamSet, target_qnet: nn.ParamSet, adam: nn.AdamState,
                   buffer: ReplayBuffer, cfg: AgentConfig, rng: np.random.Generator
                   ) -> tuple[nn.ParamSet, nn.AdamState, float | None]:
    """Squared TD loss on a minibatch, one Adam step.  Target copies are the caller's job."""
    if len(buffer) < cfg.batch_size:
        return qnet, adam, None
    batch = buffer.sample(cfg.batch_size, rng)
    idx = batch["action_index"]
    if np.any(idx < 0):
        raise ValueError("discrete transitions need an action_index")
    y = dqn_targets(target_qnet, batch, cfg.gamma)
    q, cache = nn.forward(qnet, batch["state"])
    rows = np.arange(q.shape[0])
    td = q[rows, idx] - y
    loss = float(np.mean(td * td))
    if not np.isfinite(loss):
        raise DivergenceError("Q loss is not finite")
    g = np.zeros_like(q)
    g[rows, idx] = 2.0 * td / q.shape[0]
    qnet, adam = nn.adam_update(qnet, nn.backward(qnet, cache, g), adam, cfg.dqn_lr)
    return qnet, adam, loss


class DQNAgent:
    kind = "dqn"

    def __init__(self, state_dim: int, n_slices: int, W: float, floors, cfg: AgentConfig,
                 rng: np.random.Generator):
        self.cfg = cfg
        self.W = float(W)
        self.floors = np.asarray(floors, dtype=float)
        self.levels = cfg.dqn_grid_levels or default_grid_levels(n_slices)
        self.grid = grid_allocations(n_slices, self.levels, W, self.floors)
        hidden = list(cfg.hidden)
        self.qnet = nn.init_params([state_dim, *hidden, len(self.grid)],
                                   ["relu"] * len(hidden) + ["identity"], rng)
        self.target = self.qnet.copy()
        self.adam = nn.adam_init(self.qnet)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, state_dim, n_slices)
        self.episode = 0
        self.steps = 0
        self.updates = 0

    @property
    def epsilon(self) -> float:
        return self.cfg.epsilon_at(self.episode)

    def act(self, features, explore: bool, rng: np.random.Generator, obs=None) -> tuple[AllocationAction, int]:
        return dqn_select_action(self.qnet, features, self.epsilon if explore else 0.0, self.grid, rng)

    def observe(self, tr: Transition) -> None:
        self.buffer.push(tr)
        self.steps += 1

    def train(self, rng: np.random.Generator) -> float | None:
        if self.steps < self.cfg.warmup_steps:
            return None
        self.qnet, self.adam, loss = dqn_train_step(self.qnet, self.target, self.adam,
                                                    self.buffer, self.cfg, rng)
        if loss is not None:
            self.updates += 1
            if self.updates % self.cfg.dqn_target_period == 0:
                self.target = self.qnet.copy()
        return loss

    def end_episode(self) -> None:
        self.episode += 1

    def param_sets(self) -> dict[str, nn.ParamSet]:
        return {"qnet": self.qnet}

    def load_param_sets(self, sets: dict[str, nn.ParamSet]) -> None:
        self.qnet = sets["qnet"]
        self.target = self.qnet.copy()
        self.adam = nn.adam_init(self.qnet)
