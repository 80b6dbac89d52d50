"""Deterministic actor-critic over softmax bandwidth splits.

The actor emits one logit per slice; the allocation is
``floors + (W - sum(floors)) * softmax(logits)``, so every action is
feasible without projection.  Exploration adds Gaussian noise to the logits.
The critic sees ``[state, w / W]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn
from ..errors import DivergenceError
from .config import AgentConfig
from .replay import ReplayBuffer, Transition
from .simplex import AllocationAction, softmax_allocation


@dataclass
class DDPGNets:
    actor: nn.ParamSet
    critic: nn.ParamSet
    actor_target: nn.ParamSet
    critic_target: nn.ParamSet
    actor_adam: nn.AdamState
    critic_adam: nn.AdamState


@dataclass
class DDPGLosses:
    critic_loss: float
    actor_loss: float
    targets: np.ndarray


def init_ddpg(state_dim: int, n_slices: int, cfg: AgentConfig, rng: np.random.Generator,
              zero_actor: bool = False) -> DDPGNets:
    hidden = list(cfg.hidden)
    actor = nn.init_params([state_dim, *hidden, n_slices],
                           ["relu"] * len(hidden) + ["softmax"], rng, zero_last=zero_actor)
    critic = nn.init_params([state_dim + n_slices, *hidden, 1],
                            ["relu"] * len(hidden) + ["identity"], rng)
    return DDPGNets(actor, critic, actor.copy(), critic.copy(),
                    nn.adam_init(actor), nn.adam_init(critic))


def _fraction_map(W: float, floors: np.ndarray) -> tuple[np.ndarray, float]:
    """Allocation fractions are ``offset + scale * softmax``."""
    return floors / W, max(W - floors.sum(), 0.0) / W


def ddpg_select_action(actor: nn.ParamSet, features, noise_std: float, rng: np.random.Generator | None,
                       W: float, floors=None) -> AllocationAction:
    _, cache = nn.forward(actor, features)
    logits = cache.logits
    if noise_std > 0:
        logits = logits + rng.normal(0.0, noise_std, size=logits.shape)
    return softmax_allocation(logits, W, floors)


def ddpg_targets(nets: DDPGNets, batch: dict, gamma: float, W: float, floors: np.ndarray) -> np.ndarray:
    """``r + gamma * Q'(s', mu'(s'))``; exactly ``r`` when gamma is 0."""
    r = batch["reward"]
    if gamma == 0.0:
        return r.copy()
    offset, scale = _fraction_map(W, floors)
    p_next, _ = nn.forward(nets.actor_target, batch["next_state"])
    a_next = offset + scale * p_next
    q_next, _ = nn.forward(nets.critic_target, np.hstack([batch["next_state"], a_next]))
    not_done = 1.0 - batch["terminal"].astype(float)
    return r + gamma * not_done * q_next[:, 0]


def ddpg_train_step(nets: DDPGNets, buffer: ReplayBuffer, cfg: AgentConfig, rng: np.random.Generator,
                    W: float, floors=None) -> tuple[DDPGNets, DDPGLosses | None]:
    """One critic and one actor update from a uniform minibatch.

    Returns ``(nets, None)`` unchanged when the buffer holds fewer than
    ``batch_size`` transitions.
    """
    if len(buffer) < cfg.batch_size:
        return nets, None
    n = nets.actor.n_out
    floors = np.zeros(n) if floors is None else np.asarray(floors, dtype=float)
    offset, scale = _fraction_map(W, floors)
    batch = buffer.sample(cfg.batch_size, rng)
    s, a = batch["state"], batch["action"]
    B = s.shape[0]

    y = ddpg_targets(nets, batch, cfg.gamma, W, floors)
    q, c_cache = nn.forward(nets.critic, np.hstack([s, a]))
    td = q[:, 0] - y
    critic_loss = float(np.mean(td * td))
    if not np.isfinite(critic_loss):
        raise DivergenceError("critic loss is not finite")
    c_grads = nn.backward(nets.critic, c_cache, (2.0 * td / B)[:, None])
    critic, critic_adam = nn.adam_update(nets.critic, c_grads, nets.critic_adam, cfg.lr_critic)

    p, a_cache = nn.forward(nets.actor, s)
    a_pi = offset + scale * p
    q_pi, q_cache = nn.forward(critic, np.hstack([s, a_pi]))
    actor_loss = -float(np.mean(q_pi))
    if not np.isfinite(actor_loss):
        raise DivergenceError("actor objective is not finite")
    dq = nn.backward(critic, q_cache, np.full((B, 1), -1.0 / B))
    d_action = scale * dq.input[:, s.shape[1]:]
    a_grads = nn.backward(nets.actor, a_cache, d_action)
    actor, actor_adam = nn.adam_update(nets.actor, a_grads, nets.actor_adam, cfg.lr_actor)

    new = DDPGNets(actor, critic,
                   nn.soft_update(nets.actor_target, actor, cfg.tau),
                   nn.soft_update(nets.critic_target, critic, cfg.tau),
                   actor_adam, critic_adam)
    return new, DDPGLosses(critic_loss, actor_loss, y)


class DDPGAgent:
    kind = "ddpg"

    def __init__(self, state_dim: int, n_slices: int, W: float, floors, cfg: AgentConfig,
                 rng: np.random.Generator):
        self.cfg = cfg
        self.W = float(W)
        self.floors = np.asarray(floors, dtype=float)
        self.nets = init_ddpg(state_dim, n_slices, cfg, rng, zero_actor=cfg.zero_init_actor)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, state_dim, n_slices)
        self.episode = 0
        self.steps = 0

    @property
    def noise_std(self) -> float:
        return self.cfg.noise_at(self.episode)

    def act(self, features, explore: bool, rng: np.random.Generator, obs=None) -> tuple[AllocationAction, int]:
        noise = self.noise_std if explore else 0.0
        return ddpg_select_action(self.nets.actor, features, noise, rng, self.W, self.floors), -1

    def observe(self, tr: Transition) -> None:
        self.buffer.push(tr)
        self.steps += 1

    def train(self, rng: np.random.Generator) -> DDPGLosses | None:
        if self.steps < self.cfg.warmup_steps:
            return None
        self.nets, losses = ddpg_train_step(self.nets, self.buffer, self.cfg, rng, self.W, self.floors)
        return losses

    def end_episode(self) -> None:
        self.episode += 1

    def param_sets(self) -> dict[str, nn.ParamSet]:
        return {"actor": self.nets.actor, "critic": self.nets.critic}

    def load_param_sets(self, sets: dict[str, nn.ParamSet]) -> None:
        self.nets = DDPGNets(sets["actor"], sets["critic"], sets["actor"].copy(), sets["critic"].copy(),
                             nn.adam_init(sets["actor"]), nn.adam_init(sets["critic"]))
