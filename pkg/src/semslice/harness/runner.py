"""Seeded training and evaluation loops."""
from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..agents import (DDPGAgent, DQNAgent, EqualAgent, ProportionalAgent, Transition, feature_dim,
                      observation_features)
from ..env import NetworkObservation, SlicingEnv, StepMetrics
from ..errors import DivergenceError
from ..reward import (ImportancePredictor, predict_importance, reward_function, slice_features,
                      train_predictor)
from ..traffic import GanDemand, StatisticalDemand, train_gan
from .config import ExperimentConfig

STREAM_NAMES = ("env", "eval", "agent", "noise", "gan", "predictor")
AGGREGATE_FIELDS = ("reward", "se", "sme", "latency_ms", "loss")


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named component of a run."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


@dataclass
class MetricsLog:
    config: dict
    seed: int
    reward_tag: str
    slots_per_episode: int
    train: list[StepMetrics] = field(default_factory=list)
    eval: list[StepMetrics] = field(default_factory=list)
    episode_aggregates: list[dict] = field(default_factory=list)
    eval_aggregate: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    extras: dict = field(default_factory=dict)
    agent: object = field(default=None, repr=False, compare=False)

    @property
    def n_slices(self) -> int:
        return len(self.config["slices"])

    def episode_stream(self, episode: int) -> list[StepMetrics]:
        k = self.slots_per_episode
        return self.train[episode * k:(episode + 1) * k]


def aggregate(records: list[StepMetrics]) -> dict:
    """Per-window means; per-slice fields are averaged over slots and slices."""
    if not records:
        return {k: float("nan") for k in AGGREGATE_FIELDS}
    out = {"reward": float(np.mean(np.array([m.reward for m in records]))),
           "se": float(np.mean(np.array([m.se for m in records])))}
    for key in ("sme", "latency_ms", "loss"):
        out[key] = float(np.mean(np.stack([getattr(m, key) for m in records])))
    return out


def build_agent(cfg: ExperimentConfig, rng: np.random.Generator):
    n = len(cfg.slices)
    floors = np.array([s.min_bandwidth for s in cfg.slices])
    dim = feature_dim(n, cfg.semantic_obs)
    kind = cfg.agent_kind
    if kind in ("gan_ddpg_semantic", "ddpg"):
        return DDPGAgent(dim, n, cfg.bandwidth, floors, cfg.agent, rng)
    if kind == "dqn":
        return DQNAgent(dim, n, cfg.bandwidth, floors, cfg.agent, rng)
    if kind == "equal":
        return EqualAgent(n, cfg.bandwidth, floors)
    return ProportionalAgent(n, cfg.bandwidth, floors)


def make_env(cfg: ExperimentConfig, demand_source, reward_fn) -> SlicingEnv:
    return SlicingEnv(cfg.slices, cfg.channel, cfg.bandwidth, slot_duration=cfg.slot_duration,
                      packets_per_user=cfg.packets_per_user,
                      semantic_scheduling=cfg.semantic_scheduling,
                      demand_source=demand_source, reward_fn=reward_fn)


class _Featurizer:
    """Maps raw observations to agent inputs, attaching predicted importance if enabled."""

    def __init__(self, cfg: ExperimentConfig, predictor: ImportancePredictor | None):
        self.cfg = cfg
        self.users = np.array([s.num_users for s in cfg.slices], dtype=float)
        self.predictor = predictor

    def __call__(self, obs: NetworkObservation) -> np.ndarray:
        if self.cfg.semantic_obs:
            obs.mean_importance = predict_importance(self.predictor, self._slice_rows(obs.tdp))
        return observation_features(obs, self.users, self.cfg.channel.snr_db_range, self.cfg.semantic_obs)

    def _slice_rows(self, tdp: np.ndarray) -> np.ndarray:
        norm = tdp / (self.users * 15e6)
        return np.stack([slice_features(s.slice_type, s.deadline, v) for s, v in zip(self.cfg.slices, norm)])


def fit_predictor(cfg: ExperimentConfig, rng: np.random.Generator) -> ImportancePredictor:
    """Log slices under equal allocation and regress realised arrival importance on slice features."""
    env = make_env(cfg, StatisticalDemand(cfg.traffic_profile), None)
    feat = _Featurizer(cfg, None)
    agent = EqualAgent(len(cfg.slices), cfg.bandwidth, env.floors)
    obs = env.reset(rng)
    xs, ys = [], []
    for _ in range(cfg.predictor_slots):
        rows = feat._slice_rows(obs.tdp)
        action, _ = agent.act(None)
        obs, m = env.step(action)
        keep = m.arrived > 0
        xs.append(rows[keep])
        ys.append(m.arrived_importance[keep])
    predictor = ImportancePredictor.create(rng)
    if cfg.predictor_slots == 0 or sum(len(y) for y in ys) == 0:
        return predictor
    return train_predictor(predictor, np.concatenate(xs), np.concatenate(ys), rng)


def _roll(env: SlicingEnv, agent, feat: _Featurizer, obs, slots: int, explore: bool, learn: bool,
          rng_noise, rng_agent, out: list, where: str):
    x = feat(obs)
    for t in range(slots):
        try:
            action, idx = agent.act(x, explore, rng_noise, obs=obs)
            obs, m = env.step(action)
            x_next = feat(obs)
            if learn:
                agent.observe(Transition(x, action.bandwidth / env.W, m.reward, x_next, False, idx))
                agent.train(rng_agent)
        except (DivergenceError, FloatingPointError) as exc:
            raise DivergenceError(f"{where}, step {t}: {exc}") from exc
        out.append(m)
        x = x_next
    return obs


def run_experiment(cfg: ExperimentConfig, seed: int, agent=None, progress=None) -> MetricsLog:
    """Train for ``cfg.episodes`` episodes, then evaluate greedily on statistical demand.

    ``agent`` may be supplied pre-built (for example from a checkpoint).  Each
    component draws from its own named substream of ``seed``.
    """
    start = time.perf_counter()
    cfg = cfg.resolved()
    streams = {name: substream(seed, name) for name in STREAM_NAMES}
    reward_fn = reward_function(cfg.reward, cfg.reward_weights)
    real = StatisticalDemand(cfg.traffic_profile)
    extras: dict = {}

    train_source = real
    if cfg.semantic_arm and cfg.episodes > 0:
        types = [s.slice_type for s in cfg.slices]
        deadlines = [s.deadline for s in cfg.slices]
        state, history = train_gan(cfg.gan, types, deadlines, streams["gan"], cfg.traffic_profile)
        train_source = GanDemand(state.generator, cfg.gan)
        if history:
            extras["gan_final_losses"] = list(history[-1])

    predictor = fit_predictor(cfg, streams["predictor"]) if cfg.semantic_obs else None
    feat = _Featurizer(cfg, predictor)
    if agent is None:
        agent = build_agent(cfg, streams["agent"])

    log = MetricsLog(config=cfg.to_dict(), seed=int(seed), reward_tag=cfg.reward,
                     slots_per_episode=cfg.slots_per_episode, extras=extras)
    env = make_env(cfg, train_source, reward_fn)
    for ep in range(cfg.episodes):
        obs = env.reset(streams["env"])
        _roll(env, agent, feat, obs, cfg.slots_per_episode, True, True, streams["noise"],
              streams["agent"], log.train, f"episode {ep}")
        agent.end_episode()
        log.episode_aggregates.append(aggregate(log.episode_stream(ep)))
        if progress is not None:
            progress(ep, log.episode_aggregates[-1])

    eval_env = make_env(cfg, real, reward_fn)
    obs = eval_env.reset(streams["eval"])
    _roll(eval_env, agent, feat, obs, cfg.eval_slots, False, False, streams["noise"],
          streams["agent"], log.eval, "evaluation")
    log.eval_aggregate = aggregate(log.eval)
    log.wall_clock = time.perf_counter() - start
    log.agent = agent
    return log
