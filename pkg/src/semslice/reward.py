"""Rewards and the per-slice semantic importance predictor."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .env import StepMetrics
from .traffic import COND_DIM, condition_vector

SPECTRAL = "spectral"
SEMANTIC = "semantic_utility"


@dataclass
class RewardWeights:
    alpha: float = 1.0
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma_sem: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        self.gamma_sem = np.atleast_1d(np.asarray(self.gamma_sem, dtype=float))
        if self.alpha < 0 or np.any(self.beta < 0) or np.any(self.gamma_sem < 0):
            raise ValueError("reward weights must be nonnegative")

    @classmethod
    def default_for(cls, slice_types) -> "RewardWeights":
        """alpha 1; beta 0.5 per slice; gamma 1 for URLLC, 0.5 for the rest."""
        types = list(slice_types)
        return cls(1.0, np.full(len(types), 0.5),
                   np.array([1.0 if t == "URLLC" else 0.5 for t in types]))

    def is_zero(self) -> bool:
        return self.alpha == 0 and not np.any(self.beta) and not np.any(self.gamma_sem)


def spectral_reward(metrics: StepMetrics) -> float:
    return float(metrics.se)


def semantic_utility(metrics: StepMetrics, w: RewardWeights) -> float:
    """``alpha * SE + sum(beta * SSR) + sum(gamma * SmE)``."""
    n = len(metrics.ssr)
    if w.beta.size != n or w.gamma_sem.size != n:
        raise ValueError(f"weights cover {w.beta.size}/{w.gamma_sem.size} slices, metrics have {n}")
    return float(w.alpha * metrics.se + np.dot(w.beta, metrics.ssr) + np.dot(w.gamma_sem, metrics.sme))


def reward_function(tag: str, weights: RewardWeights | None = None):
    if tag == SPECTRAL:
        return spectral_reward
    if tag == SEMANTIC:
        if weights is None:
            raise ValueError("semantic utility needs weights")
        return lambda m: semantic_utility(m, weights)
    raise ValueError(f"unknown reward tag {tag!r}")


# ---------------------------------------------------------------------------
# importance predictor

PREDICTOR_FEATURES = COND_DIM + 1


def slice_features(slice_type: str, deadline: int, tdp_norm: float) -> np.ndarray:
    """Condition vector of the slice plus its normalised demand."""
    return np.append(condition_vector(slice_type, deadline), tdp_norm)


@dataclass
class ImportancePredictor:
    params: nn.ParamSet
    trained: bool = False

    @classmethod
    def create(cls, rng: np.random.Generator, hidden: int = 16) -> "ImportancePredictor":
        params = nn.init_params([PREDICTOR_FEATURES, hidden, 1], ["tanh", "logistic"], rng,
                                zero_last=True)
        return cls(params, trained=False)


def predict_importance(predictor: ImportancePredictor, features) -> np.ndarray:
    """Mean importance per row of ``features``, in [0, 1]; 0.5 with a warning if untrained."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if not predictor.trained:
        warnings.warn("importance predictor is untrained; returning the 0.5 prior", RuntimeWarning,
                      stacklevel=2)
        return np.full(x.shape[0], 0.5)
    out, _ = nn.forward(predictor.params, x)
    return np.clip(out[:, 0], 0.0, 1.0)


def train_predictor(predictor: ImportancePredictor, features, targets, rng: np.random.Generator,
                    epochs: int = 300, batch_size: int = 64, lr: float = 1e-2) -> ImportancePredictor:
    """Least-squares fit of logged (slice features, realised mean importance) pairs."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float).reshape(-1)
    if x.shape[0] != y.size or x.shape[0] == 0:
        raise ValueError("features and targets must be non-empty and aligned")
    params, adam = predictor.params, nn.adam_init(predictor.params)
    n = x.shape[0]
    for _ in range(epochs):
        idx = rng.integers(0, n, size=min(batch_size, n))
        out, cache = nn.forward(params, x[idx])
        err = out[:, 0] - y[idx]
        params, adam = nn.adam_update(params, nn.backward(params, cache, (2.0 * err / idx.size)[:, None]),
                                      adam, lr)
    return ImportancePredictor(params, trained=True)
