"""Arm-versus-arm comparison over seeds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..reward import RewardWeights, semantic_utility

METRICS = ("se", "reward", "utility", "sme", "ssr", "latency_ms", "loss", "hi_loss")
BOOTSTRAP_RESAMPLES = 10_000


@dataclass
class ComparisonReport:
    metric: str
    mean_a: float
    std_a: float
    mean_b: float
    std_b: float
    n_seeds: int
    improvement_pct: float
    p_value: float
    ci_low: float
    ci_high: float
    welch_t: float
    method: str = "welch+bootstrap"

    def summary(self) -> str:
        return (f"{self.metric}: A {self.mean_a:.4f} ± {self.std_a:.4f}, B {self.mean_b:.4f} ± {self.std_b:.4f} "
                f"(n={self.n_seeds}); improvement {self.improvement_pct:+.2f}%, "
                f"Welch p={self.p_value:.3g}, 95% CI of A-B [{self.ci_low:.4f}, {self.ci_high:.4f}]")


def _weights_from_config(config: dict) -> RewardWeights:
    rw = config["reward_weights"]
    return RewardWeights(rw["alpha"], rw["beta"], rw["gamma_sem"])


def seed_metric(log, metric: str) -> float:
    """Mean of ``metric`` over the evaluation stream of one run."""
    records = log.eval
    if not records:
        raise ValueError(f"log for seed {log.seed} has an empty evaluation stream")
    if metric in ("se", "reward"):
        return float(np.mean([getattr(m, metric) for m in records]))
    if metric in ("sme", "ssr", "latency_ms", "loss"):
        return float(np.mean(np.stack([getattr(m, metric) for m in records])))
    if metric == "utility":
        w = _weights_from_config(log.config)
        return float(np.mean([semantic_utility(m, w) for m in records]))
    if metric == "hi_loss":
        arrived = sum(int(np.sum(m.hi_arrived)) for m in records)
        if arrived == 0 or any(m.hi_arrived.size == 0 for m in records):
            raise ValueError("high-importance counts are not available in this log")
        return sum(int(np.sum(m.hi_dropped)) for m in records) / arrived
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def welch_p_value(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sided Welch test; degenerate zero-variance arms give p 1 (equal) or 0 (different)."""
    if np.var(a) == 0 and np.var(b) == 0:
        same = np.mean(a) == np.mean(b)
        return (0.0 if same else float(np.sign(np.mean(a) - np.mean(b)) * np.inf)), (1.0 if same else 0.0)
    res = stats.ttest_ind(a, b, equal_var=False)
    return float(res.statistic), float(np.clip(res.pvalue, 0.0, 1.0))


def bootstrap_ci(a: np.ndarray, b: np.ndarray, rng: np.random.Generator,
                 resamples: int = BOOTSTRAP_RESAMPLES, level: float = 0.95) -> tuple[float, float]:
    """Percentile interval for ``mean(a) - mean(b)`` resampling each arm independently."""
    ma = a[rng.integers(0, a.size, size=(resamples, a.size))].mean(axis=1)
    mb = b[rng.integers(0, b.size, size=(resamples, b.size))].mean(axis=1)
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(ma - mb, [tail, 100 - tail])
    return float(lo), float(hi)


def compare_values(a, b, metric: str = "value", seed: int = 0) -> ComparisonReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("compare needs at least 2 seeds per arm")
    if a.size != b.size:
        raise ValueError(f"arms have different seed counts ({a.size} vs {b.size})")
    t, p = welch_p_value(a, b)
    lo, hi = bootstrap_ci(a, b, np.random.default_rng(seed))
    ma, mb = float(a.mean()), float(b.mean())
    improvement = 100.0 * (ma - mb) / mb if mb != 0 else (0.0 if ma == mb else float("inf"))
    return ComparisonReport(metric, ma, float(a.std(ddof=1)), mb, float(b.std(ddof=1)), int(a.size),
                            improvement, p, lo, hi, t)


def compare(arm_a, arm_b, metric: str = "se", seed: int = 0) -> ComparisonReport:
    """Compare two lists of run logs on the per-seed evaluation mean of ``metric``."""
    return compare_values([seed_metric(log, metric) for log in arm_a],
                          [seed_metric(log, metric) for log in arm_b], metric, seed)
