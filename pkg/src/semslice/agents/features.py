from __future__ import annotations

import numpy as np

from ..env import NetworkObservation

DEMAND_SCALE_PER_USER = 15e6


def observation_features(obs: NetworkObservation, num_users, snr_db_range=(5.0, 30.0),
                         semantic_obs: bool = False) -> np.ndarray:
    """Agent input: log1p of load over (users x 15 Mbps), SNR mapped from its dB range onto [0, 1].

    The log keeps features O(1) when a backlog builds up to many slots of demand.
    """
    num_users = np.asarray(num_users, dtype=float)
    lo, hi = snr_db_range
    span = hi - lo if hi > lo else 1.0
    parts = [np.log1p(obs.tdp / (num_users * DEMAND_SCALE_PER_USER)), (obs.snr - lo) / span]
    if semantic_obs:
        if obs.mean_importance is None:
            raise ValueError("semantic observation requested but mean_importance is missing")
        parts.append(np.asarray(obs.mean_importance, dtype=float))
    return np.concatenate(parts)


def feature_dim(n_slices: int, semantic_obs: bool) -> int:
    return n_slices * (3 if semantic_obs else 2)
