"""Discrete-time RAN slicing environment.

One base station splits ``W`` Hz among ``N`` slices every slot.  Each user
turns its per-slot demand into ``packets_per_user`` equal packets, each with
a Beta-distributed semantic importance.  A slice's queue is served as a
fluid at rate ``w_n * log2(1 + SNR_n)`` with preemptive resume: packets are
taken in importance order (semantic scheduling) or arrival order (FIFO), the
last packet reached may be left partially sent, and a packet counts as
delivered once its final bit is out.  A packet that arrived in slot ``a`` may
be served in slots ``a .. a + deadline - 1`` and is dropped afterwards.

Slot timeline (also the RNG draw order, per slice in index order):

1. arrivals for this slot are built from the demand drawn at the end of the
   previous slot (or at reset); importances are drawn now;
2. the slice is served with the SNR drawn for this slot (table mode) or
   computed from the allocated bandwidth (physical mode);
3. expired packets are dropped and metrics are computed;
4. next-slot demand, next-slot SNR and SNR observation noise are drawn and
   returned as the next observation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleActionError
from .traffic import SLICE_TYPES, StatisticalDemand

DEFAULT_DEADLINES = {"URLLC": 1, "eMBB": 10, "mMTC": 50}
HIGH_IMPORTANCE = 0.7
FEASIBILITY_RTOL = 1e-9


@dataclass
class SliceSpec:
    slice_id: int
    slice_type: str
    num_users: int = 10
    deadline: int | None = None
    importance_dist: tuple[float, float] = (2.0, 2.0)
    min_bandwidth: float = 0.0

    def __post_init__(self) -> None:
        if self.slice_type not in SLICE_TYPES:
            raise ValueError(f"unknown slice type {self.slice_type!r}")
        if self.deadline is None:
            self.deadline = DEFAULT_DEADLINES[self.slice_type]
        self.importance_dist = tuple(float(v) for v in self.importance_dist)
        if self.num_users < 1:
            raise ValueError("a slice needs at least one user")
        if self.deadline < 1:
            raise ValueError("deadline must be at least one slot")
        if len(self.importance_dist) != 2 or min(self.importance_dist) <= 0:
            raise ValueError("importance_dist needs two positive Beta shape parameters")
        if self.min_bandwidth < 0:
            raise ValueError("min_bandwidth must be nonnegative")


@dataclass
class ChannelModel:
    mode: str = "table"
    snr_db_range: tuple[float, float] = (5.0, 30.0)
    gain: float = 1.0
    tx_power: float = 1e-3
    noise_density: float = 1e-11
    obs_noise_std: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("table", "physical"):
            raise ValueError(f"channel mode must be 'table' or 'physical', got {self.mode!r}")
        lo, hi = self.snr_db_range
        if lo > hi:
            raise ValueError("snr_db_range low must not exceed high")
        self.snr_db_range = (float(lo), float(hi))
        if self.mode == "physical" and min(self.gain, self.tx_power, self.noise_density) <= 0:
            raise ValueError("physical mode needs positive gain, tx_power and noise_density")
        if self.obs_noise_std < 0:
            raise ValueError("obs_noise_std must be nonnegative")


@dataclass
class Packet:
    size: float
    importance: float
    arrival_slot: int
    owner: tuple[int, int]

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError("packet size must be positive")
        if not 0.0 <= self.importance <= 1.0:
            raise ValueError("importance must lie in [0, 1]")


@dataclass
class NetworkObservation:
    tdp: np.ndarray
    snr: np.ndarray
    mean_importance: np.ndarray | None = None


@dataclass
class StepMetrics:
    se: float
    sme: np.ndarray
    ssr: np.ndarray
    latency_ms: np.ndarray
    loss: np.ndarray
    reward: float
    rates: np.ndarray
    bandwidth: np.ndarray = field(default_factory=lambda: np.zeros(0))
    capacity_bps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    arrived_bits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delivered_bits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    arrived: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    delivered: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    dropped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    queued: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    hi_arrived: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    hi_dropped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    arrived_importance: np.ndarray = field(default_factory=lambda: np.zeros(0))
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


# ---------------------------------------------------------------------------
# link-level formulas

def per_user_rate(w_n, num_users: int, snr_linear):
    """Shannon rate of one user when the slice bandwidth is split equally."""
    w_n = np.maximum(np.asarray(w_n, dtype=float), 0.0)
    snr = np.maximum(np.asarray(snr_linear, dtype=float), 0.0)
    rate = (w_n / max(int(num_users), 1)) * np.log2(1.0 + snr)
    return float(rate) if rate.ndim == 0 else rate


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(lin, dtype=float))


def snr_effective(channel: ChannelModel, w_n, rng: np.random.Generator | None = None):
    """True linear SNR for each slice.

    Table mode draws dB uniformly from ``snr_db_range`` (``w_n`` only sets the
    count).  Physical mode evaluates ``g P / (N0 w_n)``; a zero bandwidth
    yields SNR 0 so the downstream rate is 0.
    """
    w = np.atleast_1d(np.asarray(w_n, dtype=float))
    if channel.mode == "table":
        if rng is None:
            raise ValueError("table mode needs an rng")
        lo, hi = channel.snr_db_range
        snr = db_to_linear(rng.uniform(lo, hi, size=w.shape))
    else:
        snr = np.zeros_like(w)
        pos = w > 0
        with np.errstate(over="ignore", divide="ignore"):
            snr[pos] = channel.gain * channel.tx_power / (channel.noise_density * w[pos])
        # subnormal bandwidths overflow; a finite cap keeps w * log2(1 + snr) -> 0
        np.minimum(snr, np.finfo(float).max, out=snr)
    return float(snr[0]) if np.ndim(w_n) == 0 else snr


def spectral_efficiency(rates, W: float) -> float:
    if W <= 0:
        raise ValueError("total bandwidth must be positive")
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        return 0.0
    return float(np.sum(rates) / W)


def semantic_efficiency(delivered, arrived_count: int) -> float:
    """Sum of delivered importances over the number of packets that arrived.

    ``delivered`` may hold :class:`Packet` objects or raw importances.  An
    empty window scores 0.
    """
    s = np.array([p.importance if isinstance(p, Packet) else float(p) for p in delivered],
                 dtype=float)
    if arrived_count <= 0:
        return 0.0
    if s.size > arrived_count:
        raise ValueError("more packets delivered than arrived in the window")
    return float(s.sum() / arrived_count)


def serve_fluid(remaining: np.ndarray, order: np.ndarray, capacity_bits: float
                ) -> tuple[np.ndarray, np.ndarray]:
    """Serve ``capacity_bits`` of a queue in the given order.

    Returns ``(bits_sent_per_packet, new_remaining)``; a packet is complete
    when its new remaining size is 0.
    """
    sent = np.zeros_like(remaining)
    if capacity_bits <= 0 or remaining.size == 0:
        return sent, remaining.copy()
    ordered = remaining[order]
    before = np.cumsum(ordered) - ordered
    take = np.clip(capacity_bits - before, 0.0, ordered)
    sent[order] = take
    new_remaining = remaining - sent
    # cumulative sums round; a packet whose full size fits is complete exactly
    new_remaining[sent >= remaining] = 0.0
    return sent, new_remaining


def service_order(importance: np.ndarray, seq: np.ndarray, semantic: bool) -> np.ndarray:
    """Indices in service order; ``seq`` is the global arrival sequence number."""
    if semantic:
        return np.lexsort((seq, -importance))
    return np.argsort(seq, kind="stable")


# ---------------------------------------------------------------------------

class _SliceQueue:
    __slots__ = ("size", "remaining", "importance", "arrival", "user", "seq")

    def __init__(self) -> None:
        self.size = np.zeros(0)
        self.remaining = np.zeros(0)
        self.importance = np.zeros(0)
        self.arrival = np.zeros(0, dtype=np.int64)
        self.user = np.zeros(0, dtype=np.int64)
        self.seq = np.zeros(0, dtype=np.int64)

    def __len__(self) -> int:
        return self.size.size

    def push(self, size, importance, arrival, user, seq) -> None:
        self.size = np.concatenate([self.size, size])
        self.remaining = np.concatenate([self.remaining, size])
        self.importance = np.concatenate([self.importance, importance])
        self.arrival = np.concatenate([self.arrival, arrival])
        self.user = np.concatenate([self.user, user])
        self.seq = np.concatenate([self.seq, seq])

    def keep(self, mask: np.ndarray) -> None:
        for name in self.__slots__:
            setattr(self, name, getattr(self, name)[mask])


DemandSource = Callable[[SliceSpec, np.random.Generator], np.ndarray]


class SlicingEnv:
    """Single base station shared by ``len(slices)`` slices.

    ``reward_fn`` maps a finished :class:`StepMetrics` to the scalar stored in
    ``metrics.reward``; by default the spectral efficiency.
    """

    def __init__(self, slices: Sequence[SliceSpec], channel: ChannelModel, bandwidth: float = 100e6,
                 slot_duration: float = 1.0, packets_per_user: int = 10,
                 semantic_scheduling: bool = False, demand_source: DemandSource | None = None,
                 reward_fn: Callable[[StepMetrics], float] | None = None):
        if len(slices) == 0:
            raise ValueError("at least one slice is required")
        if bandwidth <= 0:
            raise ValueError("total bandwidth must be positive")
        floors = np.array([s.min_bandwidth for s in slices], dtype=float)
        if floors.sum() > bandwidth * (1 + FEASIBILITY_RTOL):
            raise ValueError(f"bandwidth floors sum to {floors.sum():g} Hz, more than W = {bandwidth:g} Hz")
        if slot_duration <= 0 or packets_per_user < 1:
            raise ValueError("slot_duration and packets_per_user must be positive")
        self.slices = list(slices)
        self.channel = channel
        self.W = float(bandwidth)
        self.floors = floors
        self.slot_duration = float(slot_duration)
        self.packets_per_user = int(packets_per_user)
        self.semantic_scheduling = bool(semantic_scheduling)
        self.demand_source = demand_source or StatisticalDemand("uniform")
        self.reward_fn = reward_fn or (lambda m: m.se)
        self.rng: np.random.Generator | None = None
        self.slot = 0

    @property
    def num_slices(self) -> int:
        return len(self.slices)

    def reset(self, seed: int | np.random.Generator | None = None) -> NetworkObservation:
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.queues = [_SliceQueue() for _ in self.slices]
        self.slot = 0
        self._seq = 0
        n = self.num_slices
        self.cum_arrived = np.zeros(n, dtype=np.int64)
        self.cum_delivered = np.zeros(n, dtype=np.int64)
        self.cum_dropped = np.zeros(n, dtype=np.int64)
        self._last_bandwidth = np.full(n, self.W / n)
        return self._draw_next()

    def _draw_next(self) -> NetworkObservation:
        rng = self.rng
        self._next_demand = [np.asarray(self.demand_source(s, rng), dtype=float)
                             for s in self.slices]
        for d, s in zip(self._next_demand, self.slices):
            if d.shape != (s.num_users,):
                raise ValueError(f"demand source returned shape {d.shape} for {s.num_users} users")
        if self.channel.mode == "table":
            self._next_snr = snr_effective(self.channel, np.zeros(self.num_slices), rng)
            reported = self._next_snr
        else:
            self._next_snr = None
            reported = snr_effective(self.channel, self._last_bandwidth)
        snr_db = linear_to_db(np.maximum(reported, 1e-300))
        if self.channel.obs_noise_std > 0:
            snr_db = snr_db + rng.normal(0.0, self.channel.obs_noise_std, size=snr_db.shape)
        # offered load: next-slot arrivals plus the backlog still waiting in the queue
        backlog = np.array([q.remaining.sum() for q in self.queues]) / self.slot_duration
        tdp = np.array([np.clip(d, 0.0, None).sum() for d in self._next_demand]) + backlog
        return NetworkObservation(tdp=tdp, snr=snr_db)

    def check_action(self, bandwidth: np.ndarray) -> np.ndarray:
        w = np.asarray(getattr(bandwidth, "bandwidth", bandwidth), dtype=float)
        if w.shape != (self.num_slices,):
            raise InfeasibleActionError(f"allocation has shape {w.shape}, expected ({self.num_slices},)")
        if not np.all(np.isfinite(w)):
            raise InfeasibleActionError("allocation contains non-finite entries")
        tol = FEASIBILITY_RTOL * self.W
        if abs(w.sum() - self.W) > tol:
            raise InfeasibleActionError(f"sum constraint violated: allocation sums to {w.sum():.12g} Hz, "
                                        f"W = {self.W:.12g} Hz")
        if np.any(w < self.floors - tol):
            bad = int(np.argmax(self.floors - w))
            raise InfeasibleActionError(f"floor constraint violated on slice {bad}: "
                                        f"{w[bad]:g} Hz < {self.floors[bad]:g} Hz")
        return w

    def step(self, action) -> tuple[NetworkObservation, StepMetrics]:
        if self.rng is None:
            raise RuntimeError("call reset() before step()")
        w = self.check_action(action)
        rng, t, n = self.rng, self.slot, self.num_slices
        if self._next_snr is not None:
            snr = self._next_snr
        else:
            snr = snr_effective(self.channel, w)
        degenerate = (w <= 0) & (self.channel.mode == "physical")

        total_users = sum(s.num_users for s in self.slices)
        rates = np.zeros(total_users)
        out = {k: np.zeros(n) for k in ("sme", "ssr", "latency_ms", "loss", "capacity_bps",
                                        "arrived_bits", "delivered_bits", "arrived_importance")}
        counts = {k: np.zeros(n, dtype=np.int64) for k in ("arrived", "delivered", "dropped", "queued",
                                                            "hi_arrived", "hi_dropped")}
        user_offset = 0
        for i, (spec, q) in enumerate(zip(self.slices, self.queues)):
            # 1. arrivals
            demand = np.clip(self._next_demand[i], 0.0, None)
            k = self.packets_per_user
            active = np.flatnonzero(demand > 0)
            n_new = active.size * k
            size = np.repeat(demand[active] * self.slot_duration / k, k)
            users = np.repeat(active, k)
            imp = rng.beta(*spec.importance_dist, size=n_new)
            seq = np.arange(self._seq, self._seq + n_new)
            self._seq += n_new
            q.push(size, imp, np.full(n_new, t, dtype=np.int64), users, seq)

            # 2. service
            capacity_bps = spec.num_users * per_user_rate(w[i], spec.num_users, snr[i])
            order = service_order(q.importance, q.seq, self.semantic_scheduling)
            sent, q.remaining = serve_fluid(q.remaining, order, capacity_bps * self.slot_duration)
            done = q.remaining <= 0.0
            rates[user_offset + np.arange(spec.num_users)] = (
                np.bincount(q.user, weights=sent, minlength=spec.num_users) / self.slot_duration)
            delivered_imp = q.importance[done]
            backlog_bits = float(q.remaining[~done].sum())
            q.keep(~done)

            # 3. expiry
            expired = q.arrival <= t - spec.deadline + 1
            n_drop = int(expired.sum())
            hi_drop = int(np.sum(q.importance[expired] > HIGH_IMPORTANCE))
            q.keep(~expired)

            arrived_bits = float(size.sum())
            sent_bits = float(sent.sum())
            out["capacity_bps"][i] = capacity_bps
            out["arrived_bits"][i] = arrived_bits
            out["delivered_bits"][i] = sent_bits
            out["ssr"][i] = 1.0 if arrived_bits <= 0 else min(1.0, sent_bits / arrived_bits)
            out["sme"][i] = min(1.0, semantic_efficiency(delivered_imp, max(n_new, delivered_imp.size)))
            max_wait = spec.deadline * self.slot_duration
            if backlog_bits <= 0:
                wait = 0.0
            elif capacity_bps <= 0:
                wait = max_wait
            else:
                wait = min(backlog_bits / capacity_bps, max_wait)
            out["latency_ms"][i] = 1000.0 * wait
            out["loss"][i] = 0.0 if n_new == 0 else min(1.0, n_drop / n_new)
            out["arrived_importance"][i] = float(imp.mean()) if n_new else 0.0
            counts["arrived"][i] = n_new
            counts["delivered"][i] = delivered_imp.size
            counts["dropped"][i] = n_drop
            counts["queued"][i] = len(q)
            counts["hi_arrived"][i] = int(np.sum(imp > HIGH_IMPORTANCE))
            counts["hi_dropped"][i] = hi_drop
            user_offset += spec.num_users

        self.cum_arrived += counts["arrived"]
        self.cum_delivered += counts["delivered"]
        self.cum_dropped += counts["dropped"]
        self._last_bandwidth = w.copy()
        metrics = StepMetrics(se=spectral_efficiency(rates, self.W), reward=0.0, rates=rates,
                              bandwidth=w.copy(), degenerate=degenerate, **out, **counts)
        metrics.reward = float(self.reward_fn(metrics))
        self.slot += 1
        obs = self._draw_next()
        return obs, metrics

    def queued_counts(self) -> np.ndarray:
        return np.array([len(q) for q in self.queues], dtype=np.int64)
