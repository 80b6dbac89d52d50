"""Per-slice traffic demand: statistical ground truth and a conditional GAN.

Demands are per-user offered loads in bit/s.  The statistical generators are
the "historical traces" the cGAN learns to imitate, so fidelity is measurable
in-repo.

Two profiles exist.  ``uniform`` draws every user's demand from U[5, 15] Mbps
regardless of slice type.  ``typed`` gives each slice type its own shape:
eMBB is bursty (two modes), mMTC sits low with occasional reporting bursts,
URLLC is narrow-band around 6 Mbps.  All supports lie inside [0, DEMAND_MAX].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import DivergenceError

SLICE_TYPES = ("eMBB", "mMTC", "URLLC")
DEMAND_MAX = 20e6
UNIFORM_LOW, UNIFORM_HIGH = 5e6, 15e6
QOS_DEADLINE_SCALE = 50.0
COND_DIM = len(SLICE_TYPES) + 1
PROFILES = ("uniform", "typed")


@dataclass
class TrafficSample:
    demand_bps: float
    condition: np.ndarray

    def __post_init__(self) -> None:
        if self.demand_bps < 0:
            raise ValueError("demand must be nonnegative")
        if np.any((self.condition < 0) | (self.condition > 1)):
            raise ValueError("condition entries must lie in [0, 1]")


def condition_vector(slice_type: str, deadline: int | float) -> np.ndarray:
    """One-hot slice type followed by the deadline scaled into [0, 1]."""
    if slice_type not in SLICE_TYPES:
        raise ValueError(f"unknown slice type {slice_type!r}")
    c = np.zeros(COND_DIM)
    c[SLICE_TYPES.index(slice_type)] = 1.0
    c[-1] = min(float(deadline), QOS_DEADLINE_SCALE) / QOS_DEADLINE_SCALE
    return c


def sample_demand(slice_type: str, rng: np.random.Generator, size: int | None = None,
                  profile: str = "typed") -> np.ndarray | float:
    """Draw per-user demands in bit/s."""
    if slice_type not in SLICE_TYPES:
        raise ValueError(f"unknown slice type {slice_type!r}")
    n = 1 if size is None else int(size)
    if profile == "uniform":
        out = rng.uniform(UNIFORM_LOW, UNIFORM_HIGH, size=n)
    elif profile == "typed":
        if slice_type == "eMBB":
            burst = rng.random(n) < 0.4
            out = np.where(burst, rng.normal(14.0, 2.0, n), rng.normal(8.0, 1.5, n)) * 1e6
        elif slice_type == "mMTC":
            report = rng.random(n) < 0.25
            out = np.where(report, rng.uniform(4.0, 8.0, n), rng.uniform(0.5, 2.0, n)) * 1e6
        else:
            out = rng.normal(6.0, 0.5, n) * 1e6
        out = np.clip(out, 0.0, DEMAND_MAX)
    else:
        raise ValueError(f"unknown traffic profile {profile!r}")
    return float(out[0]) if size is None else out


def sample_real(slice_type: str, rng: np.random.Generator, profile: str = "typed",
                deadline: int | float = 1) -> TrafficSample:
    return TrafficSample(sample_demand(slice_type, rng, profile=profile),
                         condition_vector(slice_type, deadline))


# ---------------------------------------------------------------------------
# conditional GAN

@dataclass
class GanConfig:
    latent_dim: int = 8
    generator_layers: list[int] = field(default_factory=lambda: [32, 32, 1])
    discriminator_layers: list[int] = field(default_factory=lambda: [32, 32, 1])
    batch_size: int = 64
    lr_g: float = 1e-4
    lr_d: float = 4e-4
    steps_d_per_g: int = 1
    train_steps: int = 5000
    demand_max: float = DEMAND_MAX

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be at least 1")
        if self.discriminator_layers[-1] != 1 or self.generator_layers[-1] != 1:
            raise ValueError("generator and discriminator must end in a width-1 layer")
        if self.lr_g < 0 or self.lr_d < 0:
            raise ValueError("learning rates must be nonnegative")
        if self.batch_size < 1 or self.steps_d_per_g < 1:
            raise ValueError("batch_size and steps_d_per_g must be positive")


@dataclass
class GanState:
    generator: nn.ParamSet
    discriminator: nn.ParamSet
    g_adam: nn.AdamState
    d_adam: nn.AdamState


def init_gan(cfg: GanConfig, rng: np.random.Generator, zero_last: bool = False) -> GanState:
    g_sizes = [cfg.latent_dim + COND_DIM, *cfg.generator_layers]
    d_sizes = [1 + COND_DIM, *cfg.discriminator_layers]
    g_acts = ["relu"] * (len(g_sizes) - 2) + ["logistic"]
    d_acts = ["relu"] * (len(d_sizes) - 2) + ["identity"]
    g = nn.init_params(g_sizes, g_acts, rng, zero_last=zero_last)
    d = nn.init_params(d_sizes, d_acts, rng, zero_last=zero_last)
    return GanState(g, d, nn.adam_init(g, beta1=0.5), nn.adam_init(d, beta1=0.5))


def _stack(a: np.ndarray, cond: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    cond = np.atleast_2d(np.asarray(cond, dtype=float))
    if cond.shape[0] == 1 and a.shape[0] > 1:
        cond = np.repeat(cond, a.shape[0], axis=0)
    if cond.shape[1] != COND_DIM:
        raise ValueError(f"condition must have {COND_DIM} entries, got {cond.shape[1]}")
    return np.hstack([a, cond])


def generator_forward(params: nn.ParamSet, z, condition,
                      demand_max: float = DEMAND_MAX) -> np.ndarray:
    """Demand in bit/s for each latent row; squashed into [0, demand_max]."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    inp = _stack(z, condition)
    if inp.shape[1] != params.n_in:
        raise ValueError(f"latent+condition width {inp.shape[1]} != generator input {params.n_in}")
    out, _ = nn.forward(params, inp)
    demand = demand_max * out[:, 0]
    return demand[0] if single else demand


def _disc_input(x_bps, condition, demand_max: float) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x_bps, dtype=float)).reshape(-1, 1)
    return _stack(2.0 * x / demand_max - 1.0, condition)


def discriminator_logits(params: nn.ParamSet, x_bps, condition,
                         demand_max: float = DEMAND_MAX) -> np.ndarray:
    inp = _disc_input(x_bps, condition, demand_max)
    if inp.shape[1] != params.n_in:
        raise ValueError(f"input width {inp.shape[1]} != discriminator input {params.n_in}")
    out, _ = nn.forward(params, inp)
    return out[:, 0]


def discriminator_forward(params: nn.ParamSet, x_bps, condition,
                          demand_max: float = DEMAND_MAX) -> np.ndarray | float:
    """Probability that each demand is real; strictly inside (0, 1)."""
    p = nn.logistic(discriminator_logits(params, x_bps, condition, demand_max))
    # keep the open interval even where float64 would round to 0 or 1
    p = np.clip(p, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return float(p[0]) if np.ndim(x_bps) == 0 else p


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def discriminator_step(cfg: GanConfig, state: GanState, real_x, real_cond, fake_x, fake_cond
                       ) -> tuple[GanState, float]:
    """One Adam step on the discriminator's BCE; returns the pre-step loss."""
    d = state.discriminator
    real_in = _disc_input(real_x, real_cond, cfg.demand_max)
    fake_in = _disc_input(fake_x, fake_cond, cfg.demand_max)
    lr_out, lr_cache = nn.forward(d, real_in)
    lf_out, lf_cache = nn.forward(d, fake_in)
    l_real, l_fake = lr_out[:, 0], lf_out[:, 0]
    loss = float(np.mean(_softplus(-l_real)) + np.mean(_softplus(l_fake)))
    if not np.isfinite(loss):
        raise DivergenceError("discriminator loss is not finite")
    g_real = ((nn.logistic(l_real) - 1.0) / l_real.size)[:, None]
    g_fake = (nn.logistic(l_fake) / l_fake.size)[:, None]
    gr = nn.backward(d, lr_cache, g_real)
    gf = nn.backward(d, lf_cache, g_fake)
    grads = [a + b for a, b in zip(gr.arrays(), gf.arrays())]
    new_d, new_adam = nn.adam_update(d, grads, state.d_adam, cfg.lr_d)
    return GanState(state.generator, new_d, state.g_adam, new_adam), loss


def generator_step(cfg: GanConfig, state: GanState, cond: np.ndarray,
                   rng: np.random.Generator) -> tuple[GanState, float]:
    """Non-saturating generator step: minimise -log D(G(z))."""
    g, d = state.generator, state.discriminator
    z = rng.standard_normal((cond.shape[0], cfg.latent_dim))
    g_out, g_cache = nn.forward(g, _stack(z, cond))
    d_in = _stack(2.0 * g_out - 1.0, cond)
    d_out, d_cache = nn.forward(d, d_in)
    l_fake = d_out[:, 0]
    loss = float(np.mean(_softplus(-l_fake)))
    if not np.isfinite(loss):
        raise DivergenceError("generator loss is not finite")
    dl = ((nn.logistic(l_fake) - 1.0) / l_fake.size)[:, None]
    d_grads = nn.backward(d, d_cache, dl)
    dx = 2.0 * d_grads.input[:, :1]
    g_grads = nn.backward(g, g_cache, dx)
    new_g, new_adam = nn.adam_update(g, g_grads, state.g_adam, cfg.lr_g)
    return GanState(new_g, d, new_adam, state.d_adam), loss


def gan_train_step(cfg: GanConfig, state: GanState, real_x, real_cond,
                   rng: np.random.Generator) -> tuple[GanState, float, float]:
    """``steps_d_per_g`` discriminator updates, then one generator update.

    Fake samples for the discriminator share the real batch's conditions.
    Returns ``(state', d_loss, g_loss)``; the losses are measured before the
    corresponding update.
    """
    real_x = np.asarray(real_x, dtype=float)
    real_cond = np.atleast_2d(np.asarray(real_cond, dtype=float))
    if real_x.shape[0] != cfg.batch_size:
        raise ValueError(f"batch has {real_x.shape[0]} rows, config says {cfg.batch_size}")
    if real_cond.shape[0] == 1:
        real_cond = np.repeat(real_cond, real_x.shape[0], axis=0)
    d_loss = float("nan")
    for _ in range(cfg.steps_d_per_g):
        z = rng.standard_normal((real_x.shape[0], cfg.latent_dim))
        fake = generator_forward(state.generator, z, real_cond, cfg.demand_max)
        state, d_loss = discriminator_step(cfg, state, real_x, real_cond, fake, real_cond)
    state, g_loss = generator_step(cfg, state, real_cond, rng)
    return state, d_loss, g_loss


def conditional_batch(slice_types, deadlines, rng: np.random.Generator, n: int,
                      profile: str = "typed") -> tuple[np.ndarray, np.ndarray]:
    """Real training batch: each row picks one of the given slice kinds at random."""
    idx = rng.integers(0, len(slice_types), size=n)
    x = np.empty(n)
    cond = np.empty((n, COND_DIM))
    for k, (st, dl) in enumerate(zip(slice_types, deadlines)):
        rows = np.flatnonzero(idx == k)
        if rows.size:
            x[rows] = sample_demand(st, rng, size=rows.size, profile=profile)
            cond[rows] = condition_vector(st, dl)
    return x, cond


def train_gan(cfg: GanConfig, slice_types, deadlines, rng: np.random.Generator,
              profile: str = "typed", steps: int | None = None
              ) -> tuple[GanState, list[tuple[float, float]]]:
    """Pre-train a cGAN on the statistical generators for the given slice kinds."""
    state = init_gan(cfg, rng)
    history = []
    for _ in range(cfg.train_steps if steps is None else steps):
        x, cond = conditional_batch(slice_types, deadlines, rng, cfg.batch_size, profile)
        state, d_loss, g_loss = gan_train_step(cfg, state, x, cond, rng)
        history.append((d_loss, g_loss))
    return state, history


def train_discriminator(cfg: GanConfig, d: nn.ParamSet, real_sampler, fake_sampler,
                        steps: int, rng: np.random.Generator) -> nn.ParamSet:
    """Fit only the discriminator; samplers map ``(rng, n)`` to ``(x_bps, cond)``."""
    state = GanState(d, d, nn.adam_init(d, beta1=0.5), nn.adam_init(d, beta1=0.5))
    for _ in range(steps):
        rx, rc = real_sampler(rng, cfg.batch_size)
        fx, fc = fake_sampler(rng, cfg.batch_size)
        state, _ = discriminator_step(cfg, state, rx, rc, fx, fc)
    return state.discriminator


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup-norm gap of empirical CDFs)."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs two non-empty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


# ---------------------------------------------------------------------------
# demand sources plugged into the environment

class StatisticalDemand:
    def __init__(self, profile: str = "typed"):
        if profile not in PROFILES:
            raise ValueError(f"unknown traffic profile {profile!r}")
        self.profile = profile

    def __call__(self, spec, rng: np.random.Generator) -> np.ndarray:
        return sample_demand(spec.slice_type, rng, size=spec.num_users, profile=self.profile)


class GanDemand:
    """Draws per-user demand from a trained conditional generator."""

    def __init__(self, generator: nn.ParamSet, cfg: GanConfig):
        self.generator = generator
        self.cfg = cfg

    def __call__(self, spec, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((spec.num_users, self.cfg.latent_dim))
        cond = condition_vector(spec.slice_type, spec.deadline)
        return generator_forward(self.generator, z, cond, self.cfg.demand_max)
