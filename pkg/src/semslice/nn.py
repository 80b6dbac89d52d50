"""Small numpy multilayer perceptrons with exact backprop and Adam.

Every network in the package (actor, critic, Q-net, generator,
discriminator, importance predictor) is a :class:`ParamSet`.  All functions
here are pure: they never mutate their inputs and return fresh arrays.

Inputs may be a single vector ``(n_in,)`` or a batch ``(B, n_in)``; outputs
keep the same rank.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ACTIVATIONS = ("relu", "tanh", "logistic", "identity", "softmax")


@dataclass
class ParamSet:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self) -> None:
        n_layers = len(self.layer_sizes) - 1
        if n_layers < 1:
            raise ValueError("need at least an input and an output size")
        if not (len(self.weights) == len(self.biases) == len(self.activations) == n_layers):
            raise ValueError("weights, biases and activations must have one entry per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != shape or b.shape != (shape[1],):
                raise ValueError(f"layer {i}: expected W{shape}, b({shape[1]},), "
                                 f"got W{w.shape}, b{b.shape}")
        for i, act in enumerate(self.activations):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
            if act == "softmax" and i != n_layers - 1:
                raise ValueError("softmax is only allowed on the final layer")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]

    def arrays(self) -> list[np.ndarray]:
        """Flat list of parameter arrays: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def with_arrays(self, arrays: list[np.ndarray]) -> "ParamSet":
        return ParamSet(list(self.layer_sizes), list(arrays[0::2]), list(arrays[1::2]),
                        list(self.activations))

    def copy(self) -> "ParamSet":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def same_architecture(self, other: "ParamSet") -> bool:
        return (list(self.layer_sizes) == list(other.layer_sizes)
                and list(self.activations) == list(other.activations))

    def num_params(self) -> int:
        return sum(a.size for a in self.arrays())


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


@dataclass
class Cache:
    inputs: list[np.ndarray]     # layer inputs, batch-shaped
    pre: list[np.ndarray]        # pre-activations
    post: list[np.ndarray]       # activations
    squeezed: bool
    layer_sizes: tuple[int, ...] = field(default=())

    @property
    def logits(self) -> np.ndarray:
        """Final-layer pre-activation, in the caller's rank."""
        return self.pre[-1][0] if self.squeezed else self.pre[-1]


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("Adam epsilon must be positive")


def init_params(layer_sizes, activations, rng: np.random.Generator,
                zero_last: bool = False) -> ParamSet:
    """Glorot-uniform weights, zero biases.

    ``zero_last`` zeroes the final layer so the network output equals the
    output activation evaluated at zero.
    """
    layer_sizes = [int(s) for s in layer_sizes]
    if isinstance(activations, str):
        activations = [activations] * (len(layer_sizes) - 1)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    if zero_last:
        weights[-1] = np.zeros_like(weights[-1])
    return ParamSet(layer_sizes, weights, biases, list(activations))


def zeros_like_params(params: ParamSet) -> list[np.ndarray]:
    return [np.zeros_like(a) for a in params.arrays()]


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def logistic(z: np.ndarray) -> np.ndarray:
    # split form avoids overflow in exp for large |z|
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(act: str, z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    if act == "logistic":
        return logistic(z)
    if act == "softmax":
        return softmax(z)
    return z


def _activation_grad(act: str, z: np.ndarray, a: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Pull the upstream gradient ``g`` back through the activation."""
    if act == "relu":
        return g * (z > 0.0)
    if act == "tanh":
        return g * (1.0 - a * a)
    if act == "logistic":
        return g * a * (1.0 - a)
    if act == "softmax":
        return a * (g - np.sum(a * g, axis=-1, keepdims=True))
    return g


def forward(params: ParamSet, x) -> tuple[np.ndarray, Cache]:
    x = np.asarray(x, dtype=float)
    squeezed = x.ndim == 1
    h = x[None, :] if squeezed else x
    if h.ndim != 2 or h.shape[1] != params.n_in:
        raise ValueError(f"input has shape {x.shape}, network expects {params.n_in} features")
    inputs, pre, post = [], [], []
    for w, b, act in zip(params.weights, params.biases, params.activations):
        inputs.append(h)
        z = h @ w + b
        h = _activate(act, z)
        pre.append(z)
        post.append(h)
    out = h[0] if squeezed else h
    return out, Cache(inputs, pre, post, squeezed, tuple(params.layer_sizes))


def backward(params: ParamSet, cache: Cache, output_grad) -> GradientSet:
    """Gradients of ``sum(output * output_grad)`` w.r.t. every parameter and the input.

    Batch gradients are summed over the batch; scale ``output_grad`` to get a mean.
    """
    if cache.layer_sizes != tuple(params.layer_sizes) or len(cache.pre) != len(params.weights):
        raise ValueError("cache does not come from a forward pass of this architecture")
    g = np.asarray(output_grad, dtype=float)
    if cache.squeezed:
        g = g[None, :]
    if g.shape != cache.post[-1].shape:
        raise ValueError(f"output gradient shape {g.shape} != output shape {cache.post[-1].shape}")
    n = len(params.weights)
    dws: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    dbs: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for i in range(n - 1, -1, -1):
        dz = _activation_grad(params.activations[i], cache.pre[i], cache.post[i], g)
        dws[i] = cache.inputs[i].T @ dz
        dbs[i] = dz.sum(axis=0)
        g = dz @ params.weights[i].T
    return GradientSet(dws, dbs, g[0] if cache.squeezed else g)


def adam_update(params: ParamSet, grads: GradientSet | list[np.ndarray], state: AdamState,
                lr: float) -> tuple[ParamSet, AdamState]:
    """One bias-corrected Adam descent step."""
    g_arrays = grads.arrays() if isinstance(grads, GradientSet) else list(grads)
    p_arrays = params.arrays()
    if len(g_arrays) != len(p_arrays) or any(g.shape != p.shape for g, p in zip(g_arrays, p_arrays)):
        raise ValueError("gradient shapes do not match parameter shapes")
    if not all(np.all(np.isfinite(g)) for g in g_arrays):
        raise FloatingPointError("non-finite gradient passed to adam_update")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_m, new_v, new_p = [], [], []
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(p_arrays, g_arrays, state.first_moment, state.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        new_p.append(p - step)
        new_m.append(m)
        new_v.append(v)
    return params.with_arrays(new_p), AdamState(new_m, new_v, t, b1, b2, state.epsilon)


def adam_init(params: ParamSet, beta1: float = 0.9, beta2: float = 0.999,
              epsilon: float = 1e-8) -> AdamState:
    return AdamState(zeros_like_params(params), zeros_like_params(params), 0, beta1, beta2, epsilon)


def soft_update(target: ParamSet, online: ParamSet, tau: float) -> ParamSet:
    """Return ``tau * online + (1 - tau) * target``."""
    if not target.same_architecture(online):
        raise ValueError("soft_update needs identical architectures")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return target.with_arrays([tau * o + (1.0 - tau) * t
                               for t, o in zip(target.arrays(), online.arrays())])


# ---------------------------------------------------------------------------
# gradient verification

def _loss_and_grad(out: np.ndarray, loss_tag: str, probe: np.ndarray) -> tuple[float, np.ndarray]:
    if loss_tag == "sum":
        return float(out.sum()), np.ones_like(out)
    if loss_tag == "quadratic":
        return float(0.5 * np.sum(out * out)), out.copy()
    if loss_tag == "probe":
        # fixed random projection; keeps softmax heads from having zero gradient
        return float(np.sum(out * probe)), probe
    raise ValueError(f"unknown loss tag {loss_tag!r}")


def grad_check(params: ParamSet, x, loss_tag: str = "probe", h: float = 1e-6,
               backward_fn: Callable = backward, seed: int = 0) -> float:
    """Worst relative error between ``backward_fn`` and central differences.

    The error for each parameter array is ``||a - n|| / (||a|| + ||n||)``
    (Euclidean norms); the maximum over arrays is returned.  A zeroed
    analytic gradient against a nonzero numeric one therefore scores 1.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    out, cache = forward(params, x)
    probe = np.random.default_rng(seed).standard_normal(out.shape)
    _, g_out = _loss_and_grad(out, loss_tag, probe)
    analytic = backward_fn(params, cache, g_out).arrays()

    arrays = [a.copy() for a in params.arrays()]
    worst = 0.0
    for k, arr in enumerate(arrays):
        flat = arr.reshape(-1)
        numeric = np.empty(flat.size)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            lp, _ = _loss_and_grad(forward(params.with_arrays(arrays), x)[0], loss_tag, probe)
            flat[j] = orig - h
            lm, _ = _loss_and_grad(forward(params.with_arrays(arrays), x)[0], loss_tag, probe)
            flat[j] = orig
            numeric[j] = (lp - lm) / (2.0 * h)
        a_flat = np.asarray(analytic[k], dtype=float).reshape(-1)
        denom = np.linalg.norm(a_flat) + np.linalg.norm(numeric)
        if denom > 1e-300:
            worst = max(worst, float(np.linalg.norm(a_flat - numeric) / denom))
    return worst
