"""Feasible bandwidth allocations: {w : sum(w) = W, w >= floors}."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..errors import InfeasibleActionError
from ..nn import softmax

FEASIBILITY_RTOL = 1e-9


@dataclass
class AllocationAction:
    bandwidth: np.ndarray

    def fractions(self, W: float) -> np.ndarray:
        return self.bandwidth / W

    def violations(self, W: float, floors) -> list[str]:
        tol = FEASIBILITY_RTOL * W
        w = self.bandwidth
        out = []
        if not np.all(np.isfinite(w)):
            out.append("non-finite entries")
        if abs(float(np.sum(w)) - W) > tol:
            out.append(f"sum {np.sum(w):.12g} != W {W:.12g}")
        if np.any(w < np.asarray(floors, dtype=float) - tol):
            out.append("below floor")
        return out

    def is_feasible(self, W: float, floors) -> bool:
        return not self.violations(W, floors)


def _check_floors(W: float, floors, n: int) -> np.ndarray:
    floors = np.zeros(n) if floors is None else np.broadcast_to(np.asarray(floors, dtype=float), (n,))
    if np.any(floors < 0):
        raise InfeasibleActionError("floors must be nonnegative")
    if floors.sum() > W * (1 + FEASIBILITY_RTOL):
        raise InfeasibleActionError(f"floors sum to {floors.sum():g}, more than W = {W:g}")
    return floors


def _simplex_sum(v: np.ndarray, z: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto {y >= 0, sum(y) = z}."""
    if z <= 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - z
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_to_simplex(raw, W: float, floors=None) -> AllocationAction:
    raw = np.asarray(raw, dtype=float)
    floors = _check_floors(W, floors, raw.size)
    residual = max(W - floors.sum(), 0.0)
    y = floors + _simplex_sum(raw - floors, residual)
    return AllocationAction(_fix_sum(y, W, floors))


def _fix_sum(w: np.ndarray, W: float, floors: np.ndarray) -> np.ndarray:
    # push the last rounding error onto the largest slack entry
    err = W - w.sum()
    if err != 0.0:
        k = int(np.argmax(w - floors))
        w = w.copy()
        w[k] += err
    return w


def softmax_allocation(logits, W: float, floors=None) -> AllocationAction:
    """Floors first, then the residual split by softmax(logits)."""
    logits = np.asarray(logits, dtype=float)
    floors = _check_floors(W, floors, logits.size)
    residual = max(W - floors.sum(), 0.0)
    return AllocationAction(_fix_sum(floors + residual * softmax(logits), W, floors))


def equal_allocation(n: int, W: float) -> AllocationAction:
    if n < 1:
        raise ValueError("need at least one slice")
    return AllocationAction(np.full(n, W / n))


def proportional_allocation(tdp, W: float, floors=None) -> AllocationAction:
    """Residual after floors split in proportion to demand; all-zero demand splits equally."""
    tdp = np.asarray(tdp, dtype=float)
    if np.any(tdp < 0):
        raise ValueError("demand must be nonnegative")
    floors = _check_floors(W, floors, tdp.size)
    residual = max(W - floors.sum(), 0.0)
    total = tdp.sum()
    share = np.full(tdp.size, 1.0 / tdp.size) if total <= 0 else tdp / total
    return AllocationAction(_fix_sum(floors + residual * share, W, floors))


def composition_grid(n: int, levels: int) -> np.ndarray:
    """All fraction vectors with entries in {0, 1/(L-1), ..., 1} summing to 1.

    Enumerated by stars and bars: C(L - 1 + n - 1, n - 1) rows.
    """
    if n < 1 or levels < 2:
        raise ValueError("need n >= 1 and at least two levels")
    k = levels - 1
    rows = []
    for bars in combinations(range(k + n - 1), n - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(k + n - 1 - prev - 1)
        rows.append(parts)
    return np.array(rows, dtype=float) / k


def grid_size(n: int, levels: int) -> int:
    from math import comb
    return comb(levels - 1 + n - 1, n - 1)


def default_grid_levels(n: int, max_points: int = 3000) -> int:
    levels = 2
    while levels < 1000 and grid_size(n, levels + 1) <= max_points:
        levels += 1
    return levels


def grid_allocations(n: int, levels: int, W: float, floors=None) -> np.ndarray:
    floors = _check_floors(W, floors, n)
    residual = max(W - floors.sum(), 0.0)
    grid = floors + residual * composition_grid(n, levels)
    return np.array([_fix_sum(row, W, floors) for row in grid])
