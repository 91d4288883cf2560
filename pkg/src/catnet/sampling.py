"""Deterministic point samplers used by validation and verification."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_BUDGET = 10_000


def grid_points_per_dim(dim: int, budget: int = DEFAULT_BUDGET) -> int:
    """``ceil(budget^(1/dim))`` points per axis (at least 2)."""
    return max(2, math.ceil(budget ** (1.0 / dim) - 1e-9))


@dataclass(frozen=True)
class GridBox:
    lo: tuple
    hi: tuple
    points_per_dim: int

    def points(self) -> np.ndarray:
        axes = [np.linspace(a, b, self.points_per_dim) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def describe(self):
        return {"kind": "grid", "points_per_dim": self.points_per_dim}


@dataclass(frozen=True)
class UniformBox:
    lo: tuple
    hi: tuple
    n: int
    seed: int = 0

    def points(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return lo + (hi - lo) * rng.random((self.n, len(lo)))

    def describe(self):
        return {"kind": "uniform", "n": self.n, "seed": self.seed}


@dataclass(frozen=True)
class HeavyTail:
    """Radius ``scale * (1/U - 1)^(1/2)`` with a uniformly random direction."""

    dim: int
    n: int
    seed: int = 0
    scale: float = 1.0

    def points(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        u = rng.random(self.n)
        u = np.clip(u, 1e-300, 1.0)
        radius = self.scale * np.sqrt(1.0 / u - 1.0)
        direction = rng.standard_normal((self.n, self.dim))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return direction / norms * radius[:, None]

    def describe(self):
        return {"kind": "heavy_tail", "n": self.n, "seed": self.seed, "scale": self.scale}


def lipschitz_pairs(dim: int, n: int, radius: float, seed: int = 0,
                    min_sep: float = 1e-3, max_sep: float = 2.0) -> tuple:
    """Pairs ``(x, y)`` with ``x`` uniform in ``[-radius, radius]^dim`` and log-uniform separations.

    Separations range over ``[min_sep, max_sep] * radius`` so both fine and
    coarse difference quotients are probed without amplifying rounding noise.
    """
    rng = np.random.default_rng(seed)
    x = radius * (2 * rng.random((n, dim)) - 1)
    direction = rng.standard_normal((n, dim))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    sep = radius * np.exp(rng.uniform(math.log(min_sep), math.log(max_sep), n))
    return x, x + direction * sep[:, None]


def difference_quotient(fx: np.ndarray, fy: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    num = np.linalg.norm(np.atleast_2d(fx - fy).reshape(len(x), -1), axis=1)
    den = np.linalg.norm(x - y, axis=1)
    ok = den > 0
    if not ok.any():
        return 0.0
    return float((num[ok] / den[ok]).max())
