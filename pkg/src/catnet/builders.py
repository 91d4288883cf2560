"""Certified ReLU skeleton builders for the primitive catalog functions.

Each builder returns a :class:`BuiltApproximator`: the skeleton together with
its global Lipschitz certificate, the accuracy it guarantees on its
approximation set, and an integer upper bound on its parameter count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import algebra
from .domains import All, ApproxSet, Box, HalfLineNonneg
from .skeleton import MAX_ENTRIES, ResourceLimitError, Skeleton, affine_skeleton

RELU_ID = algebra.identity_requirement()


@dataclass(frozen=True)
class BuiltApproximator:
    skeleton: Skeleton
    lipschitz: float
    accuracy: float
    domain: ApproxSet
    param_bound: int
    exact: bool = False
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.skeleton.param_count > self.param_bound:
            raise AssertionError(
                f"builder produced {self.skeleton.param_count} parameters, above its bound {self.param_bound}"
            )
        if not self.accuracy > 0 or self.lipschitz < 0:
            raise ValueError("accuracy must be positive and lipschitz non-negative")

    @property
    def param_count(self) -> int:
        return self.skeleton.param_count

    def __call__(self, x):
        return self.skeleton(x)


def clamp_accuracy(delta: float) -> float:
    """Builders are only specified for accuracies up to 1; larger requests are clamped."""
    if not delta > 0:
        raise ValueError(f"accuracy must be positive, got {delta}")
    return min(float(delta), 1.0)


def _guard_neurons(n: int, what: str) -> None:
    # A scalar piecewise-linear block with n kinks needs about 3n parameters, and the
    # compiler multiplies that by small identity factors; refuse before allocating.
    if 4 * n > MAX_ENTRIES:
        raise ResourceLimitError(f"{what} needs {n:,} hidden neurons, above the dense storage budget")


def _kink_network(breaks: np.ndarray, slopes: np.ndarray, left_value: float) -> Skeleton:
    """One-hidden-layer scalar network ``left_value + sum_i slopes_i * ReLU(x - breaks_i)``."""
    n = len(breaks)
    V1 = np.ones((n, 1))
    b1 = -np.asarray(breaks, dtype=np.float64)
    V2 = np.asarray(slopes, dtype=np.float64).reshape(1, n)
    return Skeleton([(V1, b1), (V2, np.array([left_value]))])


def _interpolant(xs: np.ndarray, ys: np.ndarray) -> Skeleton:
    """Interpolate through ``(xs, ys)``; constant on the left, last slope on the right."""
    seg = np.diff(ys) / np.diff(xs)
    changes = np.diff(np.concatenate([[0.0], seg]))
    return _kink_network(xs[:-1], changes, ys[0])


# -- scalar Lipschitz functions -------------------------------------------------

def pwl_lipschitz(f: Callable, K: float, r: float, delta: float) -> BuiltApproximator:
    """Interpolate a K-Lipschitz ``f`` at ``N + 1`` equidistant points of ``[-r, r]``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if K < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    delta = clamp_accuracy(delta)
    ratio = K * r / delta
    N = max(1, math.ceil(ratio))
    _guard_neurons(N, "piecewise-linear interpolant")
    f0 = float(np.asarray(f(np.array([-r])), dtype=np.float64).reshape(-1)[0])
    if K == 0:
        skel = _kink_network(np.array([-r]), np.zeros(1), f0)
    else:
        xs = -r + 2.0 * r * np.arange(N + 1) / N
        xs[-1] = r
        ys = np.asarray(f(xs), dtype=np.float64).reshape(-1)
        skel = _interpolant(xs, ys)
    bound = math.floor(3 * ratio + 4)
    return BuiltApproximator(skel, float(K), delta, Box.symmetric(r), bound, notes={"N": N})


def weighted_radius(K: float, q: float, delta: float) -> float:
    return (2.0 * K / delta) ** (1.0 / (q - 1.0))


def pwl_lipschitz_weighted(f: Callable, K: float, q: float, delta: float) -> BuiltApproximator:
    """Approximation on all of R in the weighted norm ``(1 + |x|^q)^{-1} |f - R|``.

    Interpolates on ``[-r, r]`` with ``r = (2K/delta)^{1/(q-1)}``; beyond that
    radius the weight absorbs the linear growth of the error.
    """
    if not q > 1:
        raise ValueError("weighted interpolation requires q > 1")
    if K < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    delta = clamp_accuracy(delta)
    if K == 0:
        inner = pwl_lipschitz(f, 0.0, 1.0, delta)
        return BuiltApproximator(inner.skeleton, 0.0, delta, All(1), 4, notes={"N": 1, "r": 1.0})
    r = weighted_radius(K, q, delta)
    inner = pwl_lipschitz(f, K, r, delta)
    bound = math.floor(2 ** (1.0 / (q - 1.0)) * 3 * (K / delta) ** (q / (q - 1.0)) + 4)
    bound = max(bound, inner.param_bound)  # same quantity; guards the float evaluation order
    return BuiltApproximator(inner.skeleton, float(K), delta, All(1), bound,
                             notes={"N": inner.notes["N"], "r": r})


# -- exact networks -------------------------------------------------------------

def identity_builder(d: int = 1) -> BuiltApproximator:
    """The affine identity on R^d: exact, 1-Lipschitz, ``d(d+1)`` parameters."""
    skel = algebra.affine_identity(d)
    return BuiltApproximator(skel, 1.0, 1.0, All(d), d * (d + 1), exact=True)


PHI_2 = Skeleton([
    (np.array([[1.0, -1.0], [0.0, 1.0], [0.0, -1.0]]), np.zeros(3)),
    (np.array([[1.0, 1.0, -1.0]]), np.zeros(1)),
])


def max_param_count(d: int) -> int:
    return (4 * d ** 3 + 3 * d ** 2 - 4 * d + 3) // 3


def max_network(d: int) -> Skeleton:
    """Exact ReLU skeleton for ``x -> max_i x_i`` built recursively from pairwise maxima."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return algebra.affine_identity(1)
    phi = PHI_2
    for k in range(3, d + 1):
        phi = algebra.concat(phi, algebra.parallel(PHI_2, algebra.id_d(RELU_ID, k - 2)))
    return phi


def max_skeleton(d: int) -> BuiltApproximator:
    skel = max_network(d)
    return BuiltApproximator(skel, 1.0, 1.0, All(d), max_param_count(d), exact=True)


# -- square and product ---------------------------------------------------------

def unit_square_levels(eps: float) -> int:
    """Smallest ``m >= 1`` with ``2^{-2m-2} <= eps``."""
    m = 1
    while 4.0 ** (-m - 1) > eps:
        m += 1
    return m


def unit_square_target(eps: float) -> int:
    """Reference count ``max{13, 10 log2(1/eps) - 7}`` for the square on [0, 1]."""
    return math.floor(max(13.0, 10.0 * math.log2(1.0 / eps) - 7.0))


def unit_square_network(m: int) -> Skeleton:
    """Sawtooth approximation of ``x^2`` on [0, 1], equal to ReLU elsewhere.

    With ``a = ReLU(x)`` and the hat ``g_1 = 2a - 4 ReLU(x - 1/2) + 2 ReLU(x - 1)``
    the iterates ``g_s = hat(g_{s-1})`` give ``a - sum_s g_s / 4^s``, the
    piecewise-linear interpolant of ``x^2`` at the dyadic points of level ``m``.
    Each hidden layer holds ``[acc, g, ReLU(g - 1/2)]``; ``acc`` and ``g`` are
    non-negative, so a single ReLU neuron carries each of them.
    """
    layers = [(np.array([[1.0], [1.0], [1.0]]), np.array([0.0, -0.5, -1.0]))]
    # hidden layer 1 holds (a, b, c); acc_1 = a - g_1/4, g_1 = 2a - 4b + 2c
    acc = np.array([0.5, 1.0, -0.5])
    g = np.array([2.0, -4.0, 2.0])
    for s in range(2, m + 1):
        V = np.vstack([acc, g, g])
        b = np.array([0.0, 0.0, -0.5])
        layers.append((V, b))
        # new hidden layer holds (acc_{s-1}, g_{s-1}, t_{s-1}); g_s = 2 g_{s-1} - 4 t_{s-1}
        g_new = np.array([0.0, 2.0, -4.0])
        acc = np.array([1.0, 0.0, 0.0]) - g_new / 4.0 ** s
        g = g_new
    layers.append((acc.reshape(1, 3), np.zeros(1)))
    return Skeleton(layers)


def unit_square_skeleton(eps: float) -> BuiltApproximator:
    eps = clamp_accuracy(eps)
    m = unit_square_levels(eps)
    skel = unit_square_network(m)
    return BuiltApproximator(
        skel, 2.0, eps, Box((0.0,), (1.0,)), unit_square_target(eps),
        notes={"levels": m, "error": 4.0 ** (-m - 1), "construction": "P = 12m - 2"},
    )


def square_skeleton(r: float, eps: float) -> BuiltApproximator:
    """``x -> x^2`` on ``[-r, r]`` by mirroring and scaling the unit construction; ``r|x|`` outside."""
    if not r > 0:
        raise ValueError("radius must be positive")
    eps = clamp_accuracy(eps)
    unit_eps = min(1.0, eps / (r * r))
    unit = unit_square_skeleton(unit_eps)
    split = affine_skeleton(np.array([[1.0 / r], [-1.0 / r]]))
    merge = affine_skeleton(np.array([[r * r, r * r]]))
    skel = algebra.concat_all(merge, algebra.parallel(unit.skeleton, unit.skeleton), split)
    bound = 4 * unit.param_bound
    return BuiltApproximator(skel, 2.0 * r, eps, Box.symmetric(r), bound,
                             notes={"unit_accuracy": unit_eps, "levels": unit.notes["levels"]})


def product_skeleton(r: float, eps: float) -> BuiltApproximator:
    """``(x, y) -> xy`` on ``[-r, r]^2`` via ``xy = ((x+y)^2 - (x-y)^2) / 4``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if not 0 < eps <= 0.5:
        raise ValueError(f"product accuracy must lie in (0, 1/2], got {eps}")
    sq = square_skeleton(2.0 * r, 2.0 * eps)
    split = affine_skeleton(np.array([[1.0, 1.0], [1.0, -1.0]]))
    merge = affine_skeleton(np.array([[0.25, -0.25]]))
    skel = algebra.concat_all(merge, algebra.parallel(sq.skeleton, sq.skeleton), split)
    return BuiltApproximator(skel, math.sqrt(8.0) * r, eps, Box.symmetric(r, 2), 4 * sq.param_bound,
                             notes={"levels": sq.notes["levels"]})


def square_target(r: float, eps: float) -> float:
    return max(52.0, 80.0 * math.log2(r) + 40.0 * math.log2(1.0 / eps) - 28.0)


def product_target(r: float, eps: float) -> float:
    return max(208.0, 320.0 * math.log2(r) + 160.0 * math.log2(1.0 / eps) + 48.0)


# -- exponential -----------------------------------------------------------------

def exp_skeleton(eps: float) -> BuiltApproximator:
    """``x -> e^{-x}`` on ``[0, inf)`` by interpolation at the points ``-log(n eps)``."""
    eps = clamp_accuracy(eps)
    N = math.floor(1.0 / eps)
    _guard_neurons(N, "exponential interpolant")
    n = np.arange(N, 0, -1, dtype=np.float64)
    xs = -np.log(n * eps)
    ys = n * eps
    if N == 1:
        skel = _kink_network(xs, np.zeros(1), ys[0])
    else:
        seg = np.diff(ys) / np.diff(xs)
        changes = np.diff(np.concatenate([[0.0], seg, [0.0]]))
        skel = _kink_network(xs, changes, ys[0])
    return BuiltApproximator(skel, 1.0, eps, HalfLineNonneg(), 3 * N + 1, notes={"N": N})
