"""Sampled checks of a compiled network's error, Lipschitz and size certificates.

All measurements are lower bounds on the true suprema; a check passes when the
certificate is at least the measurement (up to a rounding tolerance).
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .compiler import CompiledNetwork, thread_count
from .network import CatalogNetwork, domain_contains, realize_exact
from .sampling import (DEFAULT_BUDGET, GridBox, HeavyTail, difference_quotient,
                       grid_points_per_dim, lipschitz_pairs)
from .skeleton import RELU, Activation, Skeleton, realize

ERROR_TOL = 1e-12
LIP_TOL = 1e-9
CHUNK = 4096

CSV_HEADER = ("d", "epsilon", "params_actual", "param_bound", "prop_bound", "error_measured",
              "lip_measured", "lip_cert", "samples", "runtime_ms")


class VerificationError(ValueError):
    pass


def _chunks(n: int):
    return [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def _map_chunks(fn, n):
    spans = _chunks(n)
    workers = min(thread_count(), len(spans))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, spans))
    return [fn(s) for s in spans]


def measure_error(xi: CatalogNetwork, skeleton: Skeleton, points: np.ndarray,
                  activation: Activation = RELU) -> tuple:
    """``(max_error, argmax, retained, skipped)`` of ``w(|x|) |R(xi)(x) - R(phi)(x)|``.

    Points outside the network's domain are skipped.  Ties resolve to the
    lowest sample index.
    """
    points = np.asarray(points, dtype=np.float64)
    inside = domain_contains(xi, points)
    kept = points[np.atleast_1d(inside)]
    skipped = int(points.shape[0] - kept.shape[0])
    if kept.shape[0] == 0:
        raise VerificationError("no sample lies in the network's domain")
    weight = xi.catalog.weight

    def err(span):
        x = kept[span[0]:span[1]]
        diff = realize_exact(xi, x) - realize(skeleton, activation, x).reshape(len(x), -1)
        return weight(np.linalg.norm(x, axis=1)) * np.linalg.norm(diff, axis=1)

    errs = np.concatenate(_map_chunks(err, kept.shape[0]))
    i = int(np.argmax(errs))
    return float(errs[i]), kept[i], int(kept.shape[0]), skipped


def estimate_lipschitz(skeleton: Skeleton, activation: Activation, pairs: tuple) -> float:
    """Largest difference quotient over the sampled pairs."""
    x, y = (np.asarray(p, dtype=np.float64) for p in pairs)
    if x.shape[0] == 0:
        raise VerificationError("need at least one pair")

    def quot(span):
        a, b = x[span[0]:span[1]], y[span[0]:span[1]]
        fa = realize(skeleton, activation, a).reshape(len(a), -1)
        fb = realize(skeleton, activation, b).reshape(len(b), -1)
        return difference_quotient(fa, fb, a, b)

    return max(_map_chunks(quot, x.shape[0]))


# -- sampler defaults --------------------------------------------------------------------

def default_sampler(compiled: CompiledNetwork, box=None, samples: int = DEFAULT_BUDGET,
                    seed: int = 0, grid: int | None = None):
    """Grid on a box for constant weights, heavy tails for decaying weights.

    ``box`` is ``(lo, hi)``; without one, ``[-1, 1]^d`` is used.
    """
    xi = compiled.source
    d = xi.in_dim
    weight = xi.catalog.weight
    if not weight.is_constant:
        K = max(f.lipschitz for layer in xi.layers for f in layer.funcs)
        q = weight.param
        scale = max(1.0, (2 * K / compiled.epsilon) ** (1.0 / (q - 1))) if q > 1 else 1.0
        return HeavyTail(d, samples, seed, scale)
    lo, hi = box if box is not None else ((-1.0,) * d, (1.0,) * d)
    lo, hi = tuple(float(v) for v in lo), tuple(float(v) for v in hi)
    return GridBox(lo, hi, grid or grid_points_per_dim(d, samples))


def default_pairs(compiled: CompiledNetwork, sampler, n: int, seed: int):
    if isinstance(sampler, HeavyTail):
        radius = 3.0 * sampler.scale
    else:
        radius = max(1.0, float(np.max(np.abs(np.concatenate([sampler.lo, sampler.hi])))))
    return lipschitz_pairs(compiled.source.in_dim, n, radius, seed)


# -- reports ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    d: int
    epsilon: float
    max_weighted_error: float
    argmax: list
    lipschitz_estimate: float
    lipschitz_cert: float
    params_actual: int
    params_recorded: int
    param_bound: float
    samples: int
    skipped: int
    lip_pairs: int
    sampler: dict
    prop_bound: float | None = None
    runtime_ms: float = 0.0
    error_ok: bool = field(init=False)
    lip_ok: bool = field(init=False)
    params_ok: bool = field(init=False)
    prop_ok: bool = field(init=False)

    def __post_init__(self):
        self.error_ok = self.max_weighted_error <= self.epsilon + ERROR_TOL
        self.lip_ok = self.lipschitz_estimate <= self.lipschitz_cert + LIP_TOL
        self.params_ok = (self.params_actual == self.params_recorded
                          and self.params_actual <= math.ceil(self.param_bound))
        self.prop_ok = self.prop_bound is None or self.params_actual <= self.prop_bound

    @property
    def passed(self) -> bool:
        return self.error_ok and self.lip_ok and self.params_ok and self.prop_ok

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        if not include_runtime:
            out.pop("runtime_ms")
        return out

    def csv_row(self) -> tuple:
        return (
            self.d, _fmt(self.epsilon), self.params_actual, _fmt(self.param_bound),
            "" if self.prop_bound is None else _fmt(self.prop_bound),
            _fmt(self.max_weighted_error), _fmt(self.lipschitz_estimate), _fmt(self.lipschitz_cert),
            self.samples, f"{self.runtime_ms:.1f}",
        )


def _fmt(v: float) -> str:
    return repr(float(v))


def check_certificates(compiled: CompiledNetwork, sampler=None, pairs=None, *, box=None,
                       samples: int = DEFAULT_BUDGET, seed: int = 0, grid: int | None = None,
                       prop_bound: float | None = None, d: int | None = None,
                       params_recorded: int | None = None) -> VerificationReport:
    """Measure error and Lipschitz quotients and compare them with the certificate."""
    t0 = time.perf_counter()
    sampler = sampler or default_sampler(compiled, box, samples, seed, grid)
    err, arg, kept, skipped = measure_error(compiled.source, compiled.skeleton, sampler.points())
    if pairs is None:
        pairs = default_pairs(compiled, sampler, min(samples, DEFAULT_BUDGET), seed + 1)
    lip = estimate_lipschitz(compiled.skeleton, RELU, pairs)
    return VerificationReport(
        d=compiled.source.in_dim if d is None else d,
        epsilon=compiled.epsilon,
        max_weighted_error=err,
        argmax=[float(v) for v in arg],
        lipschitz_estimate=lip,
        lipschitz_cert=compiled.lipschitz_cert,
        params_actual=compiled.params_actual,
        params_recorded=compiled.params_actual if params_recorded is None else int(params_recorded),
        param_bound=compiled.param_bound,
        samples=kept,
        skipped=skipped,
        lip_pairs=int(len(pairs[0])),
        sampler=sampler.describe(),
        prop_bound=prop_bound,
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


__all__ = [
    "CSV_HEADER", "VerificationError", "VerificationReport", "check_certificates", "default_pairs",
    "default_sampler", "estimate_lipschitz", "measure_error",
]
