"""Catalog networks: affine layers interleaved with block-wise catalog nonlinearities."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catalog import Catalog, CatalogFunction, catalog_from_dict

POWER_RTOL = 1e-12
POWER_MAXITER = 100_000
NORM_INFLATION = 1e-10
ZERO_NORM_FLOOR = 1e-300


def operator_norm(V) -> float:
    """Largest singular value, biased upward so that certificates never understate it.

    Diagonal and single row/column matrices use closed forms.  Otherwise power
    iteration on ``V^T V`` (all-ones start, reseeded deterministically when it
    stagnates on a vector orthogonal to the top singular direction) is taken
    together with the LAPACK value, and the larger one is inflated by ``1 + 1e-10``.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError("operator_norm expects a matrix")
    if not np.any(V):
        return 0.0
    rows, cols = V.shape
    if rows == 1 or cols == 1:
        return float(np.nextafter(np.linalg.norm(V.ravel()), np.inf))
    off = V.copy()
    k = min(rows, cols)
    off[np.arange(k), np.arange(k)] = 0.0
    if not np.any(off):
        return float(np.abs(np.diagonal(V)).max())
    return max(power_iteration_norm(V), float(np.linalg.norm(V, 2))) * (1.0 + NORM_INFLATION)


def power_iteration_norm(V, rtol: float = POWER_RTOL, maxiter: int = POWER_MAXITER) -> float:
    """Plain power iteration estimate of the spectral norm (no inflation)."""
    V = np.asarray(V, dtype=np.float64)
    G = V.T @ V
    v = np.ones(G.shape[0])
    rng = np.random.default_rng(12345)
    lam = 0.0
    for it in range(maxiter):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector lies in the kernel; reseed
            v = rng.standard_normal(G.shape[0])
            continue
        new = float(v @ w / (v @ v))
        v = w / nw
        if it > 0 and abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return float(np.sqrt(max(lam, 0.0)))


@dataclass(frozen=True, eq=False)
class CatalogLayer:
    matrix: np.ndarray
    bias: np.ndarray
    funcs: tuple

    @property
    def n_in(self):
        return self.matrix.shape[1]

    @property
    def n_mid(self):
        return self.matrix.shape[0]

    @property
    def n_out(self):
        return sum(f.dout for f in self.funcs)

    def nonlinearity(self, z: np.ndarray) -> np.ndarray:
        """Apply ``f_1, ..., f_n`` to consecutive blocks of ``z``."""
        outs = []
        start = 0
        for f in self.funcs:
            outs.append(f(z[:, start:start + f.din]))
            start += f.din
        return np.hstack(outs)


class CatalogNetwork:
    """``[(V_1, b_1, (f_11, ...)), ..., (V_D, b_D, (f_D1, ...))]`` over a catalog."""

    def __init__(self, layers: Sequence, catalog: Catalog):
        self.catalog = catalog
        built = []
        prev_out = None
        for k, layer in enumerate(layers, start=1):
            V, b, funcs = layer
            V = np.array(V, dtype=np.float64, ndmin=2)
            b = np.array(b, dtype=np.float64).reshape(-1)
            fns = tuple(catalog[f] if isinstance(f, str) else f for f in funcs)
            if not fns:
                raise ValueError(f"layer {k}: no catalog functions")
            if V.shape[0] != b.shape[0]:
                raise ValueError(f"layer {k}: matrix and bias disagree")
            if sum(f.din for f in fns) != V.shape[0]:
                raise ValueError(
                    f"layer {k}: functions consume {sum(f.din for f in fns)} inputs, affine map emits {V.shape[0]}"
                )
            if prev_out is not None and V.shape[1] != prev_out:
                raise ValueError(f"layer {k}: expects {V.shape[1]} inputs, previous layer emits {prev_out}")
            if not (np.isfinite(V).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k}: non-finite entry")
            V.setflags(write=False)
            b.setflags(write=False)
            built.append(CatalogLayer(V, b, fns))
            prev_out = sum(f.dout for f in fns)
        if not built:
            raise ValueError("a catalog network needs at least one layer")
        self.layers = tuple(built)

    # -- structure ---------------------------------------------------------------
    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def dims(self) -> tuple:
        """``(l_0, l_1, ..., l_{2D})``."""
        out = [self.layers[0].n_in]
        for layer in self.layers:
            out += [layer.n_mid, layer.n_out]
        return tuple(out)

    @property
    def in_dim(self) -> int:
        return self.layers[0].n_in

    @property
    def out_dim(self) -> int:
        return self.layers[-1].n_out

    @property
    def width(self) -> int:
        return max(self.dims)

    # -- evaluation --------------------------------------------------------------
    def _batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim <= 1
        x = x.reshape(1, -1) if single else x
        if x.shape[1] != self.in_dim:
            raise ValueError(f"input has dimension {x.shape[1]}, network expects {self.in_dim}")
        return x, single

    def __call__(self, x):
        return realize_exact(self, x)

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"matrix": L.matrix.tolist(), "bias": L.bias.tolist(), "funcs": [f.id for f in L.funcs]}
                for L in self.layers
            ]
        }

    @classmethod
    def from_dict(cls, data: dict, catalog: Catalog) -> "CatalogNetwork":
        try:
            return cls([(L["matrix"], L["bias"], L["funcs"]) for L in data["layers"]], catalog)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed catalog network JSON: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __repr__(self):
        return f"CatalogNetwork(dims={self.dims}, catalog={self.catalog.name!r})"


def realize_exact(xi: CatalogNetwork, x):
    """Oracle realization ``N_D o A_D o ... o N_1 o A_1`` with the exact catalog functions."""
    h, single = xi._batch(x)
    for layer in xi.layers:
        h = layer.nonlinearity(h @ layer.matrix.T + layer.bias)
    return h[0] if single else h


def domain_contains(xi: CatalogNetwork, x):
    """Whether every pre-nonlinearity state lies in its layer's approximation sets."""
    h, single = xi._batch(x)
    ok = np.ones(h.shape[0], dtype=bool)
    for layer in xi.layers:
        z = h @ layer.matrix.T + layer.bias
        start = 0
        for f in layer.funcs:
            ok &= f.domain.contains(z[:, start:start + f.din])
            start += f.din
        h = layer.nonlinearity(z)
    return bool(ok[0]) if single else ok


def layer_lip(xi: CatalogNetwork, k: int) -> float:
    """``Lip^k = max_j L_{f_kj}`` for ``1 <= k <= D``; ``Lip^0 = 0``."""
    if k == 0:
        return 0.0
    if not 1 <= k <= xi.depth:
        raise IndexError(f"layer index {k} outside 1..{xi.depth}")
    return max(f.lipschitz for f in xi.layers[k - 1].funcs)


def layer_norms(xi: CatalogNetwork) -> list:
    """Operator norms ``||V_k||``, floored at 1e-300 so later divisions stay finite."""
    return [max(operator_norm(L.matrix), ZERO_NORM_FLOOR) for L in xi.layers]


def full_lip(xi: CatalogNetwork, norms=None) -> float:
    norms = norms or layer_norms(xi)
    out = 1.0
    for k in range(1, xi.depth + 1):
        out *= layer_lip(xi, k) * norms[k - 1]
    return out


def translation_size(xi: CatalogNetwork) -> float:
    return max([1.0] + [float(np.linalg.norm(L.bias)) for L in xi.layers])


def tech_lip(xi: CatalogNetwork, norms=None) -> float:
    """``max{1, max_k max{1, Lip^k, Lip^D} ||V_D|| prod_{j=k+1}^{D-1} Lip^j ||V_j||}``, as printed."""
    norms = norms or layer_norms(xi)
    D = xi.depth
    lipD = layer_lip(xi, D)
    best = 1.0
    for k in range(0, D):
        term = max(1.0, layer_lip(xi, k), lipD) * norms[D - 1]
        for j in range(k + 1, D):
            term *= layer_lip(xi, j) * norms[j - 1]
        best = max(best, term)
    return best


@dataclass(frozen=True)
class NetworkQuantities:
    depth: int
    width: int
    in_dim: int
    out_dim: int
    layer_lips: tuple
    norms: tuple
    full_lip: float
    translation: float
    tech_lip: float

    def to_dict(self):
        return {
            "D": self.depth, "W": self.width, "L": self.full_lip, "B": self.translation,
            "Lambda": self.tech_lip, "layer_lips": list(self.layer_lips), "norms": list(self.norms),
        }


def quantities(xi: CatalogNetwork) -> NetworkQuantities:
    norms = layer_norms(xi)
    return NetworkQuantities(
        depth=xi.depth,
        width=xi.width,
        in_dim=xi.in_dim,
        out_dim=xi.out_dim,
        layer_lips=tuple(layer_lip(xi, k) for k in range(1, xi.depth + 1)),
        norms=tuple(norms),
        full_lip=full_lip(xi, norms),
        translation=translation_size(xi),
        tech_lip=tech_lip(xi, norms),
    )


def network_from_json(text_or_dict, catalog: Catalog | dict) -> CatalogNetwork:
    data = json.loads(text_or_dict) if isinstance(text_or_dict, str) else text_or_dict
    if not isinstance(catalog, Catalog):
        catalog = catalog_from_dict(catalog)
    return CatalogNetwork.from_dict(data, catalog)


__all__ = [
    "CatalogFunction", "CatalogLayer", "CatalogNetwork", "NetworkQuantities", "domain_contains",
    "full_lip", "layer_lip", "layer_norms", "network_from_json", "operator_norm",
    "power_iteration_norm", "quantities", "realize_exact", "tech_lip", "translation_size",
]
