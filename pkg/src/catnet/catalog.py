"""Weight functions, catalog functions, catalogs and their presets.

A catalog bundles primitive functions, each with an exact evaluator, an
approximation set, a Lipschitz constant and a builder that turns an accuracy
into a certified ReLU skeleton.  The approximability constants
``kappa = (k0, k1, k2, k3)`` bound the builders' parameter counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import builders
from .builders import BuiltApproximator
from .domains import All, ApproxSet, Box, HalfLineNonneg

POLY = "poly"
LOG = "log"


# -- weight functions ---------------------------------------------------------------

@dataclass(frozen=True)
class WeightFunction:
    """A positive non-increasing weight ``w: [0, inf) -> (0, inf)``.

    ``kind`` is ``"constant"`` (``w = c``), ``"inverse_poly"`` (``(1 + x^q)^-1``)
    or ``"inverse_max_poly"`` (``max{1, x^q}^-1``).
    """

    kind: str = "constant"
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse_poly", "inverse_max_poly"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if not self.param > 0:
            raise ValueError("weight parameter must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "constant":
            return np.full_like(x, self.param)
        if self.kind == "inverse_poly":
            return 1.0 / (1.0 + x ** self.param)
        return 1.0 / np.maximum(1.0, x ** self.param)

    @property
    def decay(self) -> tuple:
        return controlled_decay_params(self)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def to_dict(self):
        return {"kind": self.kind, "param": self.param}

    @classmethod
    def from_dict(cls, data):
        return cls(data.get("kind", "constant"), float(data.get("param", 1.0)))


def Constant(c: float = 1.0) -> WeightFunction:
    return WeightFunction("constant", c)


def InversePoly(q: float) -> WeightFunction:
    return WeightFunction("inverse_poly", q)


def InverseMaxPoly(q: float) -> WeightFunction:
    return WeightFunction("inverse_max_poly", q)


def controlled_decay_params(w: WeightFunction) -> tuple:
    """``(s1, s2)`` with ``s1 r^s2 w(r max{x, 1}) >= w(x)`` for ``x >= 0``, ``r >= 1``."""
    if w.kind == "constant":
        return (1.0, 0.0)
    if w.kind == "inverse_poly":
        return (2.0, float(w.param))
    return (1.0, float(w.param))


# -- named scalar functions -------------------------------------------------------------

def _softplus(x):
    return np.logaddexp(0.0, x)


# Every base is 1-Lipschitz; user functions scale and shift them.
SCALAR_BASES: dict = {
    "abs": np.abs,
    "relu": lambda x: np.maximum(x, 0.0),
    "linear": lambda x: np.asarray(x, dtype=np.float64),
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "softplus": _softplus,
}


def scalar_from_spec(spec) -> tuple:
    """Turn ``"abs"`` or ``{"base", "scale", "shift", "offset"}`` into ``(callable, lipschitz, spec)``.

    The function is ``scale * base(x - shift) + offset``.
    """
    if isinstance(spec, str):
        spec = {"base": spec}
    spec = dict(spec)
    base = spec.get("base", "abs")
    if base not in SCALAR_BASES:
        raise ValueError(f"unknown scalar function {base!r}; known: {sorted(SCALAR_BASES)}")
    g = SCALAR_BASES[base]
    scale = float(spec.get("scale", 1.0))
    shift = float(spec.get("shift", 0.0))
    offset = float(spec.get("offset", 0.0))

    def f(x, g=g, scale=scale, shift=shift, offset=offset):
        return scale * g(np.asarray(x, dtype=np.float64) - shift) + offset

    return f, abs(scale), spec


# -- catalog functions --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CatalogFunction:
    id: str
    din: int
    dout: int
    exact: Callable
    domain: ApproxSet
    lipschitz: float
    builder: Callable[[float], BuiltApproximator]
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain.dim != self.din:
            raise ValueError(f"{self.id}: approximation set has dimension {self.domain.dim}, expected {self.din}")

    def __call__(self, x):
        """Exact evaluation on a batch ``(n, din) -> (n, dout)``."""
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.din)
        return np.asarray(self.exact(x), dtype=np.float64).reshape(-1, self.dout)

    @property
    def at_zero_norm(self) -> float:
        return float(np.linalg.norm(self(np.zeros((1, self.din)))[0]))

    def build(self, delta: float) -> BuiltApproximator:
        return self.builder(delta)

    def __repr__(self):
        return f"CatalogFunction({self.id!r}, {self.din}->{self.dout}, L={self.lipschitz})"


def _componentwise(f):
    return lambda x: f(x[:, 0])[:, None]


def identity_function() -> CatalogFunction:
    return CatalogFunction("id", 1, 1, lambda x: x, All(1), 1.0,
                           lambda delta: builders.identity_builder(1), {"kind": "id"})


def max_function(d: int) -> CatalogFunction:
    return CatalogFunction(f"max:{d}", d, 1, lambda x: x.max(axis=1, keepdims=True), All(d), 1.0,
                           lambda delta: builders.max_skeleton(d), {"kind": "max", "d": d})


def square_function(r: float) -> CatalogFunction:
    return CatalogFunction("sq", 1, 1, lambda x: x * x, Box.symmetric(r), 2.0 * r,
                           lambda delta: builders.square_skeleton(r, delta), {"kind": "sq", "r": r})


def product_function(R: float) -> CatalogFunction:
    return CatalogFunction("pr", 2, 1, lambda x: (x[:, 0] * x[:, 1])[:, None], Box.symmetric(R, 2),
                           math.sqrt(8.0) * R, lambda delta: builders.product_skeleton(R, delta),
                           {"kind": "pr", "R": R})


def exp_function() -> CatalogFunction:
    return CatalogFunction("exp", 1, 1, lambda x: np.exp(-x), HalfLineNonneg(), 1.0,
                           builders.exp_skeleton, {"kind": "exp"})


def lipschitz_function(name: str, spec, lipschitz: float, radius: float | None = None,
                       q: float | None = None) -> CatalogFunction:
    """A scalar Lipschitz function, interpolated on ``[-radius, radius]`` or, with ``q``, weighted on R."""
    f, _, spec = scalar_from_spec(spec)
    L = float(lipschitz)
    meta = {"kind": "pwl", "function": spec, "lipschitz": L}
    if q is not None:
        meta["q"] = q
        return CatalogFunction(f"pwl:{name}", 1, 1, _componentwise(f), All(1), L,
                               lambda delta: builders.pwl_lipschitz_weighted(f, L, q, delta), meta)
    meta["radius"] = radius
    return CatalogFunction(f"pwl:{name}", 1, 1, _componentwise(f), Box.symmetric(radius), L,
                           lambda delta: builders.pwl_lipschitz(f, L, radius, delta), meta)


# -- catalogs --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Catalog:
    functions: Mapping[str, CatalogFunction]
    kappa: tuple
    threshold: float
    weight: WeightFunction = field(default_factory=Constant)
    variant: str = POLY
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        k0, k1, k2, k3 = self.kappa
        if k0 < 1 or k1 < 1 or k2 < 0 or k3 < 0:
            raise ValueError(f"invalid approximability constants {self.kappa}")
        if not 0 < self.threshold <= 1:
            raise ValueError("catalog threshold must lie in (0, 1]")
        if self.variant == LOG and self.threshold > 0.5:
            raise ValueError("log-approximable catalogs need a threshold <= 1/2")
        if self.variant not in (POLY, LOG):
            raise ValueError(f"unknown variant {self.variant!r}")

    def __getitem__(self, fid: str) -> CatalogFunction:
        if fid == "max" and "max:2" in self.functions:
            fid = "max:2"
        try:
            return self.functions[fid]
        except KeyError:
            raise KeyError(f"function {fid!r} is not in catalog {self.name!r}") from None

    def __contains__(self, fid):
        return fid in self.functions or (fid == "max" and "max:2" in self.functions)

    def __len__(self):
        return len(self.functions)

    @property
    def max_dim(self) -> int:
        return max(max(f.din, f.dout) for f in self.functions.values())

    def cost_bound(self, f: CatalogFunction, delta: float) -> float:
        """Parameter budget the catalog promises for ``f`` at accuracy ``delta``."""
        k0, k1, k2, k3 = self.kappa
        m = max(f.din, f.dout) ** k2
        if self.variant == LOG:
            return k1 * m * math.log2(1.0 / delta) ** k3
        return k1 * m * delta ** (-k3)

    def to_dict(self) -> dict:
        if self.name != "custom":
            return {"preset": self.name, "params": _jsonable(self.params)}
        return {
            "kappa": list(self.kappa),
            "threshold": self.threshold,
            "weight": self.weight.to_dict(),
            "variant": self.variant,
            "functions": [dict(f.spec, id=f.id) for f in self.functions.values()],
        }


def _jsonable(params):
    return {k: v for k, v in params.items() if not callable(v)}


def _require(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise ValueError(f"missing catalog parameters: {', '.join(missing)}")


def _lip_functions(params, K, radius=None, q=None) -> dict:
    specs = params.get("functions") or {"f": {"base": "abs", "scale": K}}
    lips = params.get("lipschitz", {})
    out = {}
    for name, spec in specs.items():
        L = float(lips.get(name, K))
        fn = lipschitz_function(name, spec, L, radius=radius, q=q)
        out[fn.id] = fn
    return out


def preset_catalog(name: str, params: Mapping | None = None, **kwargs) -> Catalog:
    """Construct one of the preset catalogs.

    ``lip`` (K, r), ``lip_weighted`` (K, q), ``lip_max`` (K, r, optional q and
    ``max_dims``), ``rbf`` (r), ``lip_prod`` (K, r, R), ``prod`` (r, d).  The
    Lipschitz family takes ``functions``: name -> scalar spec, and optional
    ``lipschitz``: name -> declared constant (default K).
    """
    params = dict(params or {}, **kwargs)
    id_fn = identity_function()
    if name == "lip":
        _require(params, "K", "r")
        K, r = float(params["K"]), float(params["r"])
        fns = {"id": id_fn, **_lip_functions(params, K, radius=r)}
        return Catalog(fns, (K, 3 * K * r + 4, 0, 1), 1.0, Constant(1.0), POLY, name, params)
    if name == "lip_weighted":
        _require(params, "K", "q")
        K, q = float(params["K"]), float(params["q"])
        if K < 1 or q <= 1:
            raise ValueError("lip_weighted needs K >= 1 and q > 1")
        t = q / (q - 1)
        fns = {"id": id_fn, **_lip_functions(params, K, q=q)}
        return Catalog(fns, (K, 5 * (2 * K) ** t, 0, t), 1.0, InversePoly(q), POLY, name, params)
    if name == "lip_max":
        _require(params, "K", "r")
        K, r = float(params["K"]), float(params["r"])
        dims = [int(d) for d in params.get("max_dims", range(2, 9))]
        q = params.get("q")
        if q is None:
            fns = {"id": id_fn, **_lip_functions(params, K, radius=r)}
            kappa, w = (K, 3 * K * r + 4, 3, 1), Constant(1.0)
        else:
            q = float(q)
            t = q / (q - 1)
            fns = {"id": id_fn, **_lip_functions(params, K, q=q)}
            kappa, w = (K, 5 * (2 * K) ** t, 3, t), InversePoly(q)
        for d in dims:
            fns[f"max:{d}"] = max_function(d)
        if "kappa" in params:
            kappa = tuple(float(v) for v in params["kappa"])
        return Catalog(fns, kappa, 1.0, w, POLY, name, params)
    if name == "rbf":
        _require(params, "r")
        r = float(params["r"])
        if r < 5:
            raise ValueError("rbf catalog needs r >= 5")
        fns = {"id": id_fn, "exp": exp_function(), "sq": square_function(r)}
        return Catalog(fns, (1, 4, 0, 1), r ** -3, Constant(1.0), POLY, name, params)
    if name == "lip_prod":
        _require(params, "K", "r", "R")
        K, r, R = float(params["K"]), float(params["r"]), float(params["R"])
        fns = {"id": id_fn, **_lip_functions(params, K, radius=r), "pr": product_function(R)}
        kappa = (K, max(3 * K * r + 4, 105 * R * R), 0, 1)
        return Catalog(fns, kappa, min(0.5, R * R / 2), Constant(1.0), POLY, name, params)
    if name == "prod":
        _require(params, "r", "d")
        r, d = float(params["r"]), int(params["d"])
        if r < 1:
            raise ValueError("prod catalog needs r >= 1")
        fns = {"id": id_fn, "pr": product_function(r ** d)}
        k1 = 208 if r == 1 else 320 * d + 208
        return Catalog(fns, (1, k1, 0, 1), min(0.5, 1.0 / r), Constant(1.0), LOG, name, params)
    raise ValueError(f"unknown catalog preset {name!r}")


PRESET_NAMES = ("lip", "lip_weighted", "lip_max", "rbf", "lip_prod", "prod")


def function_from_spec(spec: dict) -> CatalogFunction:
    """Inverse of ``CatalogFunction.spec`` for the built-in primitives."""
    fid = spec.get("id", "")
    kind = spec.get("kind") or fid.split(":")[0]
    if kind == "id":
        return identity_function()
    if kind == "max":
        d = int(spec.get("d", fid.split(":")[1] if ":" in fid else 2))
        return max_function(d)
    if kind == "sq":
        return square_function(float(spec["r"]))
    if kind == "pr":
        return product_function(float(spec["R"]))
    if kind == "exp":
        return exp_function()
    if kind == "pwl":
        name = fid.split(":", 1)[1] if ":" in fid else spec.get("name", "f")
        return lipschitz_function(name, spec.get("function", "abs"), float(spec["lipschitz"]),
                                  radius=spec.get("radius"), q=spec.get("q"))
    raise ValueError(f"unknown catalog function {fid or kind!r}")


def catalog_from_dict(data: Mapping) -> Catalog:
    """Parse catalog JSON: a preset reference or an inline list of function descriptors."""
    if "preset" in data:
        return preset_catalog(data["preset"], data.get("params", {}))
    try:
        fns = {}
        for spec in data["functions"]:
            fn = function_from_spec(spec)
            fns[fn.id] = fn
        return Catalog(
            fns,
            tuple(float(v) for v in data["kappa"]),
            float(data.get("threshold", 1.0)),
            WeightFunction.from_dict(data.get("weight", {})),
            data.get("variant", POLY),
        )
    except KeyError as exc:
        raise ValueError(f"catalog JSON is missing {exc}") from exc


# -- validation -----------------------------------------------------------------------

@dataclass
class ValidationReport:
    catalog: str
    entries: list

    @property
    def passed(self) -> bool:
        return all(e["passed"] for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e["passed"]]

    def to_dict(self):
        return {"catalog": self.catalog, "passed": self.passed, "entries": self.entries}


def _domain_samples(domain: ApproxSet, budget: int, seed: int, scale: float) -> np.ndarray:
    from .sampling import GridBox, HeavyTail, grid_points_per_dim

    lo, hi = domain.bounding_box()
    d = domain.dim
    if np.isfinite(lo).all() and np.isfinite(hi).all():
        return GridBox(tuple(lo), tuple(hi), grid_points_per_dim(d, budget)).points()
    reach = 10.0 * max(1.0, scale)
    glo = np.where(np.isfinite(lo), lo, -reach)
    ghi = np.where(np.isfinite(hi), hi, reach)
    grid = GridBox(tuple(glo), tuple(ghi), grid_points_per_dim(d, budget // 2)).points()
    tail = HeavyTail(d, budget // 2, seed, scale).points()
    tail = np.clip(tail, lo, hi)
    return np.vstack([grid, tail])


def _domain_pairs(domain: ApproxSet, n: int, seed: int, reach: float):
    from .sampling import lipschitz_pairs

    lo, hi = domain.bounding_box()
    lo = np.where(np.isfinite(lo), lo, -reach)
    hi = np.where(np.isfinite(hi), hi, reach)
    radius = float(max(np.abs(lo).max(), np.abs(hi).max()))
    x, y = lipschitz_pairs(domain.dim, n, radius, seed)
    return np.clip(x, lo, hi), np.clip(y, lo, hi)


ERROR_TOL = 1e-12
LIP_TOL = 1e-9


def validate_catalog(C: Catalog, delta_grid, sample_budget: int = 10_000, seed: int = 0,
                     functions=None) -> ValidationReport:
    """Empirically check the approximability claims of ``C`` at the given accuracies.

    Per function and accuracy: the exact function's sampled Lipschitz quotient on
    its approximation set, the builder's weighted error and global Lipschitz
    quotient, its parameter count against the catalog budget, and ``|f(0)|``.
    """
    from .sampling import difference_quotient, lipschitz_pairs

    if len(C) == 0:
        raise ValueError("cannot validate an empty catalog")
    k0 = C.kappa[0]
    entries = []
    ids = functions or list(C.functions)
    for fi, fid in enumerate(ids):
        f = C[fid]
        fseed = seed + 7919 * fi
        x, y = _domain_pairs(f.domain, sample_budget, fseed, 10.0)
        lip_exact = difference_quotient(f(x), f(y), x, y)
        at_zero = f.at_zero_norm
        for delta in delta_grid:
            if not 0 < delta <= C.threshold * (1 + 1e-12):
                raise ValueError(f"accuracy {delta} outside (0, {C.threshold}]")
            built = f.build(delta)
            scale = float(built.notes.get("r", 1.0))
            pts = _domain_samples(f.domain, sample_budget, fseed + 1, scale)
            diff = np.linalg.norm(f(pts) - built.skeleton(pts).reshape(len(pts), -1), axis=1)
            weights = C.weight(np.linalg.norm(pts, axis=1))
            err = float((weights * diff).max())

            lo, hi = f.domain.bounding_box()
            finite = np.concatenate([np.abs(lo[np.isfinite(lo)]), np.abs(hi[np.isfinite(hi)]), [1.0]])
            reach = 10.0 * max(float(finite.max()), scale)
            bx, by = lipschitz_pairs(f.din, sample_budget, reach, fseed + 2)
            lip_built = difference_quotient(built.skeleton(bx), built.skeleton(by), bx, by)

            budget = C.cost_bound(f, delta)
            entry = {
                "function": f.id,
                "delta": float(delta),
                "lipschitz_cert": f.lipschitz,
                "lipschitz_exact_measured": lip_exact,
                "lipschitz_exact_pass": lip_exact <= f.lipschitz + LIP_TOL,
                "lipschitz_builder_measured": lip_built,
                "lipschitz_builder_pass": lip_built <= f.lipschitz + LIP_TOL
                and built.lipschitz <= f.lipschitz + LIP_TOL,
                "error_measured": err,
                "error_pass": err <= delta + ERROR_TOL,
                "params": built.param_count,
                "param_budget": budget,
                "params_pass": built.param_count <= budget,
                "at_zero_norm": at_zero,
                "at_zero_pass": at_zero <= k0 + 1e-12,
            }
            entry["passed"] = all(v for k, v in entry.items() if k.endswith("_pass"))
            entries.append(entry)
    return ValidationReport(C.name, entries)
