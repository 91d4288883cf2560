"""Ready-made catalog networks for eight function families, with their stated size bounds.

Each preset bundles the network, its catalog, a box on which the compiled
network is guaranteed to be accurate, the closed-form parameter bound for the
family and an independent oracle formula used to cross-check the exact
realization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .catalog import LOG, Catalog, preset_catalog
from .compiler import CompiledNetwork, compile, compile_log
from .network import CatalogNetwork, full_lip


class PresetError(ValueError):
    """Preset parameters outside the family's admissible range."""


@dataclass(frozen=True, eq=False)
class ApplicationPreset:
    name: str
    params: dict
    network: CatalogNetwork
    catalog: Catalog
    domain_box: tuple | None
    oracle: Callable
    bound: Callable
    prop_lip: float | None
    eps_max: float
    low_dim: int | None = None
    notes: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return int(self.params["d"])

    def check_epsilon(self, epsilon: float) -> None:
        if not 0 < epsilon <= self.eps_max:
            raise PresetError(f"{self.name}: epsilon must lie in (0, {self.eps_max:g}], got {epsilon}")

    def prop_bound(self, epsilon: float) -> float | None:
        """The family's parameter bound at accuracy ``epsilon`` (``None`` where none is stated)."""
        self.check_epsilon(epsilon)
        return self.bound(epsilon)

    def compile(self, epsilon: float) -> CompiledNetwork:
        self.check_epsilon(epsilon)
        if self.catalog.variant == LOG:
            return compile_log(self.network, epsilon, low_dim=self.low_dim)
        return compile(self.network, epsilon, low_dim=self.low_dim)

    def lip_consistent(self) -> bool:
        """The network's certified constant does not exceed the family's stated one."""
        return self.prop_lip is None or full_lip(self.network) <= self.prop_lip * (1 + 1e-9)


# -- helpers ------------------------------------------------------------------------------

def _abs_spec(scale: float, shift: float, offset: float = 0.0) -> dict:
    return {"base": "abs", "scale": float(scale), "shift": float(shift), "offset": float(offset)}


def _eval_spec(spec: dict, x):
    return spec["scale"] * np.abs(np.asarray(x, dtype=np.float64) - spec["shift"]) + spec["offset"]


def _centers(seed: int, n: int) -> list:
    return [float(c) for c in np.random.default_rng(seed).uniform(-1.0, 1.0, n)]


def _get(params: dict, key: str, default=None, cast=float):
    if key in params:
        return cast(params[key])
    if default is None:
        raise PresetError(f"missing parameter {key!r}")
    return cast(default)


def _need(cond: bool, msg: str):
    if not cond:
        raise PresetError(msg)


def _sum_layers(d: int, names: list, outer: str = "id") -> list:
    return [(np.eye(d), np.zeros(d), names), (np.ones((1, d)), np.zeros(1), [outer])]


def _chain_layers(d: int, first: list, joiner: str, second: list) -> list:
    """``first`` blockwise, then alternately join two entries and map the joined value."""
    layers = [(np.eye(d), np.zeros(d), first)]
    width = d
    for k in range(2, d + 1):
        layers.append((np.eye(width), np.zeros(width), [joiner] + ["id"] * (width - 2)))
        width -= 1
        layers.append((np.eye(width), np.zeros(width), [second[k - 2]] + ["id"] * (width - 1)))
    return layers


# -- presets ------------------------------------------------------------------------------

def _sum_lipschitz(p: dict) -> ApplicationPreset:
    d, K, r = _get(p, "d", cast=int), _get(p, "K", 1.0), _get(p, "r", 1.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 1 and K >= 1 and r >= 1, "sum_lipschitz needs d >= 1, K >= 1, r >= 1")
    specs = {f"f{i + 1}": _abs_spec(K, c) for i, c in enumerate(_centers(seed, d))}
    cat = preset_catalog("lip", {"K": K, "r": r, "functions": specs})
    xi = CatalogNetwork(_sum_layers(d, [f"pwl:f{i + 1}" for i in range(d)]), cat)

    def oracle(x):
        x = np.atleast_2d(x)
        return sum(_eval_spec(specs[f"f{i + 1}"], x[:, i]) for i in range(d))[:, None]

    return ApplicationPreset(
        "sum_lipschitz", dict(d=d, K=K, r=r, seed=seed), xi, cat, ((-r,) * d, (r,) * d), oracle,
        lambda eps: 4 / 7 * 1e3 * K ** 2 * r * d ** 5 / eps, math.sqrt(d) * K, 1.0, low_dim=1,
    )


def _composed_sum(p: dict) -> ApplicationPreset:
    d, K, r = _get(p, "d", cast=int), _get(p, "K", 1.0), _get(p, "r", 1.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 1 and K >= 1 and r >= 1, "composed_sum needs d >= 1, K >= 1, r >= 1")
    cs = _centers(seed, d + 1)
    specs = {f"f{i}": _abs_spec(K, c) for i, c in enumerate(cs)}
    cat = preset_catalog("lip", {"K": K, "r": d * K * (r + 1), "functions": specs})
    xi = CatalogNetwork(_sum_layers(d, [f"pwl:f{i + 1}" for i in range(d)], "pwl:f0"), cat)

    def oracle(x):
        x = np.atleast_2d(x)
        inner = sum(_eval_spec(specs[f"f{i + 1}"], x[:, i]) for i in range(d))
        return _eval_spec(specs["f0"], inner)[:, None]

    return ApplicationPreset(
        "composed_sum", dict(d=d, K=K, r=r, seed=seed), xi, cat, ((-r,) * d, (r,) * d), oracle,
        lambda eps: 5 / 6 * 1e3 * K ** 4 * r * d ** 6 / eps, math.sqrt(d) * K ** 2, 1.0, low_dim=1,
    )


def _vanishing_specs(seed: int, d: int, K: float) -> tuple:
    """``f_i = K(|x - c_i| - |c_i|)`` and ``g_k = |x - c_k| - |c_k|``: all vanish at the origin."""
    cs = _centers(seed, 2 * d - 1)
    f = {f"f{i + 1}": _abs_spec(K, c, -K * abs(c)) for i, c in enumerate(cs[:d])}
    g = {f"g{k}": _abs_spec(1.0, c, -abs(c)) for k, c in zip(range(2, d + 1), cs[d:])}
    return f, g


def _max_chain(p: dict) -> ApplicationPreset:
    d, K, r = _get(p, "d", cast=int), _get(p, "K", 1.0), _get(p, "r", 1.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 2 and K >= 1 and r >= 1, "max_chain needs d >= 2, K >= 1, r >= 1")
    f, g = _vanishing_specs(seed, d, K)
    cat = preset_catalog("lip_max", {
        "K": K, "r": K * (r + 1), "functions": {**f, **g}, "max_dims": [2],
        "kappa": [K, 13 * K * K * r, 0, 1],
    })
    xi = CatalogNetwork(_chain_layers(d, [f"pwl:f{i + 1}" for i in range(d)], "max:2",
                                      [f"pwl:g{k}" for k in range(2, d + 1)]), cat)

    def oracle(x):
        x = np.atleast_2d(x)
        acc = _eval_spec(f["f1"], x[:, 0])
        for k in range(2, d + 1):
            acc = _eval_spec(g[f"g{k}"], np.maximum(acc, _eval_spec(f[f"f{k}"], x[:, k - 1])))
        return acc[:, None]

    return ApplicationPreset(
        "max_chain", dict(d=d, K=K, r=r, seed=seed), xi, cat, ((-r,) * d, (r,) * d), oracle,
        lambda eps: 3 / 7 * 1e4 * K ** 3 * r * d ** 6.5 / eps, None, 1.0, low_dim=2,
    )


def _weighted_sum(p: dict) -> ApplicationPreset:
    d, K, q = _get(p, "d", cast=int), _get(p, "K", 1.0), _get(p, "q", 2.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 1 and K >= 1 and q > 1, "weighted_sum needs d >= 1, K >= 1, q > 1")
    specs = {f"f{i + 1}": _abs_spec(K, c) for i, c in enumerate(_centers(seed, d))}
    cat = preset_catalog("lip_weighted", {"K": K, "q": q, "functions": specs})
    xi = CatalogNetwork(_sum_layers(d, [f"pwl:f{i + 1}" for i in range(d)]), cat)
    t = q / (q - 1)

    def oracle(x):
        x = np.atleast_2d(x)
        return sum(_eval_spec(specs[f"f{i + 1}"], x[:, i]) for i in range(d))[:, None]

    def bound(eps):
        e = t * (q + 1)
        return 2 / 9 * 1e3 * 2 ** (3 * e) * K ** (2 * e) * d ** (e + 4) * eps ** (-t)

    return ApplicationPreset(
        "weighted_sum", dict(d=d, K=K, q=q, seed=seed), xi, cat, None, oracle, bound,
        math.sqrt(d) * K, 1.0, low_dim=1,
    )


def _product_chain(p: dict) -> ApplicationPreset:
    d, K = _get(p, "d", cast=int), _get(p, "K", 1.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 2 and K >= 1, "product_chain needs d >= 2, K >= 1")
    R = 1 / math.sqrt(8)
    r = R / K
    f, g = _vanishing_specs(seed, d, K)
    cat = preset_catalog("lip_prod", {"K": K, "r": R, "R": R, "functions": {**f, **g}})
    xi = CatalogNetwork(_chain_layers(d, [f"pwl:f{i + 1}" for i in range(d)], "pr",
                                      [f"pwl:g{k}" for k in range(2, d + 1)]), cat)

    def oracle(x):
        x = np.atleast_2d(x)
        acc = _eval_spec(f["f1"], x[:, 0])
        for k in range(2, d + 1):
            acc = _eval_spec(g[f"g{k}"], acc * _eval_spec(f[f"f{k}"], x[:, k - 1]))
        return acc[:, None]

    return ApplicationPreset(
        "product_chain", dict(d=d, K=K, seed=seed), xi, cat, ((-r,) * d, (r,) * d), oracle,
        lambda eps: 3 / 7 * 1e4 * K ** 2 * d ** 6.5 / eps, None, 1 / 16, low_dim=2,
    )


def _monomial_product(p: dict) -> ApplicationPreset:
    d, r = _get(p, "d", cast=int), _get(p, "r", 1.0)
    _need(d >= 2 and r >= 1, "monomial_product needs d >= 2, r >= 1")
    cat = preset_catalog("prod", {"r": r, "d": d})
    layers = []
    for k in range(1, d):
        w = d - k + 1
        layers.append((np.eye(w), np.zeros(w), ["pr"] + ["id"] * (w - 2)))
    xi = CatalogNetwork(layers, cat)

    def oracle(x):
        return np.prod(np.atleast_2d(x), axis=1)[:, None]

    def bound(eps):
        if r == 1:
            return 1 / 3 * 1e5 * math.log2(d) * d ** 6 * math.log2(1 / eps)
        if r >= 2:
            return 2 / 5 * 1e5 * math.log2(r) * math.log2(d) * d ** 8 * math.log2(1 / eps)
        return None

    return ApplicationPreset(
        "monomial_product", dict(d=d, r=r), xi, cat, ((-r,) * d, (r,) * d), oracle, bound,
        8 ** ((d - 1) / 2) * r ** (d * (d - 1)), min(0.5, cat.threshold), low_dim=2,
    )


def _ridge(p: dict) -> ApplicationPreset:
    d, K, r, S = _get(p, "d", cast=int), _get(p, "K", 1.0), _get(p, "r", 1.0), _get(p, "S", 2.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 1 and K >= 1 and r >= 1 and S >= 1, "ridge needs d >= 1 and K, r, S >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-S, S, d)
    c = float(rng.uniform(-1, 1))
    spec = _abs_spec(K, c)
    cat = preset_catalog("lip", {"K": K, "r": d * r * S, "functions": {"f": spec}})
    xi = CatalogNetwork([(theta[None, :], np.zeros(1), ["pwl:f"])], cat)

    def oracle(x):
        return _eval_spec(spec, np.atleast_2d(x) @ theta)[:, None]

    return ApplicationPreset(
        "ridge", dict(d=d, K=K, r=r, S=S, seed=seed), xi, cat, ((-r,) * d, (r,) * d), oracle,
        lambda eps: 1 / 7 * 1e3 * K ** 2 * r * S ** 2 * d ** 6 / eps, math.sqrt(d) * S * K, 1.0,
        low_dim=1, notes={"theta": theta.tolist()},
    )


def _gaussian_rbf(p: dict) -> ApplicationPreset:
    d, N = _get(p, "d", cast=int), _get(p, "N", 2, int)
    r, S = _get(p, "r", 1.0), _get(p, "S", 4.0)
    seed = _get(p, "seed", 0, int)
    _need(d >= 1 and N >= 1 and r >= 1 and S >= 1, "gaussian_rbf needs d, N >= 1 and r, S >= 1")
    _need(r + S >= 5, "gaussian_rbf needs r + S >= 5")
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.1, 1.0, N)
    u = rng.uniform(-1.0, 1.0, N)
    v = rng.uniform(-1.0, 1.0, (N, d))
    cat = preset_catalog("rbf", {"r": r + S})
    U = np.vstack([np.eye(d)] * N)
    V = np.zeros((N, N * d))
    for i in range(N):
        V[i, i * d:(i + 1) * d] = alpha[i]
    xi = CatalogNetwork([
        (U, -v.ravel(), ["sq"] * (N * d)),
        (V, np.zeros(N), ["exp"] * N),
        (u[None, :], np.zeros(1), ["id"]),
    ], cat)

    def oracle(x):
        x = np.atleast_2d(x)
        sq = ((x[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
        return (np.exp(-alpha[None, :] * sq) @ u)[:, None]

    return ApplicationPreset(
        "gaussian_rbf", dict(d=d, N=N, r=r, S=S, seed=seed), xi, cat, ((-r,) * d, (r,) * d), oracle,
        lambda eps: 1 / 6 * 1e4 * (r + S) * S ** 2 * N ** 5.5 * d ** 5 / eps, None, (r + S) ** -3,
        low_dim=1, notes={"alpha": alpha.tolist(), "u": u.tolist(), "v": v.tolist()},
    )


PRESETS = {
    "sum_lipschitz": _sum_lipschitz,
    "composed_sum": _composed_sum,
    "max_chain": _max_chain,
    "weighted_sum": _weighted_sum,
    "product_chain": _product_chain,
    "monomial_product": _monomial_product,
    "ridge": _ridge,
    "gaussian_rbf": _gaussian_rbf,
}


def build_application(name: str, params: dict | None = None, **kwargs) -> ApplicationPreset:
    """Build a preset by name; unknown names and out-of-range parameters raise :class:`PresetError`."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise PresetError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return factory(dict(params or {}, **kwargs))


__all__ = ["ApplicationPreset", "PRESETS", "PresetError", "build_application"]
