"""Compile catalog networks into certified ReLU skeletons.

Every catalog layer ``N_k`` is replaced by a diagonal parallelization of the
primitive builders at per-function accuracy ``eta / sqrt(n_k)``.  That block is
then wrapped between identity networks and concatenated with the affine map
``(V_k, b_k)``:

    phi = rho_D o chi_D o ... o rho_1 o chi_1,   rho_k = I o psi_k o I.

The accuracy ``eta`` is chosen from the structural quantities ``D, W, B, Lambda``
and the weight's decay constants, which gives weighted error at most ``epsilon``
on the network's domain.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import algebra
from .builders import BuiltApproximator
from .catalog import LOG, POLY, Catalog, catalog_from_dict
from .network import CatalogNetwork, NetworkQuantities, quantities
from .skeleton import MAX_ENTRIES, ResourceLimitError, Skeleton, affine_skeleton

ETA_SHRINK = 1.0 - 1e-12
RELU_REQ = algebra.identity_requirement()


class CompileError(ValueError):
    """The network, catalog and accuracy do not meet the compiler's preconditions."""


@dataclass(frozen=True)
class Variant:
    """Which parameter bound certifies the compiled network.

    ``kind`` is ``"poly"`` or ``"log"``; ``low_dim`` (if set) is the dimension ``d``
    bounding every block's input and output, which trades ``W^2`` for ``d^2``.
    """

    kind: str = POLY
    low_dim: int | None = None

    def __post_init__(self):
        if self.kind not in (POLY, LOG):
            raise ValueError(f"unknown variant {self.kind!r}")
        if self.low_dim is not None and self.low_dim < 1:
            raise ValueError("low_dim must be a positive integer")

    def __str__(self):
        return self.kind if self.low_dim is None else f"{self.kind}_low_dim:{self.low_dim}"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        kind, _, d = text.partition("_low_dim:")
        return cls(kind, int(d) if d else None)


def thread_count() -> int:
    """Worker threads from ``CATNET_THREADS`` (``0`` or unset means one per CPU)."""
    raw = os.environ.get("CATNET_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise CompileError(f"CATNET_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise CompileError("CATNET_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


# -- accuracy budget ---------------------------------------------------------------------

def eta_for(quant: NetworkQuantities, catalog: Catalog, epsilon: float) -> tuple:
    """``(eta, clamped)``: the per-layer accuracy and whether the threshold capped it."""
    s1, s2 = catalog.weight.decay
    k0 = catalog.kappa[0]
    denom = (
        s1 * (4 * k0 * quant.translation) ** s2
        * (quant.depth * quant.tech_lip) ** (s2 + 1)
        * quant.width ** (s2 / 2)
    )
    eta = epsilon / denom * ETA_SHRINK
    if eta > catalog.threshold:
        return catalog.threshold, True
    return eta, False


def _used_dim(xi: CatalogNetwork) -> int:
    return max(max(f.din, f.dout) for layer in xi.layers for f in layer.funcs)


# -- layers -----------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerApproximation:
    skeleton: Skeleton
    members: tuple
    delta: float

    @property
    def lipschitz(self) -> float:
        return max(m.lipschitz for m in self.members)


def _preflight(catalog: Catalog, f, delta: float) -> None:
    cost = catalog.cost_bound(f, min(delta, 1.0))
    if cost > MAX_ENTRIES:
        raise ResourceLimitError(
            f"{f.id} at accuracy {delta:.3g} may need up to {cost:.3g} parameters, "
            f"above the dense storage budget of {MAX_ENTRIES:,}"
        )


def layer_approximator(xi: CatalogNetwork, k: int, delta: float,
                       req: algebra.IdentityRequirement = RELU_REQ) -> LayerApproximation:
    """Approximate ``N_k`` to accuracy ``delta`` by diagonally parallelizing its blocks."""
    catalog = xi.catalog
    if not 0 < delta <= catalog.threshold:
        raise CompileError(f"delta={delta} outside (0, {catalog.threshold}]")
    funcs = xi.layers[k - 1].funcs
    per = delta / math.sqrt(len(funcs))
    for f in funcs:
        _preflight(catalog, f, per)
    members = tuple(f.build(per) for f in funcs)
    psi = algebra.diag_parallel(req, *(m.skeleton for m in members))
    return LayerApproximation(psi, members, delta)


def layer_bound(xi: CatalogNetwork, k: int, delta: float, low_dim: int | None = None,
                c: int = 2) -> float:
    """Closed-form parameter bound for :func:`layer_approximator` on a polynomial-rate catalog."""
    k0, k1, k2, k3 = xi.catalog.kappa
    dims = xi.dims
    m = max(dims[2 * k - 1], dims[2 * k])
    if low_dim is None:
        return 11 / 16 * k1 * c * c * m ** (k2 + k3 / 2 + 5) * delta ** (-k3)
    return 11 / 16 * k1 * c * c * low_dim ** 2 * m ** (k2 + k3 / 2 + 3) * delta ** (-k3)


# -- bounds -----------------------------------------------------------------------------

def theoretical_bound(quant: NetworkQuantities, catalog: Catalog, epsilon: float,
                      variant: Variant | str = Variant(), c: int = 2) -> float:
    """Evaluate the compiler's parameter bound for the given structural quantities."""
    if isinstance(variant, str):
        variant = Variant.parse(variant)
    k0, k1, k2, k3 = catalog.kappa
    s1, s2 = catalog.weight.decay
    B, Lam, D, W = quant.translation, quant.tech_lip, quant.depth, quant.width
    if variant.kind == LOG:
        arg = s1 * (4 * k0 * B) ** s2 * (Lam * D * math.sqrt(W)) ** (s2 + 1) / epsilon
        logterm = math.log2(arg) ** k3
        if variant.low_dim is None:
            return 81 / 32 * c ** 3 * k1 * D * W ** (k2 + 6) * logterm
        return 81 / 32 * c ** 3 * k1 * variant.low_dim ** 2 * D * W ** (k2 + 4) * logterm
    if k3 == 0:
        raise CompileError("the polynomial bound needs kappa3 > 0")
    t = k3 * (s2 + 1)
    C = 81 / 32 * c ** 3 * (4 * k0) ** (t - k3) * k1 * s1 ** k3
    common = C * B ** (t - k3) * Lam ** t * D ** (t + 1) * epsilon ** (-k3)
    if variant.low_dim is None:
        return common * W ** (k2 + t / 2 + 6)
    return common * variant.low_dim ** 2 * W ** (k2 + t / 2 + 4)


def predicted_dims(xi: CatalogNetwork, layers, c: int = 2) -> tuple:
    """Architecture of the compiled skeleton implied by the composition rules."""
    dims = xi.dims
    out = [dims[0]]
    for k, la in enumerate(layers, start=1):
        out.append(c * dims[2 * k - 1])
        out.extend(la.skeleton.dims[1:-1])
        out.append(c * dims[2 * k])
    out.append(dims[-1])
    return tuple(out)


# -- compiled networks -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CompiledNetwork:
    skeleton: Skeleton
    epsilon: float
    eta: float
    eta_clamped: bool
    lipschitz_cert: float
    param_bound: float
    variant: Variant
    quantities: NetworkQuantities
    source: CatalogNetwork
    notes: dict = field(default_factory=dict)

    @property
    def params_actual(self) -> int:
        return self.skeleton.param_count

    @property
    def within_bound(self) -> bool:
        return self.params_actual <= math.ceil(self.param_bound)

    def certificate(self) -> dict:
        q = self.quantities
        return {
            "epsilon": self.epsilon,
            "eta": self.eta,
            "eta_clamped": self.eta_clamped,
            "lipschitz": self.lipschitz_cert,
            "param_bound": self.param_bound,
            "params_actual": self.params_actual,
            "variant": str(self.variant),
            "quantities": {"D": q.depth, "W": q.width, "L": q.full_lip, "B": q.translation,
                           "Lambda": q.tech_lip},
        }

    def to_dict(self) -> dict:
        out = self.skeleton.to_dict()
        out["certificate"] = self.certificate()
        out["source"] = {"network": self.source.to_dict(), "catalog": self.source.catalog.to_dict()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "CompiledNetwork":
        """Load a compiled network; the certificate is taken as written, not recomputed."""
        try:
            cert = data["certificate"]
            src = data["source"]
            catalog = catalog_from_dict(src["catalog"])
            xi = CatalogNetwork.from_dict(src["network"], catalog)
            skeleton = Skeleton.from_dict(data)
            q = quantities(xi)
            return cls(
                skeleton=skeleton,
                epsilon=float(cert["epsilon"]),
                eta=float(cert["eta"]),
                eta_clamped=bool(cert.get("eta_clamped", False)),
                lipschitz_cert=float(cert["lipschitz"]),
                param_bound=float(cert["param_bound"]),
                variant=Variant.parse(cert.get("variant", POLY)),
                quantities=q,
                source=xi,
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed compiled network JSON: missing {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "CompiledNetwork":
        return cls.from_dict(json.loads(text))


def _assemble(xi: CatalogNetwork, layers, req) -> Skeleton:
    phi = None
    for layer, la in zip(xi.layers, layers):
        chi = affine_skeleton(layer.matrix, layer.bias)
        step = algebra.concat(algebra.sandwich(la.skeleton, req), chi)
        phi = step if phi is None else algebra.concat(step, phi)
    return phi


def _compile(xi: CatalogNetwork, epsilon: float, req, variant: Variant) -> CompiledNetwork:
    catalog = xi.catalog
    if not req.activation.is_relu:
        raise CompileError("the catalog builders produce ReLU skeletons; use the ReLU identity requirement")
    if variant.low_dim is not None and variant.low_dim < _used_dim(xi):
        raise CompileError(f"low_dim={variant.low_dim} is below the block dimension {_used_dim(xi)}")
    quant = quantities(xi)
    bound = theoretical_bound(quant, catalog, epsilon, variant, req.c)
    eta, clamped = eta_for(quant, catalog, epsilon)
    workers = min(thread_count(), xi.depth)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            layers = list(pool.map(lambda k: layer_approximator(xi, k, eta, req), range(1, xi.depth + 1)))
    else:
        layers = [layer_approximator(xi, k, eta, req) for k in range(1, xi.depth + 1)]
    phi = _assemble(xi, layers, req)
    notes = {"layer_params": [la.skeleton.param_count for la in layers],
             "predicted_dims": predicted_dims(xi, layers, req.c)}
    return CompiledNetwork(phi, float(epsilon), float(eta), clamped, quant.full_lip, float(bound),
                           variant, quant, xi, notes)


def compile(xi: CatalogNetwork, epsilon: float, req: algebra.IdentityRequirement = RELU_REQ,
            low_dim: int | None = None) -> CompiledNetwork:
    """Compile a network over a polynomial-rate catalog to weighted accuracy ``epsilon``."""
    if not 0 < epsilon <= 1:
        raise CompileError(f"epsilon must lie in (0, 1], got {epsilon}")
    if xi.catalog.variant != POLY:
        raise CompileError("compile needs a polynomial-rate catalog; use compile_log")
    if xi.catalog.kappa[3] == 0:
        raise CompileError("the polynomial bound needs kappa3 > 0")
    return _compile(xi, epsilon, req, Variant(POLY, low_dim))


def compile_log(xi: CatalogNetwork, epsilon: float, req: algebra.IdentityRequirement = RELU_REQ,
                low_dim: int | None = None) -> CompiledNetwork:
    """Compile a network over a log-rate catalog; the parameter bound grows like ``log(1/epsilon)``."""
    if not 0 < epsilon <= 0.5:
        raise CompileError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    if xi.catalog.variant != LOG:
        raise CompileError("compile_log needs a log-rate catalog")
    return _compile(xi, epsilon, req, Variant(LOG, low_dim))


def compile_auto(xi: CatalogNetwork, epsilon: float, low_dim: int | None = None) -> CompiledNetwork:
    """Dispatch on the catalog's variant."""
    if xi.catalog.variant == LOG:
        return compile_log(xi, epsilon, low_dim=low_dim)
    return compile(xi, epsilon, low_dim=low_dim)


__all__ = [
    "CompileError", "CompiledNetwork", "LayerApproximation", "Variant", "compile", "compile_auto",
    "compile_log", "eta_for", "layer_approximator", "layer_bound", "predicted_dims",
    "theoretical_bound", "thread_count",
]
