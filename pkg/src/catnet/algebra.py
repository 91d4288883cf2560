"""Composition calculus over skeletons.

Concatenation, standard and diagonal parallelization, identity networks,
depth extension and identity-sandwiched concatenation.  Every construction
is explicit, so parameter counts can be compared against the closed-form
bounds exactly (see the ``*_bound`` helpers, which return ``Fraction``).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .skeleton import RELU, Activation, NoIdentityError, ShapeError, Skeleton, check_budget


@dataclass(frozen=True)
class IdentityRequirement:
    """A depth-2 skeleton of width at most ``c`` realizing the scalar identity."""

    c: int
    id_skeleton: Skeleton
    activation: Activation = RELU

    def __post_init__(self):
        if self.c < 2:
            raise ValueError("identity requirement needs c >= 2")
        dims = self.id_skeleton.dims
        if len(dims) != 3 or dims[0] != 1 or dims[2] != 1 or dims[1] > self.c:
            raise ValueError(f"identity skeleton has invalid architecture {dims}")


def identity_requirement(a: Activation = RELU) -> IdentityRequirement:
    """The 2-identity requirement ``a(x) - a(-x) = (r + s) x`` of a generalized ReLU."""
    total = a.r + a.s
    if total == 0:
        raise NoIdentityError("activation with r + s = 0 has no identity network")
    I = Skeleton([
        (np.array([[1.0], [-1.0]]), np.zeros(2)),
        (np.array([[1.0, -1.0]]) / total, np.zeros(1)),
    ])
    return IdentityRequirement(c=2, id_skeleton=I, activation=a)


def id_d(req: IdentityRequirement, d: int) -> Skeleton:
    """``d``-fold parallelization of the identity network."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return req.id_skeleton
    return parallel(*([req.id_skeleton] * d))


def affine_identity(d: int) -> Skeleton:
    """Depth-1 skeleton realizing the identity on R^d."""
    return Skeleton([(np.eye(d), np.zeros(d))])


def concat(phi2: Skeleton, phi1: Skeleton) -> Skeleton:
    """Skeleton realizing ``R(phi2) o R(phi1)``; the boundary layers are merged."""
    if phi1.out_dim != phi2.in_dim:
        raise ShapeError(
            f"cannot concatenate: inner network emits {phi1.out_dim}, outer expects {phi2.in_dim}"
        )
    V, b = phi1.layers[-1]
    W, c = phi2.layers[0]
    check_budget([(W.shape[0], V.shape[1])])
    merged = (W @ V, W @ b + c)
    return Skeleton(list(phi1.layers[:-1]) + [merged] + list(phi2.layers[1:]))


def concat_all(*phis: Skeleton) -> Skeleton:
    """``concat_all(f, g, h)`` realizes ``f o g o h`` (outermost first)."""
    out = phis[-1]
    for phi in reversed(phis[:-1]):
        out = concat(phi, out)
    return out


def parallel(*phis: Skeleton) -> Skeleton:
    """Block-diagonal stacking of skeletons with equal depth."""
    if not phis:
        raise ValueError("parallel needs at least one skeleton")
    D = phis[0].depth
    if any(p.depth != D for p in phis):
        raise ShapeError(f"parallel requires equal depths, got {[p.depth for p in phis]}")
    if len(phis) == 1:
        return phis[0]
    check_budget([
        (sum(p.dims[k + 1] for p in phis), sum(p.dims[k] for p in phis)) for k in range(D)
    ])
    layers = []
    for k in range(D):
        layers.append((
            block_diag(*[p.layers[k][0] for p in phis]),
            np.concatenate([p.layers[k][1] for p in phis]),
        ))
    return Skeleton(layers)


def identity_chain(req: IdentityRequirement, d: int, depth: int) -> Skeleton:
    """Identity on R^d with the requested depth: affine for depth 1, else chained ``I_d``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth == 1:
        return affine_identity(d)
    I = id_d(req, d)
    out = I
    for _ in range(depth - 2):
        out = concat(I, out)
    return out


def extend_depth(phi: Skeleton, target: int, req: IdentityRequirement) -> Skeleton:
    """Append identity networks on the output side until ``depth == target``."""
    if target < phi.depth:
        raise ValueError(f"target depth {target} is below the current depth {phi.depth}")
    if target == phi.depth:
        return phi
    # Concatenating with an identity chain of depth k+1 adds k layers.
    return concat(identity_chain(req, phi.out_dim, target - phi.depth + 1), phi)


def diag_parallel(req: IdentityRequirement, *phis: Skeleton) -> Skeleton:
    """Parallelization of skeletons of arbitrary depths by shifting them apart.

    Member ``i`` runs during its own block of ``D_i`` layers; outputs of the
    members already processed and inputs of the members still pending are
    carried through that block by identity networks.  Between blocks the
    carried state passes through an identity network, so the total depth is
    the sum of the member depths.
    """
    if not phis:
        raise ValueError("diag_parallel needs at least one skeleton")
    n = len(phis)
    if n == 1:
        return phis[0]
    outs = [p.out_dim for p in phis]
    ins = [p.in_dim for p in phis]
    result = None
    for i, phi in enumerate(phis):
        done = sum(outs[:i])
        pending = sum(ins[i + 1:])
        parts = []
        if done:
            parts.append(identity_chain(req, done, phi.depth))
        parts.append(phi)
        if pending:
            parts.append(identity_chain(req, pending, phi.depth))
        sigma = parallel(*parts)
        if result is None:
            result = sigma
        else:
            result = concat(sigma, concat(id_d(req, result.out_dim), result))
    return result


def sandwich(phi: Skeleton, req: IdentityRequirement) -> Skeleton:
    """``I_out o phi o I_in``: trades a few neurons for a controlled parameter count."""
    return concat(id_d(req, phi.out_dim), concat(phi, id_d(req, phi.in_dim)))


# -- closed-form accounting ---------------------------------------------------

def concat_param_count(phi2: Skeleton, phi1: Skeleton) -> int:
    """Exact parameter count of ``concat(phi2, phi1)`` from the two architectures."""
    d1 = phi1.dims
    d2 = phi2.dims
    D1 = phi1.depth
    return (
        phi1.param_count + phi2.param_count
        + d2[1] * d1[D1 - 1]
        - d2[0] * d2[1]
        - d1[D1] * (d1[D1 - 1] + 1)
    )


def diag_parallel_bound(c: int, phis: Sequence[Skeleton]) -> Fraction:
    """Upper bound ``(11/16 c^2 l^2 n^2 - 1) * sum P(phi_j)``."""
    n = len(phis)
    l = max(max(p.in_dim, p.out_dim) for p in phis)
    return (Fraction(11, 16) * c * c * l * l * n * n - 1) * sum(p.param_count for p in phis)


def diag_parallel_dims(c: int, phis: Sequence[Skeleton]) -> tuple:
    """Architecture ``(L_0, ..., L_{E_n})`` of the diagonal parallelization (``n >= 2``)."""
    n = len(phis)
    outs = [p.out_dim for p in phis]
    ins = [p.in_dim for p in phis]
    S = [sum(outs[:i]) for i in range(n + 1)]
    T = [sum(ins[i:]) for i in range(n)] + [0]
    ci = [1] + [c] * (n - 1) + [1]
    dims = [ci[0] * (S[0] + T[0])]
    for i, phi in enumerate(phis, start=1):
        for m in range(1, phi.depth):
            dims.append(c * S[i - 1] + phi.dims[m] + c * T[i])
        dims.append(ci[i] * (S[i] + T[i]))
    return tuple(dims)


def sandwich_bound(c: int, phi: Skeleton) -> Fraction:
    """Upper bound ``5/6 c m P(phi) + 29/12 c^2 m^2`` with ``m = max{in, out}``."""
    m = max(phi.in_dim, phi.out_dim)
    return Fraction(5, 6) * c * m * phi.param_count + Fraction(29, 12) * c * c * m * m


def parallel_bound(phis: Sequence[Skeleton]) -> Fraction:
    return Fraction(sum(p.param_count for p in phis) ** 2, 2)
