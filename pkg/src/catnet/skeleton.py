"""Explicit feedforward network skeletons and their activation realizations.

A skeleton is an ordered list of affine layers ``(V_k, b_k)``; it carries no
activation of its own.  Realizing a skeleton alternates the affine maps with a
componentwise activation, with no activation after the last layer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Upper bound on the number of float64 entries a single skeleton may hold.
# Guards the process against the OOM killer for pathological compile requests.
MAX_ENTRIES = 60_000_000

# Number of hidden activations (rows x width) kept in memory per evaluation chunk.
EVAL_CHUNK_ENTRIES = 8_000_000

# Hidden layers wider than FUSE_WIDTH are evaluated FUSE_BLOCK neurons at a time and
# immediately contracted with the next matrix, so the wide activations never leave cache.
FUSE_WIDTH = 4096
FUSE_BLOCK = 1024
FUSE_ROWS = 256


class ShapeError(ValueError):
    """Raised when vector or matrix dimensions do not match."""


class ResourceLimitError(MemoryError):
    """Raised when a construction would exceed the dense storage budget."""


class NoIdentityError(ValueError):
    """Raised for generalized ReLUs with ``r + s = 0``, which admit no identity network."""


@dataclass(frozen=True)
class Activation:
    """Generalized ReLU ``x -> r*x`` for ``x >= 0`` and ``s*x`` otherwise."""

    r: float = 1.0
    s: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.r) and np.isfinite(self.s)):
            raise ValueError("activation slopes must be finite")
        if self.r + self.s == 0:
            raise NoIdentityError(f"GeneralizedReLU(r={self.r}, s={self.s}) has r + s = 0")

    @property
    def is_relu(self) -> bool:
        return self.r == 1.0 and self.s == 0.0

    @property
    def lipschitz(self) -> float:
        return max(abs(self.r), abs(self.s))

    def __call__(self, x):
        if self.is_relu:
            return np.maximum(x, 0.0)
        return np.where(x >= 0, self.r * x, self.s * x)

    def __str__(self):
        return "ReLU" if self.is_relu else f"GeneralizedReLU(r={self.r}, s={self.s})"


RELU = Activation()


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Skeleton:
    """Immutable list of affine layers ``[(V_1, b_1), ..., (V_D, b_D)]``."""

    __slots__ = ("_layers",)

    def __init__(self, layers: Iterable[tuple]):
        frozen = []
        for k, (V, b) in enumerate(layers, start=1):
            V = np.array(V, dtype=np.float64, ndmin=2)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if V.ndim != 2:
                raise ShapeError(f"layer {k}: matrix must be 2-dimensional")
            if V.shape[0] < 1 or V.shape[1] < 1:
                raise ShapeError(f"layer {k}: empty matrix {V.shape}")
            if V.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {k}: matrix has {V.shape[0]} rows, bias has {b.shape[0]} entries")
            if frozen and frozen[-1][0].shape[0] != V.shape[1]:
                raise ShapeError(
                    f"layer {k}: expects {V.shape[1]} inputs, previous layer emits {frozen[-1][0].shape[0]}"
                )
            if not (np.isfinite(V).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k}: non-finite entry")
            frozen.append((_freeze(V), _freeze(b)))
        if not frozen:
            raise ShapeError("a skeleton needs at least one layer")
        object.__setattr__(self, "_layers", tuple(frozen))

    def __setattr__(self, name, value):
        raise AttributeError("Skeleton is immutable")

    @property
    def layers(self) -> tuple:
        return self._layers

    @property
    def depth(self) -> int:
        return len(self._layers)

    @property
    def dims(self) -> tuple:
        """Architecture ``(l_0, ..., l_D)``."""
        return (self._layers[0][0].shape[1],) + tuple(V.shape[0] for V, _ in self._layers)

    @property
    def in_dim(self) -> int:
        return self._layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self._layers[-1][0].shape[0]

    @property
    def param_count(self) -> int:
        return sum(V.shape[0] * (V.shape[1] + 1) for V, _ in self._layers)

    def __call__(self, x, activation: Activation = RELU):
        return realize(self, activation, x)

    def __eq__(self, other):
        if not isinstance(other, Skeleton) or self.dims != other.dims:
            return NotImplemented if not isinstance(other, Skeleton) else False
        return all(
            np.array_equal(V, W) and np.array_equal(b, c)
            for (V, b), (W, c) in zip(self._layers, other._layers)
        )

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"Skeleton(dims={self.dims}, params={self.param_count})"

    def to_dict(self) -> dict:
        return {"layers": [{"matrix": V.tolist(), "bias": b.tolist()} for V, b in self._layers]}

    @classmethod
    def from_dict(cls, data: dict) -> "Skeleton":
        try:
            layers = data["layers"]
            return cls((layer["matrix"], layer["bias"]) for layer in layers)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed skeleton JSON: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Skeleton":
        return cls.from_dict(json.loads(text))


def check_budget(shapes: Sequence[tuple]) -> None:
    """Raise ResourceLimitError if matrices of the given shapes exceed MAX_ENTRIES."""
    total = sum(int(r) * (int(c) + 1) for r, c in shapes)
    if total > MAX_ENTRIES:
        raise ResourceLimitError(
            f"construction needs {total:,} dense parameters, above the budget of {MAX_ENTRIES:,}"
        )


def depth(phi: Skeleton) -> int:
    return phi.depth


def architecture(phi: Skeleton) -> tuple:
    return phi.dims


def param_count(phi: Skeleton) -> int:
    return phi.param_count


def affine_skeleton(V, b=None) -> Skeleton:
    """Depth-1 skeleton realizing ``x -> V x + b`` under every activation."""
    V = np.array(V, dtype=np.float64, ndmin=2)
    if b is None:
        b = np.zeros(V.shape[0])
    return Skeleton([(V, b)])


def realize(phi: Skeleton, activation: Activation, x):
    """Evaluate the ``activation``-realization of ``phi``.

    ``x`` is a single input of length ``l_0`` or a batch of shape ``(n, l_0)``.
    Large batches are evaluated in chunks so that hidden activations of very
    wide layers stay within ``EVAL_CHUNK_ENTRIES`` floats.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(1, -1)
    elif x.ndim != 2:
        raise ShapeError(f"input must be a vector or a batch of vectors, got shape {x.shape}")
    if x.shape[1] != phi.in_dim:
        raise ShapeError(f"input has dimension {x.shape[1]}, skeleton expects {phi.in_dim}")

    chunk = _chunk_rows(phi)
    if x.shape[0] <= chunk:
        out = _forward(phi, activation, x)
    else:
        out = np.concatenate(
            [_forward(phi, activation, x[i:i + chunk]) for i in range(0, x.shape[0], chunk)]
        )
    return out[0] if single else out


def _fused(k: int, phi: Skeleton) -> bool:
    return k < phi.depth - 1 and phi.layers[k][0].shape[0] > FUSE_WIDTH


def _chunk_rows(phi: Skeleton) -> int:
    """Rows per chunk so that every materialized activation fits ``EVAL_CHUNK_ENTRIES``."""
    widths = [phi.in_dim]
    any_fused = False
    k = 0
    while k < phi.depth:
        if _fused(k, phi):
            any_fused = True
            widths.append(FUSE_BLOCK)
            k += 1
        widths.append(phi.layers[k][0].shape[0])
        k += 1
    rows = max(1, EVAL_CHUNK_ENTRIES // max(widths))
    return min(rows, FUSE_ROWS) if any_fused else rows


def _forward(phi: Skeleton, activation: Activation, x: np.ndarray) -> np.ndarray:
    layers = phi.layers
    D = len(layers)
    h = x
    k = 0
    while k < D:
        V, b = layers[k]
        if _fused(k, phi):
            V2, b2 = layers[k + 1]
            z = np.zeros((h.shape[0], V2.shape[0]))
            for s in range(0, V.shape[0], FUSE_BLOCK):
                blk = h @ V[s:s + FUSE_BLOCK].T
                blk += b[s:s + FUSE_BLOCK]
                z += activation(blk) @ V2[:, s:s + FUSE_BLOCK].T
            z += b2
            k += 2
        else:
            z = h @ V.T + b
            k += 1
        h = activation(z) if k < D else z
    return h
