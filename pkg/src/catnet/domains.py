"""Approximation sets: the regions on which a catalog function's builder is accurate."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ApproxSet:
    """Base class; subclasses implement ``dim``, ``contains`` and ``to_dict``."""

    dim: int

    def contains(self, x) -> np.ndarray:
        """Vectorized closed-set membership for points of shape ``(n, dim)`` or ``(dim,)``."""
        raise NotImplementedError

    def bounding_box(self):
        """``(lo, hi)`` arrays, with infinite entries for unbounded directions."""
        raise NotImplementedError

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim <= 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.dim:
            raise ValueError(f"point has dimension {x.shape[1]}, set has dimension {self.dim}")
        return x


@dataclass(frozen=True)
class All(ApproxSet):
    dim: int = 1

    def contains(self, x):
        x = self._as_batch(x)
        return np.isfinite(x).all(axis=1)

    def bounding_box(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def to_dict(self):
        return {"kind": "all", "dim": self.dim}


@dataclass(frozen=True)
class Box(ApproxSet):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("box bounds have different lengths")
        if any(a > 0 or b < 0 for a, b in zip(lo, hi)):
            raise ValueError("an approximation set must contain the origin")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def symmetric(cls, radius: float, dim: int = 1) -> "Box":
        return cls((-radius,) * dim, (radius,) * dim)

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, x):
        x = self._as_batch(x)
        return ((x >= np.array(self.lo)) & (x <= np.array(self.hi))).all(axis=1)

    def bounding_box(self):
        return np.array(self.lo), np.array(self.hi)

    def to_dict(self):
        return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class HalfLineNonneg(ApproxSet):
    """The closed half line ``[0, inf)``."""

    dim: int = field(default=1, init=False)

    def contains(self, x):
        x = self._as_batch(x)
        return ((x >= 0) & np.isfinite(x)).all(axis=1)

    def bounding_box(self):
        return np.zeros(1), np.full(1, np.inf)

    def to_dict(self):
        return {"kind": "halfline"}


@dataclass(frozen=True)
class Product(ApproxSet):
    """Cartesian product of sets, in the declared block order."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)

    def contains(self, x):
        x = self._as_batch(x)
        ok = np.ones(x.shape[0], dtype=bool)
        start = 0
        for p in self.parts:
            ok &= p.contains(x[:, start:start + p.dim])
            start += p.dim
        return ok

    def bounding_box(self):
        boxes = [p.bounding_box() for p in self.parts]
        return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])

    def to_dict(self):
        return {"kind": "product", "parts": [p.to_dict() for p in self.parts]}


def from_dict(data: dict) -> ApproxSet:
    kind = data.get("kind")
    if kind == "all":
        return All(int(data.get("dim", 1)))
    if kind == "box":
        return Box(tuple(data["lo"]), tuple(data["hi"]))
    if kind == "halfline":
        return HalfLineNonneg()
    if kind == "product":
        return Product(tuple(from_dict(p) for p in data["parts"]))
    raise ValueError(f"unknown approximation set kind {kind!r}")
