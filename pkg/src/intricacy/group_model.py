"""Averaging windows in Z and Z^2, subsets of them, and coefficient systems.

Every average-sample-complexity formula is a weighted sum over the subsets
``S`` of a box ``F_n``. This module supplies the boxes, a bit-mask view of
their subsets, exact enumeration, seeded sampling, and the weights
``c(|F_n|, |S|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import SizeLimitError, ValidationError

Point = tuple[int, ...]

EXACT_SUBSET_LIMIT = 20


def _as_point(p, dimension: int) -> Point:
    if isinstance(p, (int, np.integer)):
        p = (int(p),)
    p = tuple(int(c) for c in p)
    if len(p) != dimension:
        raise ValidationError(f"point {p} does not have dimension {dimension}")
    return p


@dataclass(frozen=True)
class LatticeWindow:
    """Finite set of lattice points in canonical (lexicographic) order."""

    dimension: int
    points: tuple[Point, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValidationError(f"dimension must be 1 or 2, got {self.dimension}")
        pts = sorted({_as_point(p, self.dimension) for p in self.points})
        if len(pts) != len(self.points):
            raise ValidationError("window points must be pairwise distinct")
        object.__setattr__(self, "points", tuple(pts))
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    @classmethod
    def of(cls, points: Sequence, dimension: int | None = None) -> "LatticeWindow":
        pts = list(points)
        if dimension is None:
            dimension = 1 if not pts or isinstance(pts[0], (int, np.integer)) else len(pts[0])
        return cls(dimension, tuple(_as_point(p, dimension) for p in pts))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return _as_point(p, self.dimension) in self._index

    def index(self, p) -> int:
        return self._index[_as_point(p, self.dimension)]

    def coords(self) -> list[int]:
        """Integer coordinates of a one-dimensional window."""
        if self.dimension != 1:
            raise ValidationError("coords() is only defined for d=1 windows")
        return [p[0] for p in self.points]

    def translate(self, g) -> "LatticeWindow":
        g = _as_point(g, self.dimension)
        return LatticeWindow(
            self.dimension, tuple(tuple(a + b for a, b in zip(p, g)) for p in self.points)
        )

    def minkowski(self, other: "LatticeWindow") -> "LatticeWindow":
        """The sum set ``{p + q}``; the ``S ⊕ W`` of a join."""
        if other.dimension != self.dimension:
            raise ValidationError("dimension mismatch")
        pts = {tuple(a + b for a, b in zip(p, q)) for p in self.points for q in other.points}
        return LatticeWindow(self.dimension, tuple(pts))

    def union(self, other: "LatticeWindow") -> "LatticeWindow":
        if other.dimension != self.dimension:
            raise ValidationError("dimension mismatch")
        return LatticeWindow(self.dimension, tuple(set(self.points) | set(other.points)))

    def issubset(self, other: "LatticeWindow") -> bool:
        return all(p in other._index for p in self.points)

    def bounding_box(self) -> tuple[Point, Point]:
        lo = tuple(min(p[i] for p in self.points) for i in range(self.dimension))
        hi = tuple(max(p[i] for p in self.points) for i in range(self.dimension))
        return lo, hi

    def normalized(self) -> "LatticeWindow":
        """Translate so that the first canonical point is the origin."""
        if not self.points:
            return self
        return self.translate(tuple(-c for c in self.points[0]))


def folner_window(n: int, d: int = 1) -> LatticeWindow:
    """The box ``{0, ..., n-1}^d``."""
    if d not in (1, 2):
        raise ValidationError(f"only d in {{1, 2}} is supported, got {d}")
    if n < 1:
        raise ValidationError(f"box side must be >= 1, got {n}")
    if d == 1:
        return LatticeWindow(1, tuple((i,) for i in range(n)))
    return LatticeWindow(2, tuple((i, j) for i in range(n) for j in range(n)))


def interval(a: int, b: int) -> LatticeWindow:
    """One-dimensional window ``{a, ..., b-1}``."""
    return LatticeWindow(1, tuple((i,) for i in range(a, b)))


@dataclass(frozen=True)
class SubsetMask:
    """Subset of a window; bit ``i`` marks the ``i``-th canonical point."""

    window: LatticeWindow
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> len(self.window):
            raise ValidationError("mask has bits outside the window")

    @classmethod
    def from_points(cls, window: LatticeWindow, points) -> "SubsetMask":
        bits = 0
        for p in points:
            bits |= 1 << window.index(p)
        return cls(window, bits)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> list[int]:
        b, out, i = self.bits, [], 0
        while b:
            if b & 1:
                out.append(i)
            b >>= 1
            i += 1
        return out

    def points(self) -> tuple[Point, ...]:
        return tuple(self.window.points[i] for i in self.indices())

    def as_window(self) -> LatticeWindow:
        return LatticeWindow(self.window.dimension, self.points())


def complement(mask: SubsetMask) -> SubsetMask:
    full = (1 << len(mask.window)) - 1
    return SubsetMask(mask.window, full ^ mask.bits)


def enumerate_subsets(
    window: LatticeWindow, limit: int = EXACT_SUBSET_LIMIT
) -> Iterator[SubsetMask]:
    """All subsets in increasing bit-pattern order."""
    m = len(window)
    if m > limit:
        raise SizeLimitError(
            f"window has {m} points; exact enumeration is limited to {limit} "
            "(use Monte-Carlo mode for larger windows)"
        )
    for bits in range(1 << m):
        yield SubsetMask(window, bits)


@dataclass(frozen=True)
class CoefficientSystem:
    """Weights ``c(a, s)`` on subsets of size ``s`` of an ``a``-point window.

    ``LambdaAtoms`` is the mixture ``sum_j w_j x_j^s (1 - x_j)^(a - s)`` of a
    discrete symmetric measure on [0, 1]; ``Uniform`` is the atom at 1/2 and
    ``Neural`` is the Lebesgue mixture.
    """

    variant: str
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.variant not in ("uniform", "neural", "atoms"):
            raise ValidationError(f"unknown coefficient system {self.variant!r}")
        if self.variant == "atoms":
            if not self.atoms:
                raise ValidationError("atom list is empty")
            for x, w in self.atoms:
                if not 0.0 <= x <= 1.0 or w < 0:
                    raise ValidationError(f"bad atom ({x}, {w})")
            if abs(math.fsum(w for _, w in self.atoms) - 1.0) > 1e-12:
                raise ValidationError("atom weights must sum to 1")

    @classmethod
    def uniform(cls) -> "CoefficientSystem":
        return cls("uniform")

    @classmethod
    def neural(cls) -> "CoefficientSystem":
        return cls("neural")

    @classmethod
    def from_atoms(cls, atoms) -> "CoefficientSystem":
        return cls("atoms", tuple((float(x), float(w)) for x, w in atoms))

    @classmethod
    def parse(cls, spec) -> "CoefficientSystem":
        """Accepts ``"uniform"``, ``"neural"`` or a list of ``[x, weight]`` pairs."""
        if isinstance(spec, CoefficientSystem):
            return spec
        if isinstance(spec, str):
            return cls(spec.lower())
        if isinstance(spec, dict) and "atoms" in spec:
            return cls.from_atoms(spec["atoms"])
        return cls.from_atoms(spec)

    @property
    def tag(self) -> str:
        if self.variant != "atoms":
            return self.variant
        return "atoms[" + ";".join(f"{x:g}:{w:g}" for x, w in self.atoms) + "]"

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        if self.variant != "atoms":
            return True
        mass: dict[float, float] = {}
        for x, w in self.atoms:
            mass[x] = mass.get(x, 0.0) + w
        return all(abs(w - mass.get(1.0 - x, 0.0)) <= tol for x, w in mass.items())


def coefficient(system: CoefficientSystem, a: int, s: int) -> float:
    """Weight of one subset of size ``s`` in a window of size ``a``."""
    if a < 0 or s < 0 or s > a:
        raise ValidationError(f"need 0 <= s <= a, got a={a}, s={s}")
    if system.variant == "uniform":
        return math.ldexp(1.0, -a)
    if system.variant == "neural":
        return 1 / ((a + 1) * math.comb(a, s))
    return math.fsum(w * x**s * (1.0 - x) ** (a - s) for x, w in system.atoms)


def coefficient_table(system: CoefficientSystem, a: int) -> np.ndarray:
    """``coefficient(system, a, s)`` for ``s = 0..a``."""
    return np.array([coefficient(system, a, s) for s in range(a + 1)])


def sample_subset_bits(
    system: CoefficientSystem, size: int, count: int, seed: int
) -> list[int]:
    """Draw ``count`` subset bit patterns with law ``binom-weighted c(size, |S|)``.

    Draws a mixing parameter x per sample (1/2 for uniform, an atom by weight,
    or Uniform(0, 1) for neural), then includes every point independently
    with probability x.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    rng = np.random.default_rng(seed)
    if system.variant == "uniform":
        x = np.full(count, 0.5)
    elif system.variant == "neural":
        x = rng.random(count)
    else:
        xs = np.array([a for a, _ in system.atoms])
        ws = np.array([w for _, w in system.atoms])
        x = xs[rng.choice(len(xs), size=count, p=ws / ws.sum())]
    draws = rng.random((count, size)) < x[:, None]
    if size <= 62:
        weights = np.left_shift(np.int64(1), np.arange(size, dtype=np.int64))
        return [int(v) for v in draws.astype(np.int64) @ weights]
    return [sum(1 << i for i in np.flatnonzero(row)) for row in draws]


def sample_subsets(
    system: CoefficientSystem, window: LatticeWindow, count: int, seed: int
) -> Iterator[SubsetMask]:
    """Seeded stream of subsets whose empirical means are unbiased for ``sum_S c_S f(S)``."""
    for bits in sample_subset_bits(system, len(window), count, seed):
        yield SubsetMask(window, bits)
