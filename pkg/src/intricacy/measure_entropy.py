"""Invariant measures on shift spaces and entropies of partitions and covers.

Entropies are in nats with ``0 ln 0 = 0``. Conditional entropies given a
factor are computed from exact joint marginals over a finite factor window
``V``: ``H(cell, y_V) - H(y_V)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cover_algebra import CylinderCover, JoinUniverse, join_materialize, pattern_codes
from .errors import ValidationError
from .group_model import LatticeWindow
from .subcover_counting import fiber_groups
from .symbolic_space import Language, ShiftSpace, SlidingBlockCode, columns, language

EXHAUSTIVE_LOG2_LIMIT = 18
RESTARTS = 8


def shannon(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True, eq=False)
class Bernoulli:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError("Bernoulli probabilities must be >= 0 and sum to 1")
        object.__setattr__(self, "p", p)

    @property
    def exchangeable(self) -> bool:
        return True

    @property
    def product(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class Markov:
    """Stationary Markov measure with initial law ``pi`` and transitions ``P``."""

    pi: np.ndarray
    P: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        P = np.asarray(self.P, dtype=float)
        k = pi.size
        if P.shape != (k, k):
            raise ValidationError("P must be a square matrix matching pi")
        if (P < 0).any() or (pi < 0).any():
            raise ValidationError("Markov entries must be nonnegative")
        if np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValidationError("rows of P must sum to 1")
        if abs(pi.sum() - 1.0) > 1e-12:
            raise ValidationError("pi must sum to 1")
        if np.abs(pi @ P - pi).max() > 1e-12:
            raise ValidationError("pi is not stationary for P")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "P", P)

    @classmethod
    def from_matrix(cls, P) -> "Markov":
        P = np.asarray(P, dtype=float)
        k = P.shape[0]
        a = np.vstack([P.T - np.eye(k), np.ones(k)])
        b = np.concatenate([np.zeros(k), [1.0]])
        pi = np.linalg.lstsq(a, b, rcond=None)[0]
        return cls(pi, P)

    @property
    def exchangeable(self) -> bool:
        return False

    @property
    def product(self) -> bool:
        return False

    def power(self, gap: int) -> np.ndarray:
        if gap not in self._cache:
            self._cache[gap] = np.linalg.matrix_power(self.P, gap)
        return self._cache[gap]


@dataclass(frozen=True, eq=False)
class Mixture:
    components: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.components) != w.size or not len(self.components):
            raise ValidationError("mixture needs one weight per component")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("mixture weights must be >= 0 and sum to 1")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", w)

    @property
    def exchangeable(self) -> bool:
        return all(c.exchangeable for c in self.components)

    @property
    def product(self) -> bool:
        return False


ShiftMeasure = Bernoulli | Markov | Mixture


def mixture_combine(measures, weights) -> ShiftMeasure:
    """Convex combination; a single component with weight 1 is returned as is."""
    measures, w = list(measures), np.asarray(weights, dtype=float)
    if len(measures) != w.size:
        raise ValidationError("one weight per measure is required")
    if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
        raise ValidationError("mixture weights must be >= 0 and sum to 1")
    live = [(m, x) for m, x in zip(measures, w) if x > 0]
    if len(live) == 1:
        return live[0][0]
    return Mixture(tuple(m for m, _ in live), np.array([x for _, x in live]))


@dataclass(eq=False)
class PatternDistribution:
    language: Language
    probs: np.ndarray

    @property
    def window(self) -> LatticeWindow:
        return self.language.window


def _probs(measure, words: np.ndarray, window: LatticeWindow) -> np.ndarray:
    if words.shape[1] == 0:
        return np.ones(words.shape[0])
    if isinstance(measure, Bernoulli):
        if measure.p.size <= int(words.max()):
            raise ValidationError("Bernoulli vector shorter than the alphabet")
        return np.prod(measure.p[words], axis=1)
    if isinstance(measure, Markov):
        if window.dimension != 1:
            raise ValidationError("Markov measures are one-dimensional")
        xs = window.coords()
        pr = measure.pi[words[:, 0]]
        for j in range(1, len(xs)):
            pr = pr * measure.power(xs[j] - xs[j - 1])[words[:, j - 1], words[:, j]]
        return pr
    if isinstance(measure, Mixture):
        return sum(w * _probs(c, words, window) for c, w in zip(measure.components, measure.weights))
    raise ValidationError(f"unsupported measure {type(measure).__name__}")


def marginal(shift: ShiftSpace, measure, window: LatticeWindow, lang: Language | None = None) -> PatternDistribution:
    lang = language(shift, window) if lang is None else lang
    pr = _probs(measure, lang.words, window)
    if abs(pr.sum() - 1.0) > 1e-9:
        raise ValidationError(
            f"marginal sums to {pr.sum():.12g}; the measure is not supported on the shift"
        )
    return PatternDistribution(lang, pr)


def check_support(shift: ShiftSpace, measure) -> None:
    """Raise unless the measure lives on the shift (Markov: P_ij > 0 only where allowed)."""
    if isinstance(measure, Markov):
        if measure.pi.size != shift.k:
            raise ValidationError("Markov measure alphabet differs from the shift")
        if ((measure.P > 0) & (shift.transitions == 0)).any():
            raise ValidationError("Markov transitions outside the shift's transition matrix")
    elif isinstance(measure, Mixture):
        for c in measure.components:
            check_support(shift, c)
    else:
        win = LatticeWindow(shift.dimension, ((0,) * shift.dimension,))
        marginal(shift, measure, win.union(win.translate((1,) + (0,) * (shift.dimension - 1))))


def join_cell_masses(join: JoinUniverse, probs: np.ndarray) -> np.ndarray:
    return np.bincount(join.cell_ids(), weights=probs, minlength=len(join.sets))


def partition_entropy(shift: ShiftSpace, measure, partition: CylinderCover, S) -> float:
    if not partition.is_partition:
        raise ValidationError("partition_entropy needs a partition")
    join = join_materialize(shift, partition, S)
    if not len(join.subset):
        return 0.0
    dist = marginal(shift, measure, join.window, join.universe)
    return shannon(join_cell_masses(join, dist.probs))


@dataclass(eq=False)
class FactorJoint:
    """Masses of (atom, factor label) pairs, CSR by atom."""

    yptr: np.ndarray
    ylab: np.ndarray
    ymass: np.ndarray
    ny: int
    h_factor: float

    @classmethod
    def unconditional(cls, probs: np.ndarray) -> "FactorJoint":
        n = probs.size
        return cls(np.arange(n + 1), np.zeros(n, dtype=np.int64), probs.astype(float), 1, 0.0)


def factor_joint(shift: ShiftSpace, measure, join: JoinUniverse, code: SlidingBlockCode, V: LatticeWindow) -> FactorJoint:
    words, atom, y, big = fiber_groups(shift, code, join.window, join.universe.words, V)
    pr = _probs(measure, words, big)
    if abs(pr.sum() - 1.0) > 1e-9:
        raise ValidationError("measure is not supported on the shift")
    ny = int(y.max()) + 1
    key = atom * ny + y
    uk, inv = np.unique(key, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=pr)
    a, lab = uk // ny, uk % ny
    yptr = np.searchsorted(a, np.arange(join.size + 1))
    h_y = shannon(np.bincount(y, weights=pr, minlength=ny))
    return FactorJoint(yptr, lab.astype(np.int64), mass, ny, h_y)


def conditional_partition_entropy(
    shift: ShiftSpace, measure, partition: CylinderCover, S, code: SlidingBlockCode, V: LatticeWindow
) -> float:
    """``H(alpha_S | factor pattern on V)``."""
    if not partition.is_partition:
        raise ValidationError("conditional_partition_entropy needs a partition")
    if shift.dimension != 1:
        raise ValidationError("conditional entropies are one-dimensional")
    join = join_materialize(shift, partition, S)
    fj = factor_joint(shift, measure, join, code, V)
    assign = join.cell_ids()
    h = _kernels.joint_entropy(assign, fj.yptr, fj.ylab, fj.ymass, len(join.sets), fj.ny)
    return max(float(h) - fj.h_factor, 0.0)


class ConditionalPartitionTable:
    """``H(alpha_S | factor pattern on V)`` for many ``S`` sharing one ``V``.

    The language on ``V ⊕ code window ∪ region ⊕ W`` is enumerated once with
    its masses and factor labels; each query then only codes the cells of the
    rows on ``S``. Every ``S`` must lie inside ``region``.
    """

    def __init__(self, shift: ShiftSpace, measure, partition: CylinderCover, region: LatticeWindow,
                 code: SlidingBlockCode, V: LatticeWindow):
        if not partition.is_partition:
            raise ValidationError("ConditionalPartitionTable needs a partition")
        if shift.dimension != 1:
            raise ValidationError("conditional entropies are one-dimensional")
        self.region = region
        U = region.minkowski(partition.window)
        big = U.union(V.minkowski(code.window))
        words = language(shift, big).words
        _, y = np.unique(code.image_words(words, big, V), axis=0, return_inverse=True)
        self.mass = _probs(measure, words, big)
        if abs(self.mass.sum() - 1.0) > 1e-9:
            raise ValidationError("measure is not supported on the shift")
        self.y = y.ravel().astype(np.int64)
        self.ny = int(self.y.max()) + 1
        self.h_factor = shannon(np.bincount(self.y, weights=self.mass, minlength=self.ny))
        member = partition.membership(shift.k)
        self.ncells = len(partition)
        # cell label of the pattern on g + W, one column per g in the region
        self.cells = {
            g: member[:, pattern_codes(words[:, columns(big, partition.window.translate(g))], shift.k)].argmax(axis=0)
            for g in region.points
        }

    def entropy(self, S: LatticeWindow) -> float:
        key = self.y.copy()
        radix = self.ny
        for g in S.points:
            if radix > (1 << 62) // self.ncells:
                _, key = np.unique(key, return_inverse=True)
                key, radix = key.ravel().astype(np.int64), int(key.max()) + 1
            key = key * self.ncells + self.cells[g]
            radix *= self.ncells
        _, inv = np.unique(key, return_inverse=True)
        return max(shannon(np.bincount(inv.ravel(), weights=self.mass)) - self.h_factor, 0.0)


@dataclass(eq=False)
class CoverEntropyResult:
    value: float
    certified: bool
    assignment: np.ndarray
    join: JoinUniverse
    method: str = ""


def _choice_csr(join: JoinUniverse) -> tuple[np.ndarray, np.ndarray]:
    atoms, labels = join.choice_pairs()
    return np.searchsorted(atoms, np.arange(join.size + 1)), labels.astype(np.int64)


def minimize_assignment(join: JoinUniverse, fj: FactorJoint, seed: int = 0,
                        exhaustive_log2: float = EXHAUSTIVE_LOG2_LIMIT,
                        restarts: int = RESTARTS) -> tuple[np.ndarray, float, bool, str]:
    """Minimize ``H(cell, y) - H(y)`` over deterministic assignments."""
    cptr, cset = _choice_csr(join)
    width = np.diff(cptr)
    ncells = len(join.sets)
    base = cset[cptr[:-1]].copy()
    log2_size = float(np.log2(width).sum())

    def value(a):
        h = _kernels.joint_entropy(a, fj.yptr, fj.ylab, fj.ymass, ncells, fj.ny)
        return max(float(h) - fj.h_factor, 0.0)

    if log2_size == 0:
        return base, value(base), True, "forced"
    if log2_size <= exhaustive_log2 + 1e-9:
        multi = np.flatnonzero(width > 1).astype(np.int64)
        best = _kernels.exhaustive(multi, cptr, cset, base, fj.yptr, fj.ylab, fj.ymass, ncells, fj.ny)
        return best, value(best), True, "exhaustive"
    atom_mass = np.add.reduceat(fj.ymass, fj.yptr[:-1]) if fj.ymass.size else np.zeros(join.size)
    best_a, best_v = None, math.inf
    sptr = np.concatenate([[0], np.cumsum([len(x) for x in join.sets])]).astype(np.int64)
    satoms = np.concatenate(join.sets).astype(np.int64)
    for r in range(restarts):
        # restart 0 breaks ties by element index, the others by a seeded permutation
        tie = np.arange(ncells) if r == 0 else np.random.default_rng([seed, r]).permutation(ncells)
        a = _kernels.set_greedy(sptr, satoms, cptr, cset, atom_mass, tie, 1e-12)
        _kernels.local_search(a, cptr, cset, fj.yptr, fj.ylab, fj.ymass, ncells, fj.ny, 1000, 1e-15)
        v = value(a)
        if v < best_v - 1e-15:
            best_a, best_v = a, v
    return best_a, best_v, False, "greedy+local"


def cover_entropy(
    shift: ShiftSpace,
    measure,
    cover: CylinderCover,
    S,
    code: SlidingBlockCode | None = None,
    V: LatticeWindow | None = None,
    seed: int = 0,
    exhaustive_log2: float = EXHAUSTIVE_LOG2_LIMIT,
) -> CoverEntropyResult:
    """``inf`` of the (conditional) entropy over partitions of ``S ⊕ W`` finer than ``U_S``.

    Exhaustive over deterministic assignments up to ``2**exhaustive_log2`` of
    them (certified), otherwise set-greedy plus local search with seeded
    restarts (an upper bound, not certified).
    """
    join = join_materialize(shift, cover, S)
    if code is None:
        fj = FactorJoint.unconditional(marginal(shift, measure, join.window, join.universe).probs)
    else:
        if V is None:
            raise ValidationError("a conditioning window is required with a code")
        fj = factor_joint(shift, measure, join, code, V)
    a, v, cert, method = minimize_assignment(join, fj, seed, exhaustive_log2)
    return CoverEntropyResult(v, cert, a, join, method)


def fractional_entropy(join: JoinUniverse, fj: FactorJoint, weights: np.ndarray) -> float:
    """Entropy of a randomized assignment.

    ``weights`` is aligned with the choice pairs of the join (sorted by atom,
    then element); atom ``a`` sends ``weights[t]`` of its mass to choice ``t``.
    """
    cptr, cset = _choice_csr(join)
    width = np.diff(cptr)
    ywidth = np.diff(fj.yptr)
    # one entry per (choice, factor label) combination of the same atom
    t_idx = np.repeat(np.arange(cset.size), ywidth[np.repeat(np.arange(join.size), width)])
    atom_of_t = np.repeat(np.arange(join.size), width)
    starts = fj.yptr[atom_of_t]
    offs = np.arange(t_idx.size) - np.repeat(np.cumsum(np.concatenate([[0], ywidth[atom_of_t]]))[:-1], ywidth[atom_of_t])
    u_idx = starts[t_idx] + offs
    q = np.bincount(cset[t_idx] * fj.ny + fj.ylab[u_idx],
                    weights=weights[t_idx] * fj.ymass[u_idx], minlength=len(join.sets) * fj.ny)
    return shannon(q) - fj.h_factor
