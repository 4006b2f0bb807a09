"""Average sample complexity and intricacy as truncation series.

Every quantity here has the shape

    a_n = (1 / |F_n|) * sum_{S ⊆ F_n} c(|F_n|, |S|) * f(S)

for a per-subset term ``f`` (a log subcover count, a partition entropy, a
cover entropy, ...). ``a_n`` is evaluated exactly by enumerating all subsets
or estimated by Monte Carlo with subsets drawn from the coefficient law.
Per-subset terms are memoized under :func:`instance_key`, so translates (and,
on full shifts with exchangeable measures, gap-equivalent subsets) are
computed once.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cover_algebra import CylinderCover, instance_key, pattern_codes
from .errors import BudgetExceeded, SizeLimitError, ValidationError
from .group_model import (
    EXACT_SUBSET_LIMIT,
    CoefficientSystem,
    LatticeWindow,
    coefficient,
    enumerate_subsets,
    folner_window,
    interval,
    sample_subset_bits,
)
from .measure_entropy import (
    ConditionalPartitionTable,
    cover_entropy,
    marginal,
    partition_entropy,
    shannon,
)
from .series import SeriesRecord, TruncationSeries
from .subcover_counting import (
    DEFAULT_BUDGET,
    conditioning_window,
    count_words,
    is_symbol_partition,
    n_conditional,
    n_join,
)
from .symbolic_space import ShiftSpace, SlidingBlockCode, columns, language

PLUS_EXHAUSTIVE_LOG2 = 14


def task_seed(run_seed: int, *parts) -> int:
    """Stable 64-bit seed: BLAKE2b of the run seed and the task labels."""
    text = "|".join(str(p) for p in (run_seed,) + parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass
class RunOptions:
    mode: str = "exact"
    samples: int = 10_000
    seed: int = 0
    budget_nodes: int = DEFAULT_BUDGET
    exact_limit: int = EXACT_SUBSET_LIMIT
    deadline: float | None = None
    margin: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "mc"):
            raise ValidationError(f"mode must be 'exact' or 'mc', got {self.mode!r}")

    def check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExceeded("time budget exhausted")


def _components(S: LatticeWindow, W: LatticeWindow) -> list[LatticeWindow]:
    """Split ``S`` into groups whose translates of ``W`` never meet across groups."""
    pts = list(S.points)
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict = {}
    for i, g in enumerate(pts):
        for w in W.points:
            cell = tuple(a + b for a, b in zip(g, w))
            if cell in owner:
                parent[find(i)] = find(owner[cell])
            else:
                owner[cell] = i
    groups: dict[int, list] = {}
    for i, g in enumerate(pts):
        groups.setdefault(find(i), []).append(g)
    return [LatticeWindow(S.dimension, tuple(v)) for v in groups.values()]


@dataclass
class SubsetTerms:
    """Memoized per-subset terms for one (shift, cover, measure, code) setting."""

    shift: ShiftSpace
    cover: CylinderCover
    measure: object = None
    code: SlidingBlockCode | None = None
    options: RunOptions = field(default_factory=RunOptions)
    cache: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.code is not None and self.shift.dimension != 1:
            raise ValidationError("conditioning on a factor is one-dimensional")

    @property
    def exchangeable(self) -> bool:
        return self.measure is None or self.measure.exchangeable

    @property
    def splittable(self) -> bool:
        """Independent translate groups contribute additively (product structure)."""
        return (
            self.code is None
            and self.cover.is_partition
            and self.shift.is_full
            and (self.measure is None or self.measure.product)
        )

    def _key(self, tag: str, S: LatticeWindow, V: LatticeWindow | None):
        if V is None:
            return (tag, instance_key(self.shift, self.cover, S, self.exchangeable))
        if not len(S):
            return (tag, "empty")
        origin = S.points[0]
        shift_back = tuple(-c for c in origin)
        return (tag, "cond", S.translate(shift_back).points, V.translate(shift_back).points)

    def _memo(self, tag, S, V, compute):
        key = self._key(tag, S, V)
        if key not in self.cache:
            self.options.check_time()
            self.cache[key] = compute()
        return self.cache[key]

    def _split(self, tag, S, single):
        """Sum ``single`` over independent components when the structure allows."""
        if not self.splittable or len(S) <= 1:
            return self._memo(tag, S, None, lambda: single(S))
        parts = _components(S, self.cover.window)
        if len(parts) == 1:
            return self._memo(tag, S, None, lambda: single(S))
        vals = [self._memo(tag, P, None, lambda P=P: single(P)) for P in parts]
        return (math.fsum(v for v, _ in vals), all(c for _, c in vals))

    def log_count(self, S: LatticeWindow, V: LatticeWindow | None = None) -> tuple[float, bool]:
        """``ln N(U_S)`` or ``ln N(U_S | Y)``, with its certification flag."""
        budget = self.options.budget_nodes
        if self.code is not None:
            def f():
                r = n_conditional(self.shift, self.cover, S, self.code, V, budget)
                return (math.log(r.value), r.certified)
            return self._memo("lnN|", S, V, f)

        def single(P):
            if not len(P):
                return (0.0, True)
            if is_symbol_partition(self.shift, self.cover):
                return (math.log(count_words(self.shift, P)), True)
            r = n_join(self.shift, self.cover, P, budget)
            return (math.log(r.value), r.certified)

        return self._split("lnN", S, single)

    def partition_entropy(self, S: LatticeWindow, V: LatticeWindow | None = None) -> tuple[float, bool]:
        if self.code is not None:
            return self._memo("H|", S, V, lambda: (self._conditional_table(S, V).entropy(S), True))
        return self._split(
            "H", S, lambda P: (partition_entropy(self.shift, self.measure, self.cover, P), True)
        )

    def _conditional_table(self, S: LatticeWindow, V: LatticeWindow) -> ConditionalPartitionTable:
        """One table per factor window, reused while ``S`` stays inside its region."""
        key = ("H|table", V.points)
        table = self.cache.get(key)
        if table is None or not set(S.points) <= set(table.region.points):
            lo, hi = min(V.coords()), max(V.coords()) + 1
            w = self.cover.window.coords()
            region = interval(lo - min(w), hi - max(w)) if hi - max(w) > lo - min(w) else S
            if not set(S.points) <= set(region.points):
                region = S
            table = ConditionalPartitionTable(self.shift, self.measure, self.cover, region, self.code, V)
            self.cache[key] = table
        return table

    def cover_entropy(self, S: LatticeWindow, V: LatticeWindow | None = None) -> tuple[float, bool]:
        if self.cover.is_partition:
            return self.partition_entropy(S, V)

        def f():
            if not len(S):
                return (0.0, True)
            r = cover_entropy(self.shift, self.measure, self.cover, S, self.code, V,
                              seed=task_seed(self.options.seed, "cover_entropy", len(S)))
            return (r.value, r.certified)

        return self._memo("HU" if V is None else "HU|", S, V, f)


def _subset_window(F: LatticeWindow, bits: int) -> LatticeWindow:
    pts, i = [], 0
    while bits:
        if bits & 1:
            pts.append(F.points[i])
        bits >>= 1
        i += 1
    return LatticeWindow(F.dimension, tuple(pts))


def _average(F, coeffs: CoefficientSystem, term, options: RunOptions, tag: str, n: int):
    """Coefficient-weighted subset average of ``term(bits) -> (value, certified)``, divided by ``|F|``.

    Returns ``(value, stderr, certified)``.
    """
    m = len(F)
    if options.mode == "exact":
        by_size: list[list[float]] = [[] for _ in range(m + 1)]
        cert = True
        for mask in enumerate_subsets(F, options.exact_limit):
            v, c = term(mask.bits)
            by_size[mask.bits.bit_count()].append(v)
            cert &= c
        total = math.fsum(coefficient(coeffs, m, s) * math.fsum(vals) for s, vals in enumerate(by_size))
        return total / m, 0.0, cert
    bits = sample_subset_bits(coeffs, m, options.samples, task_seed(options.seed, tag, coeffs.tag, n))
    vals, cert = np.empty(len(bits)), True
    for i, b in enumerate(bits):
        v, c = term(b)
        vals[i] = v / m
        cert &= c
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return float(vals.mean()), se, cert


def _bit_term(terms: SubsetTerms, F: LatticeWindow, V, fn):
    """Wrap ``fn(S, V)`` with a memo on the subset bitmask.

    In d=1 without conditioning, translates share the bitmask with trailing
    zeros stripped, independent of ``n``.
    """
    memo = terms.cache.setdefault(("bits", fn.__name__, len(F), V is None), {})
    norm = F.dimension == 1 and V is None
    if norm:
        memo = terms.cache.setdefault(("bits", fn.__name__), {})

    def term(b):
        key = b >> ((b & -b).bit_length() - 1) if (norm and b) else b
        if key not in memo:
            memo[key] = fn(_subset_window(F, b), V)
        return memo[key]
    return term


def _series(quantity, coeffs, ns, options, terms: SubsetTerms, make_term) -> TruncationSeries:
    coeffs = CoefficientSystem.parse(coeffs)
    series = TruncationSeries(quantity, coeffs.tag, approximate=not terms.shift.exact_languages)
    for n in ns:
        t0 = time.perf_counter()
        F = folner_window(n, terms.shift.dimension)
        V = None
        if terms.code is not None:
            V = conditioning_window(F, terms.cover, options.margin)
        term = make_term(F, V)
        value, se, cert = _average(F, coeffs, term, options, quantity, n)
        series.add(SeriesRecord(n, value, se, cert, options.mode, time.perf_counter() - t0,
                                None if V is None else options.margin))
    return series


def _terms(shift, cover, measure=None, code=None, options=None, terms=None) -> SubsetTerms:
    if terms is not None:
        return terms
    return SubsetTerms(shift, cover, measure, code, options or RunOptions())


def asc_top(shift, cover, coeffs, ns, options: RunOptions | None = None, code=None,
            terms: SubsetTerms | None = None) -> TruncationSeries:
    """``(1/|F_n|) sum_S c_S ln N(U_S [| Y])``."""
    t = _terms(shift, cover, None, code, options, terms)
    return _series("asc_top" if code is None else "asc_top_cond", coeffs, ns, t.options, t,
                   lambda F, V: _bit_term(t, F, V, t.log_count))


def int_top(shift, cover, coeffs, ns, options: RunOptions | None = None, code=None,
            terms: SubsetTerms | None = None) -> TruncationSeries:
    """``(1/|F_n|) sum_S c_S [ln N(U_S) + ln N(U_{F∖S}) - ln N(U_F)]``.

    In Monte-Carlo mode each sampled ``S`` is paired with its complement.
    """
    t = _terms(shift, cover, None, code, options, terms)

    def make(F, V):
        full = (1 << len(F)) - 1
        whole, cw = t.log_count(F, V)
        one = _bit_term(t, F, V, t.log_count)

        def term(b):
            a, ca = one(b)
            c, cc = one(full ^ b)
            return a + c - whole, ca and cc and cw
        return term

    return _series("int_top" if code is None else "int_top_cond", coeffs, ns, t.options, t, make)


def h_top(shift, cover, ns, options: RunOptions | None = None, code=None,
          terms: SubsetTerms | None = None) -> TruncationSeries:
    """``(1/|F_n|) ln N(U_{F_n} [| Y])`` through the shared cache."""
    t = _terms(shift, cover, None, code, options, terms)
    series = TruncationSeries("h_top" if code is None else "h_top_cond", "none",
                              approximate=not shift.exact_languages)
    for n in ns:
        t0 = time.perf_counter()
        F = folner_window(n, shift.dimension)
        V = None if code is None else conditioning_window(F, cover, t.options.margin)
        v, c = t.log_count(F, V)
        series.add(SeriesRecord(n, v / len(F), 0.0, c, "exact", time.perf_counter() - t0,
                                None if V is None else t.options.margin))
    return series


def asc_mu(shift, measure, partition, coeffs, ns, options: RunOptions | None = None, code=None,
           terms: SubsetTerms | None = None) -> TruncationSeries:
    """``(1/|F_n|) sum_S c_S H_mu(alpha_S [| Y])`` for a partition ``alpha``."""
    if not partition.is_partition:
        raise ValidationError("asc_mu needs a partition; use asc_mu_minus/plus for covers")
    t = _terms(shift, partition, measure, code, options, terms)
    return _series("asc_mu" if code is None else "asc_mu_cond", coeffs, ns, t.options, t,
                   lambda F, V: _bit_term(t, F, V, t.partition_entropy))


def int_mu(shift, measure, partition, coeffs, ns, options: RunOptions | None = None, code=None,
           terms: SubsetTerms | None = None) -> TruncationSeries:
    """Measure-theoretic intricacy of a partition (paired complements in MC mode)."""
    if not partition.is_partition:
        raise ValidationError("int_mu needs a partition")
    t = _terms(shift, partition, measure, code, options, terms)

    def make(F, V):
        full = (1 << len(F)) - 1
        whole, _ = t.partition_entropy(F, V)
        one = _bit_term(t, F, V, t.partition_entropy)

        def term(b):
            a, _ = one(b)
            c, _ = one(full ^ b)
            return a + c - whole, True
        return term

    return _series("int_mu" if code is None else "int_mu_cond", coeffs, ns, t.options, t, make)


def asc_mu_minus(shift, measure, cover, coeffs, ns, options: RunOptions | None = None, code=None,
                 terms: SubsetTerms | None = None) -> TruncationSeries:
    """``(1/|F_n|) sum_S c_S H_mu(U_S [| Y])`` with the cover entropy inside the sum."""
    t = _terms(shift, cover, measure, code, options, terms)
    return _series("asc_mu_minus" if code is None else "asc_mu_minus_cond", coeffs, ns, t.options, t,
                   lambda F, V: _bit_term(t, F, V, t.cover_entropy))


def asc_minus_anchored(shift, measure, cover, ns, options: RunOptions | None = None, code=None,
                       terms: SubsetTerms | None = None, coeffs="uniform") -> TruncationSeries:
    """``(1/n) sum_{0 ∈ S ⊆ F_n} 2^{-(n-1)} H_mu(U_S [| Y])`` (uniform weights, d=1)."""
    if CoefficientSystem.parse(coeffs).variant != "uniform":
        raise ValidationError("the anchored series is defined for uniform coefficients only")
    if shift.dimension != 1:
        raise ValidationError("the anchored series is one-dimensional")
    t = _terms(shift, cover, measure, code, options, terms)
    series = TruncationSeries("asc_minus_anchored", "uniform", approximate=False)
    for n in ns:
        t0 = time.perf_counter()
        F = folner_window(n, 1)
        V = None if code is None else conditioning_window(F, cover, t.options.margin)
        if t.options.mode == "exact":
            if n - 1 > t.options.exact_limit:
                raise SizeLimitError(f"n={n} is above the exact-mode limit")
            vals, cert = [], True
            for rest in range(1 << (n - 1)):
                v, c = t.cover_entropy(_subset_window(F, 1 | (rest << 1)), V)
                vals.append(v)
                cert &= c
            value, se = math.ldexp(math.fsum(vals), -(n - 1)) / n, 0.0
        else:
            bits = sample_subset_bits(CoefficientSystem.uniform(), n - 1, t.options.samples,
                                      task_seed(t.options.seed, "asc_minus_anchored", n))
            arr, cert = np.empty(len(bits)), True
            for i, b in enumerate(bits):
                v, c = t.cover_entropy(_subset_window(F, 1 | (b << 1)), V)
                arr[i] = v / n
                cert &= c
            value = float(arr.mean())
            se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        series.add(SeriesRecord(n, value, se, cert, t.options.mode, time.perf_counter() - t0,
                                None if V is None else t.options.margin))
    return series


@dataclass
class PlusResult:
    series: TruncationSeries
    partition: CylinderCover
    assignment: np.ndarray
    exhaustive: bool
    candidates: int


def _partition_from_assignment(lang_words, window, assign, n_elements) -> CylinderCover:
    cells = []
    for i in range(n_elements):
        rows = lang_words[assign == i]
        if rows.shape[0]:
            cells.append(frozenset(tuple(r) for r in rows.tolist()))
    return CylinderCover(window, tuple(cells), "alpha")


def asc_mu_plus(shift, measure, cover, coeffs, ns, options: RunOptions | None = None,
                extend: int = 1, code=None, max_candidates: int = 1 << PLUS_EXHAUSTIVE_LOG2,
                restarts: int = 4) -> PlusResult:
    """Best single partition ``alpha ⪰ U`` on the window ``W ⊕ F_extend``.

    The objective is ``asc_mu(alpha)`` at the largest ``n``; the minimizer is
    then evaluated over all ``ns``. Exhaustive when the assignment space has
    at most ``2**14`` members, otherwise greedy plus single-atom local search
    (flagged as an upper bound).
    """
    options = options or RunOptions()
    ns = list(ns)
    W = cover.window
    box = folner_window(extend, shift.dimension)
    Wx = W.minkowski(box)
    lang = language(shift, Wx)
    sub = pattern_codes(lang.words[:, columns(Wx, W)], shift.k)
    member = cover.membership(shift.k)[:, sub]  # (elements, atoms)
    choices = [np.flatnonzero(member[:, a]) for a in range(len(lang))]
    if any(c.size == 0 for c in choices):
        raise ValidationError("cover does not cover the language on its window")
    n_top = max(ns)
    log2_size = sum(math.log2(c.size) for c in choices)
    seen: dict = {}

    def objective(assign: np.ndarray) -> float:
        key = assign.tobytes()
        if key not in seen:
            part = _partition_from_assignment(lang.words, Wx, assign, len(cover))
            s = asc_mu(shift, measure, part, coeffs, [n_top], options, code)
            seen[key] = s.records[0].value
        return seen[key]

    multi = [a for a, c in enumerate(choices) if c.size > 1]
    base = np.array([c[0] for c in choices], dtype=np.int64)
    exhaustive = log2_size <= math.log2(max_candidates) + 1e-9
    if exhaustive:
        best, best_v = base, math.inf
        for combo in itertools.product(*(choices[a] for a in multi)):
            cand = base.copy()
            cand[multi] = combo
            v = objective(cand)
            if v < best_v - 1e-15:
                best, best_v = cand, v
    else:
        mass = marginal(shift, measure, Wx, lang).probs
        best, best_v = None, math.inf
        for r in range(restarts):
            rng = np.random.default_rng(task_seed(options.seed, "asc_mu_plus", r))
            emass = member.astype(float) @ mass
            cand = base.copy()
            for a in multi:
                c = choices[a]
                w = emass[c] if r == 0 else emass[c] * rng.uniform(0.5, 1.5, c.size)
                cand[a] = c[int(np.argmax(w))]
            v = objective(cand)
            improved = True
            while improved:
                improved = False
                for a in multi:
                    for e in choices[a]:
                        if e == cand[a]:
                            continue
                        trial = cand.copy()
                        trial[a] = e
                        tv = objective(trial)
                        if tv < v - 1e-15:
                            cand, v, improved = trial, tv, True
            if v < best_v - 1e-15:
                best, best_v = cand, v
    part = _partition_from_assignment(lang.words, Wx, best, len(cover))
    series = asc_mu(shift, measure, part, coeffs, ns, options, code)
    series.quantity = "asc_mu_plus" if code is None else "asc_mu_plus_cond"
    if not exhaustive:
        for r in series.records:
            r.certified = False
            r.note = "upper bound: non-exhaustive partition search"
    return PlusResult(series, part, best, exhaustive, len(seen))


@dataclass
class JointTable:
    """Joint law of finitely many discrete random variables, one array axis each."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim < 1 or p.ndim > 16:
            raise ValidationError("a joint table needs between 1 and 16 variables")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError("joint table entries must be >= 0 and sum to 1")
        self.probs = p

    @property
    def size(self) -> int:
        return self.probs.ndim

    def entropy(self, axes) -> float:
        axes = tuple(sorted(axes))
        if not axes:
            return 0.0
        drop = tuple(i for i in range(self.size) if i not in axes)
        return shannon(self.probs.sum(axis=drop) if drop else self.probs)


def mutual_information(table: JointTable, S) -> float:
    """``I(X_S; X_{E∖S})``; zero when either side is empty."""
    S = set(S)
    rest = set(range(table.size)) - S
    if not S or not rest:
        return 0.0
    return max(table.entropy(S) + table.entropy(rest) - table.entropy(range(table.size)), 0.0)


def neural_complexity(table: JointTable, coeffs=None) -> float:
    """``sum_{S ⊆ E} c(|E|, |S|) I(X_S; X_{E∖S})``; neural weights by default."""
    coeffs = CoefficientSystem.neural() if coeffs is None else CoefficientSystem.parse(coeffs)
    m = table.size
    E = folner_window(m, 1)
    terms = []
    for mask in enumerate_subsets(E, limit=16):
        S = mask.indices()
        terms.append(coefficient(coeffs, m, len(S)) * mutual_information(table, S))
    return math.fsum(terms)


__all__ = [
    "RunOptions", "SubsetTerms", "asc_top", "int_top", "h_top", "asc_mu", "int_mu",
    "asc_mu_minus", "asc_mu_plus", "asc_minus_anchored", "JointTable", "mutual_information",
    "neural_complexity", "task_seed", "PlusResult",
]
