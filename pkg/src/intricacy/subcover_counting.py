"""Minimal subcover cardinalities ``N(U_S)`` and their conditional versions.

``min_set_cover`` is an exact branch and bound: greedy incumbent, forced-set
reduction, dominated element and set removal, branching on the lowest-index
uncovered element with the sets that contain it tried in decreasing size
order (ties by set index). Nodes are pruned by the larger of two lower bounds:
uncovered count over the best coverage, and a greedy family of elements with
pairwise disjoint containing sets. When the node budget runs out the
incumbent is returned uncertified.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .cover_algebra import CylinderCover, JoinUniverse, join_materialize, pattern_codes
from .errors import ValidationError
from .group_model import LatticeWindow, folner_window, interval
from .series import SeriesRecord, TruncationSeries
from .symbolic_space import ShiftSpace, SlidingBlockCode, columns, count_words, language

DEFAULT_BUDGET = 1_000_000


@dataclass
class SetCoverInstance:
    universe_size: int
    sets: list[np.ndarray]
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        self.sets = [np.unique(np.asarray(s, dtype=np.int64)) for s in self.sets]
        if any(s.size == 0 for s in self.sets):
            raise ValidationError("set cover instance contains an empty set")
        covered = np.zeros(self.universe_size, dtype=bool)
        for s in self.sets:
            if s.size and (s[0] < 0 or s[-1] >= self.universe_size):
                raise ValidationError("set element outside the universe")
            covered[s] = True
        if not covered.all():
            raise ValidationError(
                f"universe element {int(np.flatnonzero(~covered)[0])} is not coverable"
            )


@dataclass
class CountResult:
    value: int
    certified: bool
    nodes: int = 0
    chosen: tuple[int, ...] = ()


def _greedy(masks: list[int], full: int) -> list[int]:
    chosen, uncovered = [], full
    while uncovered:
        best, gain = -1, 0
        for j, m in enumerate(masks):
            g = (m & uncovered).bit_count()
            if g > gain:
                best, gain = j, g
        chosen.append(best)
        uncovered &= ~masks[best]
    return chosen


ELEMENT_REDUCTION_LIMIT = 4096


def _drop_dominated_elements(masks: list[int], m: int) -> tuple[list[int], int]:
    """Remove element ``f`` when some ``e`` lies only in sets that also hold ``f``.

    Covering ``e`` then covers ``f``. Survivors keep their relative order.
    """
    sig = [0] * m
    for j, mk in enumerate(masks):
        b = mk
        while b:
            low = (b & -b).bit_length() - 1
            sig[low] |= 1 << j
            b &= b - 1
    first: dict[int, int] = {}
    for e in range(m):
        first.setdefault(sig[e], e)
    uniq = sorted(first.items(), key=lambda kv: kv[1])
    if len(uniq) <= ELEMENT_REDUCTION_LIMIT:
        keep = []
        for i, (si, e) in enumerate(uniq):
            # dominated: another signature is a strict subset of this one
            if not any(sj != si and sj | si == si for sj, _ in uniq):
                keep.append(e)
    else:
        keep = [e for _, e in uniq]
    remap = {e: i for i, e in enumerate(keep)}
    out = []
    for mk in masks:
        nm = 0
        for e, i in remap.items():
            if mk >> e & 1:
                nm |= 1 << i
        out.append(nm)
    return out, (1 << len(keep)) - 1


def min_set_cover(instance: SetCoverInstance) -> CountResult:
    m = instance.universe_size
    if m == 0:
        return CountResult(0, True)
    # forced sets: the only container of some element
    count = np.zeros(m, dtype=np.int64)
    for s in instance.sets:
        count[s] += 1
    owner = np.full(m, -1, dtype=np.int64)
    for j, s in enumerate(instance.sets):
        owner[s[count[s] == 1]] = j
    forced = sorted({int(j) for j in owner[owner >= 0]})
    covered = np.zeros(m, dtype=bool)
    for j in forced:
        covered[instance.sets[j]] = True
    rest = np.flatnonzero(~covered)
    if rest.size == 0:
        return CountResult(len(forced), True, 0, tuple(forced))

    # reduced instance on the uncovered elements, as bitmasks
    remap = np.full(m, -1, dtype=np.int64)
    remap[rest] = np.arange(rest.size)
    masks, origin = [], []
    for j, s in enumerate(instance.sets):
        local = remap[s]
        local = local[local >= 0]
        if local.size:
            masks.append(sum(1 << int(i) for i in local))
            origin.append(j)
    masks, full = _drop_dominated_elements(masks, int(rest.size))
    # drop duplicate and dominated sets; this cannot change the optimum size
    order = sorted(range(len(masks)), key=lambda j: (-masks[j].bit_count(), j))
    kept: list[int] = []
    for j in order:
        if not any(masks[j] | masks[i] == masks[i] for i in kept):
            kept.append(j)
    kept.sort()
    masks = [masks[j] for j in kept]
    origin = [origin[j] for j in kept]
    sizes = [mk.bit_count() for mk in masks]
    containing: list[list[int]] = [[] for _ in range(rest.size)]
    for j, mk in enumerate(masks):
        b = mk
        while b:
            low = (b & -b).bit_length() - 1
            containing[low].append(j)
            b &= b - 1
    for lst in containing:
        lst.sort(key=lambda j: (-sizes[j], j))
    sig = [sum(1 << j for j in lst) for lst in containing]

    best = _greedy(masks, full)
    nodes = 0
    exhausted = False
    # explicit stack of (uncovered, chosen) to avoid recursion limits
    stack = [(full, ())]
    while stack:
        uncovered, chosen = stack.pop()
        if not uncovered:
            if len(chosen) < len(best):
                best = list(chosen)
            continue
        nodes += 1
        if nodes > instance.budget:
            exhausted = True
            break
        cap = max((mk & uncovered).bit_count() for mk in masks)
        if len(chosen) + -(-uncovered.bit_count() // cap) >= len(best):
            continue
        # elements with pairwise disjoint containing sets each need their own set
        used, independent, b = 0, 0, uncovered
        while b:
            low = (b & -b).bit_length() - 1
            if not sig[low] & used:
                used |= sig[low]
                independent += 1
            b &= b - 1
        if len(chosen) + independent >= len(best):
            continue
        e = (uncovered & -uncovered).bit_length() - 1
        for j in reversed(containing[e]):
            stack.append((uncovered & ~masks[j], chosen + (j,)))
    picked = tuple(sorted(forced + [origin[j] for j in best]))
    return CountResult(len(picked), not exhausted, nodes, picked)


def cover_instance(join: JoinUniverse, atoms: np.ndarray | None = None, budget: int = DEFAULT_BUDGET) -> SetCoverInstance:
    """Set-cover instance of a join, optionally restricted to some atoms."""
    if atoms is None:
        return SetCoverInstance(join.size, join.sets, budget)
    remap = np.full(join.size, -1, dtype=np.int64)
    remap[atoms] = np.arange(atoms.size)
    sets = []
    for s in join.sets:
        local = remap[s]
        local = local[local >= 0]
        if local.size:
            sets.append(local)
    return SetCoverInstance(int(atoms.size), sets, budget)


def is_symbol_partition(shift: ShiftSpace, cover: CylinderCover) -> bool:
    """One-point base window with one element per symbol (count_words applies)."""
    return (
        shift.dimension == 1
        and len(cover.window) == 1
        and len(cover) == shift.k
        and cover.is_partition
    )


def count_join(join: JoinUniverse, partition: bool, budget: int = DEFAULT_BUDGET) -> CountResult:
    if partition:
        return CountResult(len(join.sets), True)
    return min_set_cover(cover_instance(join, budget=budget))


def n_join(shift: ShiftSpace, cover: CylinderCover, S, budget: int = DEFAULT_BUDGET) -> CountResult:
    """``N(U_S)``; partitions bypass the solver (count of nonempty cells)."""
    return count_join(join_materialize(shift, cover, S), cover.is_partition, budget)


def row_lookup(universe: np.ndarray, query: np.ndarray, k: int) -> np.ndarray:
    """Index of each query row inside the (lexicographically sorted) universe rows."""
    if universe.shape[1] == 0:
        return np.zeros(query.shape[0], dtype=np.int64)
    if k ** universe.shape[1] < 2**62:
        u, q = pattern_codes(universe, k), pattern_codes(query, k)
        pos = np.searchsorted(u, q)
        if (pos >= u.size).any() or (u[np.minimum(pos, u.size - 1)] != q).any():
            raise ValidationError("query pattern missing from the universe")
        return pos
    index = {tuple(r): i for i, r in enumerate(universe.tolist())}
    return np.array([index[tuple(r)] for r in query.tolist()], dtype=np.int64)


def fiber_groups(
    shift: ShiftSpace, code: SlidingBlockCode, U: LatticeWindow, universe: np.ndarray, V: LatticeWindow
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Joint structure of patterns on ``U`` and factor patterns on ``V``.

    Returns ``(big_words, atom_of_row, y_of_row, big_window)``: the language
    on ``U ∪ (V ⊕ code window)``, each row's index in ``universe`` (patterns
    on ``U``), and each row's factor-pattern label.
    """
    big = U.union(V.minkowski(code.window))
    lang = language(shift, big)
    atom = row_lookup(universe, lang.words[:, columns(big, U)], shift.k)
    img = code.image_words(lang.words, big, V)
    _, y = np.unique(img, axis=0, return_inverse=True)
    return lang.words, atom, y.ravel(), big


def n_conditional(
    shift: ShiftSpace,
    cover: CylinderCover,
    S,
    code: SlidingBlockCode,
    V: LatticeWindow,
    budget: int = DEFAULT_BUDGET,
) -> CountResult:
    """``max_y N(U_S | fiber over y)`` with ``y`` ranging over factor patterns on ``V``."""
    if shift.dimension != 1:
        raise ValidationError("conditional counts are one-dimensional")
    join = join_materialize(shift, cover, S)
    _, atom, y, _ = fiber_groups(shift, code, join.window, join.universe.words, V)
    best, certified, nodes = 0, True, 0
    order = np.lexsort((atom, y))
    y_sorted = y[order]
    bounds = np.searchsorted(y_sorted, np.arange(int(y.max()) + 2))
    for label in range(int(y.max()) + 1):
        fib = np.unique(atom[order[bounds[label] : bounds[label + 1]]])
        if fib.size == 0:
            continue
        if cover.is_partition:
            cells = join.cell_ids()[fib]
            r = CountResult(int(np.unique(cells).size), True)
        else:
            r = min_set_cover(cover_instance(join, fib, budget))
        best = max(best, r.value)
        certified &= r.certified
        nodes += r.nodes
    return CountResult(best, certified, nodes)


def conditioning_window(F: LatticeWindow, cover: CylinderCover, margin: int = 0) -> LatticeWindow:
    """Default factor window: the hull of ``F ⊕ W`` widened by ``margin`` on both sides."""
    hull = F.minkowski(cover.window).coords()
    return interval(min(hull) - margin, max(hull) + 1 + margin)


def h_cover_series(
    shift: ShiftSpace,
    cover: CylinderCover,
    ns,
    code: SlidingBlockCode | None = None,
    margin: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> TruncationSeries:
    """``(1/|F_n|) ln N(U_{F_n} [| Y])`` for each ``n``."""
    series = TruncationSeries("h_cover" if code is None else "h_cover_cond", "none")
    for n in ns:
        t0 = time.perf_counter()
        F = folner_window(n, shift.dimension)
        if code is None:
            if is_symbol_partition(shift, cover):
                r = CountResult(count_words(shift, F), True)
            else:
                r = n_join(shift, cover, F, budget)
            V = None
        else:
            V = conditioning_window(F, cover, margin)
            r = n_conditional(shift, cover, F, code, V, budget)
        series.add(
            SeriesRecord(n, math.log(r.value) / len(F), 0.0, r.certified, "exact",
                         time.perf_counter() - t0, None if V is None else margin)
        )
    return series
