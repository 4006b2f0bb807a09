"""Covers of a shift space by unions of cylinders, and their joins.

A cover lives on a base window ``W``: each element is a set of patterns on
``W``, standing for the union of the corresponding cylinders. The pullback
``g^{-1}U`` is realized as the same cylinders translated by ``+g``, so the
join ``U_S`` over a subset ``S`` is a cover of the language on ``S ⊕ W``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .group_model import LatticeWindow, SubsetMask
from .symbolic_space import Language, Pattern, ShiftSpace, columns, language


@dataclass(frozen=True, eq=False)
class CylinderCover:
    """Finite family of cylinder unions on ``window``.

    ``elements[i]`` is a frozenset of symbol tuples (patterns on ``window``).
    """

    window: LatticeWindow
    elements: tuple[frozenset, ...]
    name: str = ""
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        elems = tuple(frozenset(tuple(int(s) for s in p) for p in e) for e in self.elements)
        if not elems:
            raise ValidationError("a cover needs at least one element")
        for i, e in enumerate(elems):
            if not e:
                raise ValidationError(f"cover element {i} is empty")
            for p in e:
                if len(p) != len(self.window):
                    raise ValidationError(f"pattern {p} does not fit the base window")
        object.__setattr__(self, "elements", elems)

    @classmethod
    def from_strings(cls, window: LatticeWindow, elements, name: str = "") -> "CylinderCover":
        return cls(window, tuple(frozenset(tuple(int(c) for c in w) for w in e) for e in elements), name)

    @property
    def is_partition(self) -> bool:
        seen: set = set()
        for e in self.elements:
            if seen & e:
                return False
            seen |= e
        return True

    def __len__(self) -> int:
        return len(self.elements)

    def membership(self, k: int) -> np.ndarray:
        """Boolean ``(elements, k^|W|)`` table indexed by base-``k`` pattern code."""
        key = ("member", k)
        if key not in self._cache:
            w = len(self.window)
            table = np.zeros((len(self.elements), k**w), dtype=bool)
            for i, e in enumerate(self.elements):
                for p in e:
                    if max(p, default=0) >= k:
                        raise ValidationError(f"pattern {p} uses symbols outside the alphabet")
                    code = 0
                    for s in p:
                        code = code * k + s
                    table[i, code] = True
            self._cache[key] = table
        return self._cache[key]


def symbol_partition(shift: ShiftSpace) -> CylinderCover:
    """The time-zero partition ``{[0], [1], ..., [k-1]}``."""
    origin = LatticeWindow(shift.dimension, ((0,) * shift.dimension,))
    return CylinderCover(origin, tuple(frozenset({(s,)}) for s in range(shift.k)), "symbols")


def trivial_cover(shift: ShiftSpace) -> CylinderCover:
    """The one-element cover ``{X}``."""
    origin = LatticeWindow(shift.dimension, ((0,) * shift.dimension,))
    return CylinderCover(origin, (frozenset((s,) for s in range(shift.k)),), "trivial")


@dataclass
class CoverReport:
    valid: bool
    is_partition: bool
    counterexample: Pattern | None = None
    message: str = ""


def validate_cover(shift: ShiftSpace, cover: CylinderCover) -> CoverReport:
    lang = language(shift, cover.window)
    member = cover.membership(shift.k)
    codes = pattern_codes(lang.words, shift.k)
    hit = member[:, codes].any(axis=0)
    if not hit.all():
        bad = int(np.flatnonzero(~hit)[0])
        pat = Pattern(cover.window, tuple(lang.words[bad]))
        return CoverReport(False, cover.is_partition, pat, f"pattern {pat} is not covered")
    return CoverReport(True, cover.is_partition)


def pattern_codes(words: np.ndarray, k: int) -> np.ndarray:
    """Base-``k`` code of each row, most significant column first."""
    code = np.zeros(words.shape[0], dtype=np.int64)
    for j in range(words.shape[1]):
        code = code * k + words[:, j]
    return code


def _as_window(S) -> LatticeWindow:
    return S.as_window() if isinstance(S, SubsetMask) else S


@dataclass(eq=False)
class JoinUniverse:
    """The join ``U_S``: universe patterns on ``S ⊕ W`` and the covered sets.

    ``sets[j]`` is the sorted array of universe indices lying in the join
    element labelled by ``tuples[j]`` (one cover-element index per point of
    ``S``); empty join elements are omitted.
    """

    subset: LatticeWindow
    window: LatticeWindow
    universe: Language
    tuples: list[tuple[int, ...]]
    sets: list[np.ndarray]

    @property
    def size(self) -> int:
        return len(self.universe)

    def choice_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(atom, set) incidence pairs sorted by atom, then set index."""
        atoms = np.concatenate(self.sets) if self.sets else np.zeros(0, dtype=np.int64)
        labels = np.repeat(np.arange(len(self.sets)), [len(s) for s in self.sets])
        order = np.lexsort((labels, atoms))
        return atoms[order], labels[order]

    def cell_ids(self) -> np.ndarray:
        """Cell label of every atom; only valid when the sets are disjoint."""
        ids = np.full(self.size, -1, dtype=np.int64)
        for j, s in enumerate(self.sets):
            ids[s] = j
        if (ids < 0).any():
            raise ValidationError("join does not cover its universe")
        return ids


def element_ids(shift: ShiftSpace, cover: CylinderCover, words: np.ndarray, U: LatticeWindow, g) -> np.ndarray:
    """Membership ``(elements, rows)`` of each row's restriction to ``g + W``."""
    cols = columns(U, cover.window.translate(g))
    return cover.membership(shift.k)[:, pattern_codes(words[:, cols], shift.k)]


def join_materialize(shift: ShiftSpace, cover: CylinderCover, S) -> JoinUniverse:
    S = _as_window(S)
    if S.dimension != cover.window.dimension:
        raise ValidationError("subset and cover dimensions differ")
    U = S.minkowski(cover.window) if len(S) else S
    lang = language(shift, U)
    m = len(lang)
    if not len(S):
        return JoinUniverse(S, U, lang, [()], [np.arange(m)])
    masks = [element_ids(shift, cover, lang.words, U, g) for g in S.points]
    if cover.is_partition:
        ids = np.stack([mk.argmax(axis=0) for mk in masks], axis=1)
        cells, inverse = np.unique(ids, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(len(cells) + 1))
        sets = [order[bounds[j] : bounds[j + 1]] for j in range(len(cells))]
        return JoinUniverse(S, U, lang, [tuple(int(c) for c in row) for row in cells], sets)
    tuples: list[tuple[int, ...]] = []
    sets: list[np.ndarray] = []
    ne = len(cover)

    def rec(depth: int, idx: np.ndarray, label: tuple[int, ...]):
        if depth == len(masks):
            tuples.append(label)
            sets.append(idx)
            return
        mk = masks[depth]
        for e in range(ne):
            sub = idx[mk[e, idx]]
            if sub.size:
                rec(depth + 1, sub, label + (e,))

    rec(0, np.arange(m), ())
    return JoinUniverse(S, U, lang, tuples, sets)


def lift_cover(cover: CylinderCover, window: LatticeWindow, k: int) -> CylinderCover:
    """Re-express ``cover`` on a larger base window (all ``k``-ary fillings)."""
    if not cover.window.issubset(window):
        raise ValidationError("lift target must contain the base window")
    cols = columns(window, cover.window)
    elems: list[set] = [set() for _ in cover.elements]
    for word in itertools.product(range(k), repeat=len(window)):
        sub = tuple(word[c] for c in cols)
        for i, e in enumerate(cover.elements):
            if sub in e:
                elems[i].add(word)
    return CylinderCover(window, tuple(frozenset(e) for e in elems), cover.name)


def join_covers(a: CylinderCover, b: CylinderCover, k: int) -> CylinderCover:
    """``a ∨ b``: nonempty pairwise intersections, on the union of the base windows."""
    w = a.window.union(b.window)
    la, lb = lift_cover(a, w, k), lift_cover(b, w, k)
    elems = [ea & eb for ea in la.elements for eb in lb.elements if ea & eb]
    return CylinderCover(w, tuple(dict.fromkeys(elems)), f"{a.name}v{b.name}")


def refines(a: CylinderCover, b: CylinderCover, shift: ShiftSpace | None = None) -> bool:
    """True iff every element of ``a`` lies inside some element of ``b``.

    Covers on different base windows are lifted to the union window. With a
    ``shift``, containment is tested on admissible patterns only.
    """
    if a.window.dimension != b.window.dimension:
        raise ValidationError("covers live in different dimensions")
    if a.window.points != b.window.points:
        if a.window.dimension != 1 and shift is None:
            raise ValidationError("lifting a d=2 cover requires the shift")
        k = shift.k if shift is not None else 1 + max(s for e in a.elements + b.elements for p in e for s in p)
        w = a.window.union(b.window)
        a, b = lift_cover(a, w, k), lift_cover(b, w, k)
    admissible = None
    if shift is not None:
        admissible = {tuple(r) for r in language(shift, a.window).words.tolist()}
    for e in a.elements:
        e = e if admissible is None else e & admissible
        if not any(e <= (f if admissible is None else f & admissible) for f in b.elements):
            return False
    return True


@dataclass(eq=False)
class AssignmentSpace:
    """Deterministic atom-to-element assignments of a join.

    ``choices[p]`` lists the join elements (indices into ``join.sets``) that
    contain atom ``p``.
    """

    join: JoinUniverse
    choices: list[np.ndarray]

    @property
    def atoms(self) -> Language:
        return self.join.universe

    @property
    def size(self) -> int:
        return math.prod(len(c) for c in self.choices)

    @property
    def log2_size(self) -> float:
        return float(sum(math.log2(len(c)) for c in self.choices))

    def partition(self, assignment) -> list[np.ndarray]:
        """Cells ``{p : assignment[p] = i}`` for every join element ``i``."""
        a = np.asarray(assignment)
        return [np.flatnonzero(a == i) for i in range(len(self.join.sets))]


def assignment_space(shift: ShiftSpace, cover: CylinderCover, S) -> AssignmentSpace:
    join = join_materialize(shift, cover, S)
    atoms, labels = join.choice_pairs()
    bounds = np.searchsorted(atoms, np.arange(join.size + 1))
    return AssignmentSpace(join, [labels[bounds[p] : bounds[p + 1]] for p in range(join.size)])


def instance_key(shift: ShiftSpace, cover: CylinderCover, S: LatticeWindow, exchangeable: bool):
    """Hashable key under which join-derived quantities over ``S`` coincide.

    Always valid: ``S`` translated to start at the origin. On a full shift
    with an exchangeable measure (or none), only the incidence of the
    translates ``g + W`` inside ``S ⊕ W`` matters, so gaps are forgotten.
    """
    if not len(S):
        return ("empty",)
    if exchangeable and shift.is_full:
        U = S.minkowski(cover.window)
        return ("inc",) + tuple(
            tuple(U.index(p) for p in cover.window.translate(g).points) for g in S.points
        )
    return ("tr",) + S.normalized().points
