"""Shift spaces, their finite-window languages, and sliding block codes.

One-dimensional shifts are nearest-neighbour SFTs given by a 0/1 transition
matrix; languages are exact (globally admissible patterns). Two-dimensional
shifts use horizontal/vertical transition matrices and a halo-based local
admissibility test, which over-approximates the true language unless the
shift is full.

Patterns on a window are stored as rows of an integer array whose columns
follow the window's canonical point order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeLimitError, ValidationError
from .group_model import LatticeWindow, interval

LANGUAGE_LIMIT = 10_000_000
WINDOW_LIMIT = 64
INT64_SAFE = 2**62


def _symbol_dtype(k: int):
    return np.int8 if k <= 127 else np.int32


def _check_matrix(m, k: int, name: str) -> np.ndarray:
    a = np.asarray(m, dtype=np.int64)
    if a.shape != (k, k):
        raise ValidationError(f"{name} must be {k}x{k}, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise ValidationError(f"{name} entries must be 0 or 1")
    for s in range(k):
        if not a[s].any():
            raise ValidationError(f"{name}: symbol {s} has no allowed successor")
        if not a[:, s].any():
            raise ValidationError(f"{name}: symbol {s} has no allowed predecessor")
    return a


@dataclass(frozen=True, eq=False)
class ShiftSpace:
    """Nearest-neighbour shift of finite type over the alphabet ``0..k-1``.

    For ``dimension == 1`` only ``transitions`` is used: entry ``(i, j)`` is 1
    iff ``j`` may follow ``i``. For ``dimension == 2``, ``transitions`` is the
    horizontal rule (``j`` right of ``i``) and ``vertical`` the vertical one
    (``j`` above ``i``); ``halo`` sets the local-admissibility margin.
    """

    k: int
    transitions: np.ndarray
    dimension: int = 1
    vertical: np.ndarray | None = None
    halo: int = 2
    name: str = ""
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("alphabet size must be >= 1")
        if self.dimension not in (1, 2):
            raise ValidationError("dimension must be 1 or 2")
        object.__setattr__(self, "transitions", _check_matrix(self.transitions, self.k, "transitions"))
        if self.dimension == 2:
            v = self.transitions if self.vertical is None else self.vertical
            object.__setattr__(self, "vertical", _check_matrix(v, self.k, "vertical"))
        if self.halo < 0:
            raise ValidationError("halo must be >= 0")

    @property
    def is_full(self) -> bool:
        full = bool(self.transitions.all())
        if self.dimension == 2:
            full = full and bool(self.vertical.all())
        return full

    @property
    def exact_languages(self) -> bool:
        """False when languages are only locally admissible (d=2, non-full)."""
        return self.dimension == 1 or self.is_full

    def reach(self, gap: int) -> np.ndarray:
        """Boolean matrix: ``b`` can sit ``gap`` steps after ``a`` (d=1)."""
        key = ("reach", gap)
        if key not in self._cache:
            if gap < 1:
                raise ValidationError("gap must be >= 1")
            a = self.transitions.astype(bool)
            r = a
            for _ in range(gap - 1):
                r = (r.astype(np.int64) @ self.transitions) > 0
            self._cache[key] = r
        return self._cache[key]


def full_shift(k: int, dimension: int = 1) -> ShiftSpace:
    ones = np.ones((k, k), dtype=np.int64)
    return ShiftSpace(k, ones, dimension, ones if dimension == 2 else None, name=f"full{k}")


def golden_mean_shift(dimension: int = 1, halo: int = 2) -> ShiftSpace:
    """Binary sequences (or arrays) with no two adjacent 1s."""
    m = np.array([[1, 1], [1, 0]])
    return ShiftSpace(2, m, dimension, m if dimension == 2 else None, halo=halo, name="golden_mean")


@dataclass(frozen=True)
class Pattern:
    window: LatticeWindow
    symbols: tuple[int, ...]

    def __post_init__(self):
        if len(self.symbols) != len(self.window):
            raise ValidationError("pattern needs exactly one symbol per window point")
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    @classmethod
    def from_string(cls, window: LatticeWindow, word: str) -> "Pattern":
        return cls(window, tuple(int(c) for c in word))

    def restrict(self, sub: LatticeWindow) -> "Pattern":
        return Pattern(sub, tuple(self.symbols[self.window.index(p)] for p in sub.points))

    def __str__(self) -> str:
        return "".join(str(s) for s in self.symbols)


@dataclass(frozen=True, eq=False)
class Language:
    """Distinct admissible patterns on ``window`` as rows of ``words``.

    ``approximate`` marks locally admissible (over-approximated) languages.
    """

    window: LatticeWindow
    words: np.ndarray
    approximate: bool = False

    def __len__(self) -> int:
        return int(self.words.shape[0])

    def patterns(self) -> list[Pattern]:
        return [Pattern(self.window, tuple(row)) for row in self.words.tolist()]

    def strings(self) -> list[str]:
        return ["".join(str(s) for s in row) for row in self.words.tolist()]

    def index_of(self) -> dict[tuple[int, ...], int]:
        return {tuple(row): i for i, row in enumerate(self.words.tolist())}


def columns(window: LatticeWindow, sub: LatticeWindow) -> np.ndarray:
    """Column indices of ``sub``'s points inside ``window``."""
    try:
        return np.array([window.index(p) for p in sub.points], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"point {exc.args[0]} is not in the window") from None


def unique_rows(words: np.ndarray) -> np.ndarray:
    if words.shape[0] == 0 or words.shape[1] == 0:
        return words[: min(1, words.shape[0])]
    return np.unique(words, axis=0)


def project(lang: Language, sub: LatticeWindow) -> Language:
    """Restriction of every pattern to ``sub``, deduplicated."""
    cols = columns(lang.window, sub)
    return Language(sub, unique_rows(lang.words[:, cols]), lang.approximate)


def _language_1d(shift: ShiftSpace, window: LatticeWindow, limit: int) -> np.ndarray:
    xs = window.coords()
    dt = _symbol_dtype(shift.k)
    if not xs:
        return np.zeros((1, 0), dtype=dt)
    words = np.arange(shift.k, dtype=dt)[:, None]
    for prev, cur in zip(xs, xs[1:]):
        r = shift.reach(cur - prev)
        m = words.shape[0]
        ext = np.repeat(words, shift.k, axis=0)
        nxt = np.tile(np.arange(shift.k, dtype=dt), m)
        keep = r[ext[:, -1], nxt]
        words = np.concatenate([ext[keep], nxt[keep, None]], axis=1)
        if words.shape[0] > limit:
            raise SizeLimitError(f"language on {len(window)} points exceeds {limit} patterns")
    return words


def _neighbours_2d(points) -> list[tuple[int, int, int]]:
    """(i, j, kind) pairs of canonical indices; kind 0 = horizontal, 1 = vertical."""
    idx = {p: i for i, p in enumerate(points)}
    out = []
    for (x, y), i in idx.items():
        if (x + 1, y) in idx:
            out.append((i, idx[(x + 1, y)], 0))
        if (x, y + 1) in idx:
            out.append((i, idx[(x, y + 1)], 1))
    return out


def _backtrack_2d(shift: ShiftSpace, points, fixed: dict[int, int]):
    """Lazily yield locally admissible fillings of ``points`` (canonical order)."""
    n = len(points)
    rules = (shift.transitions.astype(bool), shift.vertical.astype(bool))
    # each constraint is checked when the later of its two cells is assigned
    earlier: list[list[tuple[int, int, bool]]] = [[] for _ in range(n)]
    for i, j, kind in _neighbours_2d(points):
        lo, hi = min(i, j), max(i, j)
        earlier[hi].append((lo, kind, lo == i))
    assign = [-1] * n

    def consistent(pos: int, sym: int) -> bool:
        for other, kind, other_is_src in earlier[pos]:
            a = assign[other]
            if not (rules[kind][a, sym] if other_is_src else rules[kind][sym, a]):
                return False
        return True

    def rec(pos: int):
        if pos == n:
            yield list(assign)
            return
        for s in ([fixed[pos]] if pos in fixed else range(shift.k)):
            if consistent(pos, s):
                assign[pos] = s
                yield from rec(pos + 1)
        assign[pos] = -1

    yield from rec(0)


def _language_2d(shift: ShiftSpace, window: LatticeWindow, limit: int) -> np.ndarray:
    dt = _symbol_dtype(shift.k)
    m = len(window)
    if m == 0:
        return np.zeros((1, 0), dtype=dt)
    if shift.is_full:
        if shift.k**m > limit:
            raise SizeLimitError(f"language on {m} points exceeds {limit} patterns")
        return np.array(list(itertools.product(range(shift.k), repeat=m)), dtype=dt)
    pts = list(window.points)
    cands = []
    for fill in _backtrack_2d(shift, pts, {}):
        cands.append(fill)
        if len(cands) > limit:
            raise SizeLimitError(f"language on {m} points exceeds {limit} patterns")
    (x0, y0), (x1, y1) = window.bounding_box()
    h = shift.halo
    box = [(x, y) for x in range(x0 - h, x1 + h + 1) for y in range(y0 - h, y1 + h + 1)]
    pos = {p: i for i, p in enumerate(box)}
    where = [pos[p] for p in pts]
    out = []
    for fill in cands:
        fixed = dict(zip(where, fill))
        if next(_backtrack_2d(shift, box, fixed), None) is not None:
            out.append(fill)
    return np.array(out, dtype=dt).reshape(len(out), m)


def language(shift: ShiftSpace, window: LatticeWindow, limit: int = LANGUAGE_LIMIT) -> Language:
    """Admissible patterns on ``window`` in lexicographic order."""
    if window.dimension != shift.dimension:
        raise ValidationError("window and shift dimensions differ")
    if len(window) > WINDOW_LIMIT:
        raise SizeLimitError(f"window of {len(window)} points exceeds {WINDOW_LIMIT}")
    if shift.dimension == 1:
        words = _language_1d(shift, window, limit)
    else:
        words = _language_2d(shift, window, limit)
    if words.shape[0] == 0:
        raise ValidationError("empty language: transition data is inconsistent")
    return Language(window, words, approximate=not shift.exact_languages)


def count_words(shift: ShiftSpace, window: LatticeWindow) -> int:
    """Number of admissible patterns on ``window`` without materializing them."""
    if shift.dimension != 1:
        raise ValidationError("count_words supports d=1 only; materialize the language instead")
    xs = window.coords()
    if not xs:
        return 1
    big = shift.k ** len(xs) >= INT64_SAFE
    v = np.ones(shift.k, dtype=object if big else np.int64)
    for prev, cur in zip(xs, xs[1:]):
        r = shift.reach(cur - prev)
        v = v @ r.astype(v.dtype)
    return int(v.sum())


@dataclass(frozen=True, eq=False)
class SlidingBlockCode:
    """One-sided block map: output at ``p`` is ``rule[x_p ... x_{p+r-1}]``.

    ``rule`` is indexed by the source block read as a base-``source_k``
    number, most significant symbol first (lexicographic order).
    """

    source_k: int
    target_k: int
    radius: int
    rule: np.ndarray
    name: str = ""

    def __post_init__(self):
        rule = np.asarray(self.rule, dtype=np.int64).ravel()
        if self.radius < 1:
            raise ValidationError("code window length must be >= 1")
        if rule.size != self.source_k**self.radius:
            raise ValidationError(
                f"rule table needs {self.source_k ** self.radius} entries, got {rule.size}"
            )
        if rule.min() < 0 or rule.max() >= self.target_k:
            raise ValidationError("rule table has symbols outside the target alphabet")
        object.__setattr__(self, "rule", rule)

    @property
    def window(self) -> LatticeWindow:
        return interval(0, self.radius)

    def image_words(self, words: np.ndarray, src: LatticeWindow, out: LatticeWindow) -> np.ndarray:
        """Apply the rule to every row of ``words`` (on ``src``) at each point of ``out``."""
        dt = _symbol_dtype(self.target_k)
        res = np.empty((words.shape[0], len(out)), dtype=dt)
        idx = {p[0]: i for i, p in enumerate(src.points)}
        for j, (p,) in enumerate(out.points):
            try:
                cols = [idx[p + t] for t in range(self.radius)]
            except KeyError:
                raise ValidationError(f"source window does not contain {p}..{p + self.radius - 1}") from None
            code = np.zeros(words.shape[0], dtype=np.int64)
            for c in cols:
                code = code * self.source_k + words[:, c]
            res[:, j] = self.rule[code]
        return res


def identity_code(k: int) -> SlidingBlockCode:
    return SlidingBlockCode(k, k, 1, np.arange(k), name="identity")


def constant_code(k: int, radius: int = 1) -> SlidingBlockCode:
    return SlidingBlockCode(k, 1, radius, np.zeros(k**radius, dtype=np.int64), name="constant")


def xor_code() -> SlidingBlockCode:
    return SlidingBlockCode(2, 2, 2, np.array([0, 1, 1, 0]), name="xor")


def apply_code(code: SlidingBlockCode, pattern: Pattern, out: LatticeWindow) -> Pattern:
    """Image of ``pattern`` on ``out``; ``pattern.window`` must contain ``out ⊕ code window``."""
    words = np.array([pattern.symbols], dtype=np.int64)
    return Pattern(out, tuple(code.image_words(words, pattern.window, out)[0]))


def image_language(code: SlidingBlockCode, shift: ShiftSpace, window: LatticeWindow) -> Language:
    """Distinct images on ``window`` of the source language on ``window ⊕ code window``."""
    if shift.dimension != 1:
        raise ValidationError("sliding block codes are one-dimensional")
    src = window.minkowski(code.window)
    lang = language(shift, src)
    return Language(window, unique_rows(code.image_words(lang.words, src, window)))


def fiber_language(
    code: SlidingBlockCode, shift: ShiftSpace, source: LatticeWindow, y: Pattern
) -> Language:
    """Patterns on ``source`` extendable to a point whose image on ``y.window`` is ``y``.

    Returns an empty language when ``y`` is not in the image.
    """
    if shift.dimension != 1:
        raise ValidationError("sliding block codes are one-dimensional")
    universe = source.union(y.window.minkowski(code.window))
    lang = language(shift, universe)
    img = code.image_words(lang.words, universe, y.window)
    keep = (img == np.asarray(y.symbols, dtype=img.dtype)).all(axis=1)
    cols = columns(universe, source)
    return Language(source, unique_rows(lang.words[keep][:, cols]))
