import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intricacy.errors import ValidationError
from intricacy.group_model import LatticeWindow, folner_window
from intricacy.cover_algebra import (
    CylinderCover,
    assignment_space,
    instance_key,
    join_covers,
    join_materialize,
    lift_cover,
    refines,
    symbol_partition,
    trivial_cover,
    validate_cover,
)
from intricacy.symbolic_space import ShiftSpace, full_shift, golden_mean_shift

from oracles import GOLDEN, full, join_patterns

W0 = folner_window(1)
W01 = folner_window(2)
OVERLAP = CylinderCover.from_strings(W0, [["0", "1"], ["1", "2"]])
PAIRS = CylinderCover.from_strings(W01, [["00", "01"], ["01", "10", "11"]])
BLOCKS = CylinderCover.from_strings(W01, [["00", "01"], ["00", "10"]])


def win(*xs):
    return LatticeWindow(1, tuple((x,) for x in xs))


def sets_as_words(join):
    words = join.universe.strings()
    return sorted(tuple(sorted(words[i] for i in s)) for s in join.sets)


def test_validate_cover_examples():
    X = full_shift(2)
    rep = validate_cover(X, symbol_partition(X))
    assert rep.valid and rep.is_partition
    rep = validate_cover(X, CylinderCover.from_strings(W0, [["0", "1"]]))
    assert rep.valid and len(CylinderCover.from_strings(W0, [["0", "1"]])) == 1
    rep = validate_cover(X, CylinderCover.from_strings(W0, [["0"]]))
    assert not rep.valid and str(rep.counterexample) == "1"


def test_golden_blocks_cover_only_admissible_patterns():
    assert validate_cover(golden_mean_shift(), BLOCKS).valid
    assert not validate_cover(full_shift(2), BLOCKS).valid


def test_cover_validation_errors():
    with pytest.raises(ValidationError):
        CylinderCover.from_strings(W0, [])
    with pytest.raises(ValidationError):
        CylinderCover.from_strings(W0, [[]])
    with pytest.raises(ValidationError):
        CylinderCover.from_strings(W0, [["01"]])


def test_join_examples():
    j = join_materialize(full_shift(2), symbol_partition(full_shift(2)), W01)
    assert j.size == 4 and sets_as_words(j) == [("00",), ("01",), ("10",), ("11",)]
    j = join_materialize(golden_mean_shift(), symbol_partition(golden_mean_shift()), folner_window(3))
    assert [t for t in j.tuples] == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]
    assert all(len(s) == 1 for s in j.sets)
    j = join_materialize(full_shift(3), OVERLAP, W0)
    assert j.universe.strings() == ["0", "1", "2"]
    assert sets_as_words(j) == [("0", "1"), ("1", "2")]


@pytest.mark.parametrize("X,U", [(full_shift(2), PAIRS), (golden_mean_shift(), BLOCKS), (full_shift(3), OVERLAP)])
def test_empty_join_is_one_whole_set(X, U):
    j = join_materialize(X, U, LatticeWindow(1, ()))
    assert len(j.sets) == 1 and j.sets[0].tolist() == list(range(j.size))


CASES = [
    (full(2), PAIRS),
    (GOLDEN, BLOCKS),
    (full(3), OVERLAP),
    (full(2), CylinderCover.from_strings(win(0, 2), [["00", "01", "10"], ["11", "10"]])),
]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(CASES), st.sets(st.integers(0, 5), min_size=1, max_size=4))
def test_join_matches_brute_force(case, S):
    T, U = case
    S = sorted(S)
    X = ShiftSpace(len(T), T)
    join = join_materialize(X, U, win(*S))
    window = [p[0] for p in U.window.points]
    positions, words, choices = join_patterns(T, window, U.elements, S)
    assert [tuple(r) for r in join.universe.words.tolist()] == words
    expect = {}
    for i, ch in enumerate(choices):
        for lab in itertools.product(*ch):
            expect.setdefault(lab, []).append(i)
    assert dict(zip(join.tuples, (s.tolist() for s in join.sets))) == expect
    covered = np.zeros(join.size, dtype=bool)
    for s in join.sets:
        covered[s] = True
    assert covered.all()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.sets(st.integers(0, 6), min_size=1, max_size=5))
def test_partition_joins_are_partitions(k, S):
    X = full_shift(k)
    j = join_materialize(X, symbol_partition(X), win(*sorted(S)))
    counts = np.zeros(j.size, dtype=int)
    for s in j.sets:
        counts[s] += 1
    assert (counts == 1).all()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(CASES), st.sets(st.integers(0, 5), min_size=1, max_size=4), st.integers(-7, 7))
def test_join_translation(case, S, g):
    T, U = case
    X = ShiftSpace(len(T), T)
    a = join_materialize(X, U, win(*sorted(S)))
    b = join_materialize(X, U, win(*sorted(x + g for x in S)))
    assert a.size == b.size
    assert sorted(len(s) for s in a.sets) == sorted(len(s) for s in b.sets)


def test_refines_examples():
    X3 = full_shift(3)
    assert refines(symbol_partition(X3), OVERLAP)
    assert refines(OVERLAP, trivial_cover(X3))
    assert refines(PAIRS, trivial_cover(full_shift(2)), full_shift(2))
    assert not refines(OVERLAP, symbol_partition(X3))


def test_refines_on_admissible_patterns_only():
    # on the golden mean shift the pattern 11 never occurs, so these agree
    a = CylinderCover.from_strings(W01, [["00", "01", "11"], ["10"]])
    b = CylinderCover.from_strings(W01, [["00", "01"], ["10", "11"]])
    assert not refines(a, b)
    assert refines(a, b, golden_mean_shift())


@settings(max_examples=30, deadline=None)
@given(st.sets(st.integers(0, 4), min_size=1, max_size=4))
def test_refinement_carries_to_joins(S):
    # every set of the finer join lies inside some set of the coarser join
    X = full_shift(3)
    Sw = win(*sorted(S))
    fine = join_materialize(X, symbol_partition(X), Sw)
    coarse = join_materialize(X, OVERLAP, Sw)
    boxes = [set(s.tolist()) for s in coarse.sets]
    assert all(any(set(s.tolist()) <= b for b in boxes) for s in fine.sets)


def test_assignment_space_examples():
    X3 = full_shift(3)
    assert assignment_space(X3, symbol_partition(X3), folner_window(4)).size == 1
    sp = assignment_space(X3, OVERLAP, W0)
    assert [len(c) for c in sp.choices] == [1, 2, 1] and sp.size == 2
    sp = assignment_space(X3, OVERLAP, W01)
    # a word with j ones has 2^j join tuples, so the product over the 9 words is 2^(0+1+0+1+2+1+0+1+0)
    brute = math.prod(2 ** w.count("1") for w in (a + b for a in "012" for b in "012"))
    assert sp.size == brute == 64
    assert sp.log2_size == 6.0


def test_assignment_partition_cells():
    sp = assignment_space(full_shift(3), OVERLAP, W0)
    cells = sp.partition([0, 1, 1])
    assert [c.tolist() for c in cells] == [[0], [1, 2]]


def test_join_covers_and_lift():
    X = full_shift(2)
    j = join_covers(PAIRS, symbol_partition(X), 2)
    assert j.window == W01
    assert refines(j, PAIRS) and refines(j, symbol_partition(X), X)
    lifted = lift_cover(symbol_partition(X), W01, 2)
    assert sorted(sorted(e) for e in lifted.elements) == [[(0, 0), (0, 1)], [(1, 0), (1, 1)]]
    with pytest.raises(ValidationError):
        lift_cover(PAIRS, W0, 2)


def test_instance_keys():
    X = full_shift(2)
    U = symbol_partition(X)
    assert instance_key(X, U, win(0, 2), True) == instance_key(X, U, win(0, 1), True)
    assert instance_key(X, U, win(0, 2), False) != instance_key(X, U, win(0, 1), False)
    assert instance_key(X, U, win(3, 5), False) == instance_key(X, U, win(0, 2), False)
    G = golden_mean_shift()
    assert instance_key(G, symbol_partition(G), win(0, 2), True)[0] == "tr"
