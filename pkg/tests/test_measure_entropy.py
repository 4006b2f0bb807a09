import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from intricacy.cover_algebra import CylinderCover, assignment_space, symbol_partition, trivial_cover
from intricacy.errors import ValidationError
from intricacy.group_model import LatticeWindow, folner_window
from intricacy.measure_entropy import (
    Bernoulli,
    FactorJoint,
    Markov,
    check_support,
    ConditionalPartitionTable,
    conditional_partition_entropy,
    cover_entropy,
    fractional_entropy,
    marginal,
    mixture_combine,
    partition_entropy,
)
from intricacy.subcover_counting import conditioning_window, n_conditional, n_join
from intricacy.symbolic_space import constant_code, full_shift, golden_mean_shift, identity_code, xor_code

from oracles import GOLDEN, bernoulli_marginal, cover_entropy_brute, entropy, full, markov_marginal

W0 = folner_window(1)
W01 = folner_window(2)
OVERLAP = CylinderCover.from_strings(W0, [["0", "1"], ["1", "2"]])
PAIRS = CylinderCover.from_strings(W01, [["00", "01"], ["01", "10", "11"]])
BLOCKS = CylinderCover.from_strings(W01, [["00", "01"], ["00", "10"]])
PI, P = (2 / 3, 1 / 3), ((0.5, 0.5), (1.0, 0.0))
GOLDEN_MARKOV = Markov(PI, P)
FAIR = Bernoulli([0.5, 0.5])
THIRDS = Bernoulli([1 / 3] * 3)


def win(*xs):
    return LatticeWindow(1, tuple((x,) for x in xs))


def as_dict(dist):
    return dict(zip(map(tuple, dist.language.words.tolist()), dist.probs.tolist()))


def test_marginal_examples():
    d = marginal(full_shift(2), FAIR, folner_window(3))
    assert np.allclose(d.probs, 1 / 8, atol=1e-15) and len(d.probs) == 8
    g = as_dict(marginal(golden_mean_shift(), GOLDEN_MARKOV, W01))
    assert g[(0, 1)] == pytest.approx(1 / 3, abs=1e-15)
    g = as_dict(marginal(golden_mean_shift(), GOLDEN_MARKOV, win(0, 2)))
    assert g[(1, 1)] == pytest.approx(1 / 6, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.sets(st.integers(0, 6), min_size=1, max_size=5))
def test_markov_marginal_matches_path_sum(S):
    S = sorted(S)
    got = as_dict(marginal(golden_mean_shift(), GOLDEN_MARKOV, win(*S)))
    expect = markov_marginal(PI, P, S)
    assert set(got) == set(expect)
    assert all(abs(got[w] - expect[w]) <= 1e-12 for w in got)


def test_measure_validation():
    with pytest.raises(ValidationError):
        Bernoulli([0.5, 0.6])
    with pytest.raises(ValidationError):
        Markov((0.5, 0.5), P)
    with pytest.raises(ValidationError):
        Markov((0.5, 0.5), ((0.5, 0.4), (0.5, 0.5)))
    with pytest.raises(ValidationError):
        check_support(golden_mean_shift(), Markov((0.5, 0.5), ((0.5, 0.5), (0.5, 0.5))))
    with pytest.raises(ValidationError):
        check_support(golden_mean_shift(), FAIR)
    m = Markov.from_matrix(P)
    assert np.allclose(m.pi, PI, atol=1e-12)


def test_partition_entropy_examples():
    X2 = full_shift(2)
    assert partition_entropy(X2, FAIR, symbol_partition(X2), folner_window(3)) == pytest.approx(3 * math.log(2), abs=1e-12)
    assert partition_entropy(X2, FAIR, symbol_partition(X2), LatticeWindow(1, ())) == 0.0
    G = golden_mean_shift()
    assert partition_entropy(G, GOLDEN_MARKOV, symbol_partition(G), W01) == pytest.approx(math.log(3), abs=1e-12)
    with pytest.raises(ValidationError):
        partition_entropy(full_shift(3), THIRDS, OVERLAP, W0)


@settings(max_examples=30, deadline=None)
@given(st.sets(st.integers(0, 5), min_size=1, max_size=4), st.integers(1, 6))
def test_partition_entropy_shift_invariant(S, g):
    G = golden_mean_shift()
    a = partition_entropy(G, GOLDEN_MARKOV, symbol_partition(G), win(*sorted(S)))
    b = partition_entropy(G, GOLDEN_MARKOV, symbol_partition(G), win(*sorted(x + g for x in S)))
    assert abs(a - b) <= 1e-12
    assert abs(a - entropy(markov_marginal(PI, P, sorted(S)).values())) <= 1e-12


def test_conditional_examples():
    X2 = full_shift(2)
    P2 = symbol_partition(X2)
    S = W01
    V = conditioning_window(S, P2)
    assert conditional_partition_entropy(X2, FAIR, P2, S, identity_code(2), V) == pytest.approx(0, abs=1e-12)
    assert conditional_partition_entropy(X2, FAIR, P2, S, constant_code(2), V) == pytest.approx(
        partition_entropy(X2, FAIR, P2, S), abs=1e-12)
    assert conditional_partition_entropy(X2, FAIR, P2, S, xor_code(), win(0, 1)) == pytest.approx(math.log(2), abs=1e-12)


def test_conditional_nonincreasing_along_schedule():
    G = golden_mean_shift()
    U = symbol_partition(G)
    code = xor_code()
    for n in range(1, 5):
        F = folner_window(n)
        vals = [conditional_partition_entropy(G, GOLDEN_MARKOV, U, F, code, conditioning_window(F, U, m))
                for m in range(4)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2), st.integers(1, 63), st.sampled_from(["xor", "identity", "constant"]),
       st.booleans())
def test_shared_conditional_table_matches_direct(n, margin, bits, code_name, golden):
    X = golden_mean_shift() if golden else full_shift(2)
    mu = GOLDEN_MARKOV if golden else Bernoulli([0.3, 0.7])
    U = symbol_partition(X) if golden else CylinderCover.from_strings(W01, [["00", "01"], ["10", "11"]])
    code = {"xor": xor_code(), "identity": identity_code(2), "constant": constant_code(2)}[code_name]
    F = folner_window(n)
    V = conditioning_window(F, U, margin)
    table = ConditionalPartitionTable(X, mu, U, F, code, V)
    S = win(*[i for i in range(n) if bits >> i & 1]) if bits % (1 << n) else F
    assert table.entropy(S) == pytest.approx(conditional_partition_entropy(X, mu, U, S, code, V), abs=1e-12)


def test_cover_entropy_examples():
    X3 = full_shift(3)
    r = cover_entropy(X3, THIRDS, OVERLAP, W0)
    assert r.certified and r.value == pytest.approx(math.log(3) - 2 / 3 * math.log(2), abs=1e-12)
    assert r.value == pytest.approx(cover_entropy_brute(full(3), [0], OVERLAP.elements, [0], lambda w: 1 / 3), abs=1e-12)
    r = cover_entropy(X3, THIRDS, symbol_partition(X3), W01)
    assert r.certified and r.value == pytest.approx(partition_entropy(X3, THIRDS, symbol_partition(X3), W01), abs=1e-12)
    with_x = CylinderCover.from_strings(W0, [["0"], ["0", "1", "2"]])
    assert cover_entropy(X3, THIRDS, with_x, folner_window(4)).value == pytest.approx(0, abs=1e-12)
    assert cover_entropy(X3, THIRDS, trivial_cover(X3), folner_window(3)).value == pytest.approx(0, abs=1e-12)


CASES = [
    (full(3), OVERLAP, full_shift(3), Bernoulli([0.2, 0.5, 0.3])),
    (full(2), PAIRS, full_shift(2), Bernoulli([0.7, 0.3])),
    (GOLDEN, BLOCKS, golden_mean_shift(), GOLDEN_MARKOV),
]


def oracle_prob(T, measure):
    if isinstance(measure, Bernoulli):
        return lambda at: math.prod(measure.p[s] for s in at.values())
    return lambda at: markov_marginal(PI, P, sorted(at))[tuple(at[x] for x in sorted(at))]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(CASES), st.sets(st.integers(0, 3), min_size=1, max_size=2))
def test_cover_entropy_matches_brute_force(case, S):
    T, U, X, mu = case
    S = sorted(S)
    r = cover_entropy(X, mu, U, win(*S))
    window = [p[0] for p in U.window.points]
    assert r.certified
    assert r.value == pytest.approx(cover_entropy_brute(T, window, U.elements, S, oracle_prob(T, mu)), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(CASES), st.sets(st.integers(0, 4), min_size=1, max_size=3))
def test_cover_entropy_bounds(case, S):
    _, U, X, mu = case
    Sw = win(*sorted(S))
    r = cover_entropy(X, mu, U, Sw)
    n = n_join(X, U, Sw)
    assume(r.certified and n.certified)
    assert -1e-12 <= r.value <= math.log(n.value) + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 1))
def test_conditional_cover_entropy_bounds(n, margin):
    X = full_shift(2)
    F = folner_window(n)
    V = conditioning_window(F, PAIRS, margin)
    r = cover_entropy(X, Bernoulli([0.7, 0.3]), PAIRS, F, xor_code(), V)
    c = n_conditional(X, PAIRS, F, xor_code(), V)
    assume(r.certified and c.certified)
    assert -1e-12 <= r.value <= math.log(c.value) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(0, 4), min_size=1, max_size=4), st.floats(0.05, 0.9))
def test_cover_entropy_refinement_monotone(S, p):
    X = full_shift(3)
    mu = Bernoulli([p, (1 - p) / 2, (1 - p) / 2])
    Sw = win(*sorted(S))
    fine = cover_entropy(X, mu, symbol_partition(X), Sw)
    mid = cover_entropy(X, mu, OVERLAP, Sw)
    coarse = cover_entropy(X, mu, trivial_cover(X), Sw)
    assume(mid.certified)
    assert fine.value >= mid.value - 1e-9 >= coarse.value - 2e-9


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(0, 4), min_size=1, max_size=4), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.sampled_from([0.25, 0.5, 0.75]))
def test_concavity_in_the_measure(S, p, q, t):
    X = full_shift(2)
    U = symbol_partition(X)
    Sw = win(*sorted(S))
    mu, nu = Bernoulli([p, 1 - p]), Bernoulli([q, 1 - q])
    mix = mixture_combine([mu, nu], [t, 1 - t])
    lhs = partition_entropy(X, mix, U, Sw)
    rhs = t * partition_entropy(X, mu, U, Sw) + (1 - t) * partition_entropy(X, nu, U, Sw)
    assert lhs >= rhs - 1e-9


def test_mixture_examples():
    X = full_shift(2)
    mu = Bernoulli([0.3, 0.7])
    assert mixture_combine([mu, FAIR], [1.0, 0.0]) is mu
    same = mixture_combine([mu, mu], [0.5, 0.5])
    assert np.allclose(marginal(X, same, W01).probs, marginal(X, mu, W01).probs, atol=1e-15)
    ends = mixture_combine([Bernoulli([1, 0]), Bernoulli([0, 1])], [0.5, 0.5])
    assert as_dict(marginal(X, ends, W01))[(0, 0)] == 0.5
    with pytest.raises(ValidationError):
        mixture_combine([mu, FAIR], [0.5, 0.6])


@settings(max_examples=20, deadline=None)
@given(st.sets(st.integers(0, 4), min_size=1, max_size=3), st.floats(0.0, 1.0))
def test_mixture_marginals_are_weighted_sums(S, t):
    X = full_shift(2)
    mu, nu = Bernoulli([0.2, 0.8]), Bernoulli([0.6, 0.4])
    Sw = win(*sorted(S))
    mix = marginal(X, mixture_combine([mu, nu], [t, 1 - t]), Sw).probs
    a, b = bernoulli_marginal([0.2, 0.8], sorted(S)), bernoulli_marginal([0.6, 0.4], sorted(S))
    words = [tuple(r) for r in marginal(X, mu, Sw).language.words.tolist()]
    assert np.allclose(mix, [t * a[w] + (1 - t) * b[w] for w in words], atol=1e-14)


def random_fractional(space, rng):
    w = []
    for c in space.choices:
        w.extend(rng.dirichlet(np.full(len(c), rng.choice([0.2, 1.0]))).tolist())
    return np.asarray(w)


def test_fractional_assignments_never_beat_deterministic_minimum():
    rng = np.random.default_rng(3)
    for _, U, X, mu in CASES:
        for S in (W0, W01, win(0, 2)):
            space = assignment_space(X, U, S)
            if space.log2_size > 10:
                continue
            r = cover_entropy(X, mu, U, S)
            fj = FactorJoint.unconditional(marginal(X, mu, space.join.window, space.atoms).probs)
            for _ in range(500):
                assert fractional_entropy(space.join, fj, random_fractional(space, rng)) >= r.value - 1e-9


def test_fractional_entropy_reduces_to_deterministic():
    X = full_shift(3)
    space = assignment_space(X, OVERLAP, W01)
    fj = FactorJoint.unconditional(marginal(X, THIRDS, space.join.window, space.atoms).probs)
    r = cover_entropy(X, THIRDS, OVERLAP, W01)
    onehot = np.concatenate([(c == r.assignment[i]).astype(float) for i, c in enumerate(space.choices)])
    assert fractional_entropy(space.join, fj, onehot) == pytest.approx(r.value, abs=1e-12)


def test_heuristic_path_is_an_upper_bound():
    X = full_shift(3)
    S = W01
    exact = cover_entropy(X, Bernoulli([0.2, 0.5, 0.3]), OVERLAP, S)
    heur = cover_entropy(X, Bernoulli([0.2, 0.5, 0.3]), OVERLAP, S, exhaustive_log2=2)
    assert exact.certified and not heur.certified
    assert heur.value >= exact.value - 1e-12
    again = cover_entropy(X, Bernoulli([0.2, 0.5, 0.3]), OVERLAP, S, exhaustive_log2=2)
    assert np.array_equal(again.assignment, heur.assignment)
