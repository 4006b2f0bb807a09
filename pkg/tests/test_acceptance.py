"""The ten acceptance criteria, each at its stated tolerance and time limit.

Every test records one PASS/FAIL line (shown in the terminal summary and on
stdout when run as a script) before asserting.
"""

import itertools
import math
import time

import numpy as np
import pytest

from intricacy.complexity_engine import (
    JointTable,
    RunOptions,
    SubsetTerms,
    asc_mu,
    asc_mu_minus,
    asc_mu_plus,
    asc_top,
    h_top,
    int_top,
    neural_complexity,
)
from intricacy.cover_algebra import CylinderCover, assignment_space, symbol_partition
from intricacy.group_model import CoefficientSystem, coefficient, folner_window
from intricacy.measure_entropy import (
    Bernoulli,
    FactorJoint,
    Markov,
    conditional_partition_entropy,
    cover_entropy,
    fractional_entropy,
    marginal,
)
from intricacy.subcover_counting import SetCoverInstance, conditioning_window, min_set_cover, n_conditional
from intricacy.symbolic_space import constant_code, full_shift, golden_mean_shift, identity_code, xor_code

from acceptance_log import record
from oracles import brute_set_cover

LN2 = math.log(2)
GOLDEN_P = ((0.5, 0.5), (1.0, 0.0))


def golden_markov(p):
    """Markov measure on the golden mean shift that leaves 0 for 1 with probability ``p``."""
    return Markov((1 / (1 + p), p / (1 + p)), ((1 - p, p), (1.0, 0.0)))


def test_criterion_01_full_shift_closed_forms():
    t0 = time.perf_counter()
    X = full_shift(2)
    U = symbol_partition(X)
    ns = range(1, 15)
    terms = SubsetTerms(X, U)
    a = asc_top(X, U, "uniform", ns, terms=terms)
    i = int_top(X, U, "uniform", ns, terms=terms)
    dev_a = max(abs(v - LN2 / 2) for v in a.values)
    dev_i = max(abs(v) for v in i.values)
    dt = time.perf_counter() - t0
    ok = dev_a <= 1e-12 and dev_i <= 1e-12 and a.certified and i.certified and dt < 10
    record(1, ok, dt, 10, f"max|asc-ln2/2|={dev_a:.2e} max|int|={dev_i:.2e} (tol 1e-12, n<=14)")
    assert ok


def test_criterion_02_intricacy_identity():
    t0 = time.perf_counter()
    G = golden_mean_shift()
    U = symbol_partition(G)
    ns = range(1, 15)
    terms = SubsetTerms(G, U)
    h = h_top(G, U, ns, terms=terms).values
    worst = 0.0
    cert = True
    for coeffs in ("uniform", "neural"):
        a = asc_top(G, U, coeffs, ns, terms=terms)
        i = int_top(G, U, coeffs, ns, terms=terms)
        cert &= a.certified and i.certified
        worst = max(worst, max(abs(y - (2 * x - z)) for x, y, z in zip(a.values, i.values, h)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and cert and dt < 60
    record(2, ok, dt, 60, f"max|int-(2asc-h)|={worst:.2e} over uniform+neural, n<=14 (tol 1e-12)")
    assert ok


def test_criterion_03_entropy_rate():
    t0 = time.perf_counter()
    G = golden_mean_shift()
    v = h_top(G, symbol_partition(G), [30]).values[0]
    perron = float(max(abs(np.linalg.eigvals(np.array([[1.0, 1.0], [1.0, 0.0]])))))
    dev = abs(v - math.log(perron))
    dt = time.perf_counter() - t0
    ok = dev <= 0.02 and dt < 1
    record(3, ok, dt, 1, f"(1/30)ln N={v:.5f} vs ln(perron)={math.log(perron):.5f}, |diff|={dev:.4f} (tol 0.02)")
    assert ok


def test_criterion_04_order_and_squeeze():
    t0 = time.perf_counter()
    X = full_shift(3)
    U = CylinderCover.from_strings(folner_window(1), [["0", "1"], ["1", "2"]])
    mu = Bernoulli([1 / 3] * 3)
    ns = list(range(2, 13))
    minus = asc_mu_minus(X, mu, U, "uniform", ns)
    plus = asc_mu_plus(X, mu, U, "uniform", ns, extend=1)
    gaps = [p - m for m, p in zip(minus.values, plus.series.values)]
    order = min(gaps) >= -1e-9
    trend = gaps[ns.index(12)] <= gaps[ns.index(4)]
    dt = time.perf_counter() - t0
    ok = order and trend and dt < 300
    record(4, ok, dt, 300,
           f"order {'holds' if order else 'violated'} (min gap {min(gaps):.2e}); "
           f"gap(4)={gaps[ns.index(4)]:.5f} gap(12)={gaps[ns.index(12)]:.5f} "
           f"-> trend {'holds' if trend else 'violated'}")
    assert order, "minus above plus"
    assert trend, "gap at n=12 exceeds gap at n=4"
    assert dt < 300


def test_criterion_05_variational_backbone():
    t0 = time.perf_counter()
    G = golden_mean_shift()
    U = symbol_partition(G)
    ns = range(1, 13)
    top_terms = SubsetTerms(G, U)
    top = asc_top(G, U, "uniform", ns, terms=top_terms).values
    worst = -math.inf
    for p in (0.5, 0.3, (3 - math.sqrt(5)) / 2):
        mu = golden_markov(p)
        vals = asc_mu(G, mu, U, "uniform", ns).values
        worst = max(worst, max(m - t for m, t in zip(vals, top)))
    X = full_shift(2)
    P = symbol_partition(X)
    eq_ns = range(1, 15)
    eq = max(abs(a - b) for a, b in zip(asc_mu(X, Bernoulli([0.5, 0.5]), P, "uniform", eq_ns).values,
                                         asc_top(X, P, "uniform", eq_ns).values))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and eq <= 1e-12 and dt < 60
    record(5, ok, dt, 60, f"max(asc_mu-asc_top)={worst:.3e} (tol 1e-9, 3 Markov measures, n<=12); "
                          f"full-shift equality dev={eq:.2e} (tol 1e-12, n<=14)")
    assert ok


def test_criterion_06_conditional_degeneracies():
    t0 = time.perf_counter()
    G = golden_mean_shift()
    U = symbol_partition(G)
    mu = Markov((2 / 3, 1 / 3), GOLDEN_P)
    ns = range(1, 9)
    dev_const = 0.0
    for f_plain, f_cond in (
        (asc_top(G, U, "uniform", ns), asc_top(G, U, "uniform", ns, code=constant_code(2))),
        (asc_mu(G, mu, U, "uniform", ns), asc_mu(G, mu, U, "uniform", ns, code=constant_code(2))),
    ):
        dev_const = max(dev_const, max(abs(a - b) for a, b in zip(f_plain.values, f_cond.values)))
    ident_counts, ident_h = set(), 0.0
    for n in ns:
        F = folner_window(n)
        V = conditioning_window(F, U)
        ident_counts.add(n_conditional(G, U, F, identity_code(2), V).value)
        ident_h = max(ident_h, abs(conditional_partition_entropy(G, mu, U, F, identity_code(2), V)))
    X = full_shift(2)
    xs = range(1, 13)
    xor = asc_mu(X, Bernoulli([0.5, 0.5]), symbol_partition(X), "uniform", xs, code=xor_code()).values
    dev_xor = max(abs(v - (1 - 2.0**-n) * LN2 / n) for n, v in zip(xs, xor))
    dt = time.perf_counter() - t0
    ok = dev_const <= 1e-12 and ident_counts == {1} and ident_h <= 1e-12 and dev_xor <= 1e-12 and dt < 60
    record(6, ok, dt, 60, f"constant dev={dev_const:.2e}; identity N={sorted(ident_counts)} H={ident_h:.1e}; "
                          f"xor dev={dev_xor:.2e} (n<=12)")
    assert ok


def test_criterion_07_coefficient_systems():
    t0 = time.perf_counter()
    norm = sym = 0.0
    for system in (CoefficientSystem.uniform(), CoefficientSystem.neural()):
        for a in range(31):
            norm = max(norm, abs(math.fsum(math.comb(a, s) * coefficient(system, a, s) for s in range(a + 1)) - 1))
            sym = max(sym, max(abs(coefficient(system, a, s) - coefficient(system, a, a - s)) for s in range(a + 1)))
    N = 10**6
    x = (np.arange(N) + 0.5) / N
    quad = 0.0
    for a in range(13):
        for s in range(a + 1):
            q = float(np.mean(x**s * (1 - x) ** (a - s)))
            quad = max(quad, abs(q - coefficient(CoefficientSystem.neural(), a, s)))
    dt = time.perf_counter() - t0
    ok = norm <= 1e-12 and sym <= 1e-12 and quad <= 1e-8 and dt < 5
    record(7, ok, dt, 5, f"normalization {norm:.1e}, symmetry {sym:.1e} (a<=30); quadrature {quad:.1e} (a<=12)")
    assert ok


def test_criterion_08_monte_carlo_calibration():
    t0 = time.perf_counter()
    G = golden_mean_shift()
    U = symbol_partition(G)
    terms = SubsetTerms(G, U)
    exact = asc_top(G, U, "uniform", [12], terms=terms).values[0]
    hits = 0
    for seed in range(100):
        terms.options = RunOptions(mode="mc", samples=10_000, seed=seed)
        r = asc_top(G, U, "uniform", [12], terms=terms).records[0]
        hits += abs(r.value - exact) <= 3 * r.stderr
    dt = time.perf_counter() - t0
    ok = hits >= 99 and dt < 600
    record(8, ok, dt, 600, f"{hits}/100 seeds within 3 se of exact {exact:.6f} (need >= 99)")
    assert ok


def direct_neural(p, variant="neural"):
    """Materialize every subset's MI term in a list, then sum."""
    m = p.ndim
    full = tuple(range(m))

    def H(axes):
        drop = tuple(i for i in full if i not in axes)
        q = p.sum(axis=drop) if drop else p
        q = q[q > 0]
        return float(-(q * np.log(q)).sum())

    h_all = H(full)
    terms = []
    for r in range(m + 1):
        for S in itertools.combinations(full, r):
            rest = tuple(i for i in full if i not in S)
            mi = 0.0 if not S or not rest else H(S) + H(rest) - h_all
            terms.append(math.comb(m, r) * 0 + coefficient(CoefficientSystem.parse(variant), m, r) * mi)
    return math.fsum(terms)


def test_criterion_09_neural_complexity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    p = rng.dirichlet(np.ones(2))
    for _ in range(5):
        p = np.multiply.outer(p, rng.dirichlet(np.ones(3)))
    indep = abs(neural_complexity(JointTable(p)))
    twin = abs(neural_complexity(JointTable(np.array([[0.5, 0.0], [0.0, 0.5]]))) - LN2 / 3)
    stream = 0.0
    for m in range(1, 11):
        q = rng.dirichlet(np.full(2**m, 0.3)).reshape((2,) * m)
        for variant in ("neural", "uniform"):
            stream = max(stream, abs(neural_complexity(JointTable(q), variant) - direct_neural(q, variant)))
    dt = time.perf_counter() - t0
    ok = indep <= 1e-12 and twin <= 1e-12 and stream <= 1e-12 and dt < 5
    record(9, ok, dt, 5, f"independent {indep:.1e}; twin bits {twin:.1e}; streamed vs exhaustive {stream:.1e} (|E|<=10)")
    assert ok


def random_instance(rng):
    m = int(rng.integers(1, 13))
    nsets = int(rng.integers(1, 13))
    sets = [set(rng.choice(m, size=int(rng.integers(1, m + 1))).tolist()) for _ in range(nsets)]
    for e in set(range(m)) - set().union(*sets):
        sets[int(rng.integers(nsets))].add(e)
    return m, [sorted(s) for s in sets]


def test_criterion_10_solver_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    mismatches = 0
    for _ in range(200):
        m, sets = random_instance(rng)
        r = min_set_cover(SetCoverInstance(m, sets))
        mismatches += (not r.certified) or r.value != brute_set_cover(m, sets)
    W0, W01 = folner_window(1), folner_window(2)
    cases = [
        (full_shift(3), Bernoulli([0.2, 0.5, 0.3]), CylinderCover.from_strings(W0, [["0", "1"], ["1", "2"]]), W01),
        (full_shift(2), Bernoulli([0.7, 0.3]), CylinderCover.from_strings(W01, [["00", "01"], ["01", "10", "11"]]), W01),
        (golden_mean_shift(), Markov((2 / 3, 1 / 3), GOLDEN_P),
         CylinderCover.from_strings(W01, [["00", "01"], ["00", "10"]]), folner_window(3)),
    ]
    beaten, worst = 0, math.inf
    draws = 10_000
    for X, mu, U, S in cases:
        space = assignment_space(X, U, S)
        assert space.size <= 2**10
        best = cover_entropy(X, mu, U, S)
        assert best.certified
        fj = FactorJoint.unconditional(marginal(X, mu, space.join.window, space.atoms).probs)
        for _ in range(draws):
            w = np.concatenate([rng.dirichlet(np.full(len(c), rng.choice([0.1, 1.0]))) for c in space.choices])
            v = fractional_entropy(space.join, fj, w)
            worst = min(worst, v - best.value)
            beaten += v < best.value - 1e-9
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and beaten == 0 and dt < 120
    record(10, ok, dt, 120, f"set cover mismatches {mismatches}/200; fractional draws beating the minimum "
                            f"{beaten}/{draws * len(cases)} (closest margin {worst:.2e})")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
