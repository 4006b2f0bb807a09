"""Invariant suite run by ``intricacy verify``.

Each check yields a record ``{name, status, deviation, tolerance, message}``
with status ``pass``, ``fail``, ``skipped`` or ``error``. Checks that compare
series values exactly are skipped in Monte-Carlo mode and on uncertified
runs. Tolerances are multiplied by ``tolerance_scale``.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .complexity_engine import (
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
from .config import RunConfiguration
from .cover_algebra import join_covers, validate_cover
from .errors import IntricacyError
from .group_model import CoefficientSystem, LatticeWindow, coefficient, folner_window
from .measure_entropy import Mixture, check_support, marginal, shannon
from .subcover_counting import n_conditional
from .symbolic_space import language

COEFF_MAX_A = 30


@dataclass
class CheckRecord:
    name: str
    status: str
    deviation: float | None = None
    tolerance: float | None = None
    message: str = ""
    seconds: float = 0.0

    def as_dict(self, timings: bool = False) -> dict:
        return {"name": self.name, "status": self.status, "deviation": self.deviation,
                "tolerance": self.tolerance, "message": self.message,
                "seconds": round(self.seconds, 6) if timings else 0.0}


@dataclass
class VerifyReport:
    checks: list[CheckRecord] = field(default_factory=list)

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "skipped": 0, "error": 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    @property
    def ok(self) -> bool:
        c = self.counts()
        return c["fail"] == 0 and c["error"] == 0

    def as_dict(self, timings: bool = False) -> dict:
        return {"ok": self.ok, "summary": self.counts(),
                "checks": [c.as_dict(timings) for c in self.checks]}


class _Skip(Exception):
    pass


class _Suite:
    def __init__(self, cfg: RunConfiguration):
        self.cfg = cfg
        self.scale = float(cfg.verify.get("tolerance_scale", 1.0))
        self.n_max = int(cfg.verify.get("n_max", 8))
        self.coeffs = [CoefficientSystem.parse(c)
                       for c in cfg.verify.get("coefficients", ["uniform", "neural"])]
        self.report = VerifyReport()
        self.objects: dict = {}
        self.terms: dict = {}

    @property
    def exact(self) -> bool:
        return self.cfg.mode == "exact"

    def options(self) -> RunOptions:
        return RunOptions(self.cfg.mode, self.cfg.samples, self.cfg.seed, self.cfg.budget_nodes,
                          self.cfg.exact_subsets)

    def run(self, name: str, fn) -> None:
        """``fn`` returns ``(deviation, tolerance)``; pass iff deviation <= tolerance."""
        t0 = time.perf_counter()
        try:
            dev, tol = fn()
            tol = tol * self.scale
            status = "pass" if dev <= tol else "fail"
            msg = "" if status == "pass" else f"deviation {dev:.3e} exceeds {tol:.3e}"
            rec = CheckRecord(name, status, float(dev), float(tol), msg)
        except _Skip as exc:
            rec = CheckRecord(name, "skipped", message=str(exc))
        except IntricacyError as exc:
            rec = CheckRecord(name, "fail", message=f"{type(exc).__name__}: {exc}")
        except Exception as exc:  # noqa: BLE001 - recorded, never fatal
            rec = CheckRecord(name, "error", message=f"{type(exc).__name__}: {exc}")
        rec.seconds = time.perf_counter() - t0
        self.report.checks.append(rec)

    def require_exact(self):
        if not self.exact:
            raise _Skip("requires exact mode")

    def get(self, kind: str, name: str):
        key = (kind, name)
        if key not in self.objects:
            self.objects[key] = getattr(self.cfg, kind)(name)
        return self.objects[key]

    def usable(self, kind: str, name: str) -> bool:
        """True when the named object builds; failures surface in the structural checks."""
        try:
            self.get(kind, name)
            return True
        except (IntricacyError, ValueError, TypeError, IndexError):
            return False

    def shared_terms(self, shift_name, cover_name, measure_name=None):
        key = (shift_name, cover_name, measure_name)
        if key not in self.terms:
            measure = None if measure_name is None else self.get("measure", measure_name)
            self.terms[key] = SubsetTerms(self.get("shift", shift_name), self.get("cover", cover_name),
                                          measure, None, self.options())
        return self.terms[key]

    def ns(self) -> range:
        return range(1, self.n_max + 1)

    def fits(self, shift_name, measure_name) -> bool:
        if not (self.usable("shift", shift_name) and self.usable("measure", measure_name)):
            return False
        try:
            check_support(self.get("shift", shift_name), self.get("measure", measure_name))
            return True
        except IntricacyError:
            return False


def _max_dev(a, b) -> float:
    return max(abs(x - y) for x, y in zip(a, b))


def _certified(*series):
    for s in series:
        if not s.certified:
            raise _Skip("inner computations not certified")


def _structural(s: _Suite) -> None:
    cfg = s.cfg
    for name in cfg.shifts:
        def check(name=name):
            X = s.get("shift", name)
            lang = language(X, folner_window(3, X.dimension))
            return (0.0 if len(lang) else 1.0), 0.0
        s.run(f"shift_language[{name}]", check)
    for name, spec in cfg.covers.items():
        def check(name=name, spec=spec):
            rep = validate_cover(s.get("shift", spec["shift"]), s.get("cover", name))
            if not rep.valid:
                raise IntricacyError(rep.message)
            return 0.0, 0.0
        s.run(f"cover_valid[{name}]", check)
    for mname in cfg.measures:
        def build(mname=mname):
            s.get("measure", mname)
            return 0.0, 0.0
        s.run(f"measure_valid[{mname}]", build)
        for xname in cfg.shifts:
            if not s.fits(xname, mname):
                continue

            def check(mname=mname, xname=xname):
                X = s.get("shift", xname)
                mu = s.get("measure", mname)
                W2 = folner_window(2, X.dimension)
                p2 = marginal(X, mu, W2)
                # shift invariance: one-point marginals agree at two sites
                p0 = marginal(X, mu, LatticeWindow(X.dimension, (W2.points[0],)))
                p1 = marginal(X, mu, LatticeWindow(X.dimension, (W2.points[-1],)))
                return max(abs(p2.probs.sum() - 1.0), float(np.abs(p0.probs - p1.probs).max())), 1e-12
            s.run(f"measure_marginal[{mname}@{xname}]", check)


def _coefficients(s: _Suite) -> None:
    for c in s.coeffs:
        def norm(c=c):
            dev = max(abs(math.fsum(math.comb(a, k) * coefficient(c, a, k) for k in range(a + 1)) - 1.0)
                      for a in range(COEFF_MAX_A + 1))
            return dev, 1e-12
        s.run(f"coefficient_normalization[{c.tag}]", norm)

        def sym(c=c):
            if not c.is_symmetric():
                raise IntricacyError("atom measure is not symmetric under x -> 1-x")
            dev = max(abs(coefficient(c, a, k) - coefficient(c, a, a - k))
                      for a in range(COEFF_MAX_A + 1) for k in range(a + 1))
            return dev, 1e-12
        s.run(f"coefficient_symmetry[{c.tag}]", sym)


def _topological(s: _Suite) -> None:
    cfg = s.cfg
    covers = {n: sp for n, sp in cfg.covers.items() if s.usable("cover", n)}
    covers_by_shift: dict[str, list[str]] = {}
    for name, spec in covers.items():
        covers_by_shift.setdefault(spec["shift"], []).append(name)
    for cname, spec in covers.items():
        xname = spec["shift"]
        for c in s.coeffs:
            def identity(cname=cname, xname=xname, c=c):
                s.require_exact()
                if not c.is_symmetric():
                    raise _Skip("identity needs symmetric coefficients")
                t = s.shared_terms(xname, cname)
                A = asc_top(t.shift, t.cover, c, s.ns(), terms=t)
                I = int_top(t.shift, t.cover, c, s.ns(), terms=t)
                H = h_top(t.shift, t.cover, s.ns(), terms=t)
                _certified(A, I, H)
                return _max_dev(I.values, [2 * a - h for a, h in zip(A.values, H.values)]), 1e-12
            s.run(f"int_identity[{cname},{c.tag}]", identity)
    for xname, names in covers_by_shift.items():
        for a, b in itertools.combinations(names, 2):
            def subadd(a=a, b=b, xname=xname):
                s.require_exact()
                X = s.get("shift", xname)
                U, V = s.get("cover", a), s.get("cover", b)
                J = join_covers(U, V, X.k)
                opts = s.options()
                c = s.coeffs[0]
                n = min(s.n_max, 6)
                su = s.shared_terms(xname, a)
                sv = s.shared_terms(xname, b)
                SU = asc_top(X, U, c, range(1, n + 1), terms=su)
                SV = asc_top(X, V, c, range(1, n + 1), terms=sv)
                SJ = asc_top(X, J, c, range(1, n + 1), opts)
                _certified(SU, SV, SJ)
                return max(j - u - v for j, u, v in zip(SJ.values, SU.values, SV.values)), 1e-9
            s.run(f"subadditivity[{a},{b}]", subadd)


def _measure(s: _Suite) -> None:
    cfg = s.cfg
    for cname, spec in cfg.covers.items():
        xname = spec["shift"]
        if not s.usable("cover", cname):
            continue
        for mname in cfg.measures:
            if not s.fits(xname, mname):
                continue
            cover = s.get("cover", cname)
            c = s.coeffs[0]
            if cover.is_partition:
                def dom(cname=cname, xname=xname, mname=mname):
                    s.require_exact()
                    t = s.shared_terms(xname, cname, mname)
                    T = s.shared_terms(xname, cname)
                    M = asc_mu(t.shift, t.measure, t.cover, c, s.ns(), terms=t)
                    A = asc_top(T.shift, T.cover, c, s.ns(), terms=T)
                    _certified(A)
                    return max(m - a for m, a in zip(M.values, A.values)), 1e-9
                s.run(f"measure_domination[{cname},{mname}]", dom)

                def mono(cname=cname, xname=xname, mname=mname):
                    s.require_exact()
                    t = s.shared_terms(xname, cname, mname)
                    M = asc_mu(t.shift, t.measure, t.cover, c, s.ns(), terms=t)
                    v = M.values
                    return max([0.0] + [b - a for a, b in zip(v, v[1:])]), 1e-9
                s.run(f"asc_mu_nonincreasing[{cname},{mname}]", mono)
            else:
                def order(cname=cname, xname=xname, mname=mname):
                    s.require_exact()
                    t = s.shared_terms(xname, cname, mname)
                    n = min(s.n_max, 6)
                    lo = asc_mu_minus(t.shift, t.measure, t.cover, c, range(1, n + 1), terms=t)
                    hi = asc_mu_plus(t.shift, t.measure, t.cover, c, range(1, n + 1), s.options())
                    return max(a - b for a, b in zip(lo.values, hi.series.values)), 1e-9
                s.run(f"order_minus_plus[{cname},{mname}]", order)


def _affinity(s: _Suite) -> None:
    cfg = s.cfg
    for mname in cfg.measures:
        for cname, spec in cfg.covers.items():
            xname = spec["shift"]
            if not s.usable("cover", cname) or not s.fits(xname, mname):
                continue
            mu = s.get("measure", mname)
            if not isinstance(mu, Mixture) or not s.get("cover", cname).is_partition:
                continue

            def affine(mname=mname, cname=cname, xname=xname, mu=mu):
                s.require_exact()
                X, P = s.get("shift", xname), s.get("cover", cname)
                c, n = s.coeffs[0], s.n_max
                mix = asc_mu(X, mu, P, c, [n], s.options()).values[0]
                parts = [asc_mu(X, m, P, c, [n], s.options()).values[0] for m in mu.components]
                comb = math.fsum(w * v for w, v in zip(mu.weights, parts))
                # per subset: sum_i w_i H_i <= H(mix) <= sum_i w_i H_i + H(w)
                return max(comb - mix, mix - comb - shannon(mu.weights) / n), 1e-12
            s.run(f"affinity[{mname},{cname}]", affine)


def _conditional(s: _Suite) -> None:
    cfg = s.cfg
    for code_name, code_spec in cfg.codes.items():
        for cname, spec in cfg.covers.items():
            xname = spec["shift"]
            if not s.usable("cover", cname):
                continue
            X = s.get("shift", xname)
            if X.dimension != 1:
                continue
            if code_spec["type"] == "constant":
                def const(code_name=code_name, cname=cname, xname=xname):
                    s.require_exact()
                    X, U = s.get("shift", xname), s.get("cover", cname)
                    code = cfg.code(code_name, X)
                    c, n = s.coeffs[0], min(s.n_max, 8)
                    A = asc_top(X, U, c, range(1, n + 1), s.options())
                    B = asc_top(X, U, c, range(1, n + 1), s.options(), code=code)
                    _certified(A, B)
                    return _max_dev(A.values, B.values), 1e-12
                s.run(f"constant_code_degenerate[{code_name},{cname}]", const)
            elif code_spec["type"] == "identity":
                def ident(code_name=code_name, cname=cname, xname=xname):
                    X, U = s.get("shift", xname), s.get("cover", cname)
                    if not U.is_partition or len(U.window) != 1:
                        raise _Skip("needs a one-point partition")
                    code = cfg.code(code_name, X)
                    dev = 0.0
                    for n in range(1, min(s.n_max, 6) + 1):
                        F = folner_window(n, 1)
                        r = n_conditional(X, U, F, code, F, s.cfg.budget_nodes)
                        dev = max(dev, abs(r.value - 1))
                    return float(dev), 0.0
                s.run(f"identity_code_degenerate[{code_name},{cname}]", ident)


def _mc(s: _Suite) -> None:
    for cname, spec in s.cfg.covers.items():
        if not s.usable("cover", cname):
            continue
        X = s.get("shift", spec["shift"])
        U = s.get("cover", cname)
        if s.exact or not X.is_full or not U.is_partition or len(U.window) != 1 or len(U) != X.k:
            continue

        def closed_form(X=X, U=U):
            # every symmetric system has mean subset size |F|/2, so the value is ln(k)/2
            c = s.coeffs[0]
            S = asc_top(X, U, c, [s.n_max], s.options())
            r = S.records[0]
            return abs(r.value - math.log(X.k) / 2), 4 * r.stderr + 1e-12
        s.run(f"mc_closed_form[{cname}]", closed_form)


def _neural(s: _Suite) -> None:
    def twins():
        t = JointTable(np.array([[0.5, 0.0], [0.0, 0.5]]))
        return abs(neural_complexity(t) - math.log(2) / 3), 1e-12
    s.run("neural_identical_bits", twins)

    def independent():
        p = np.array([0.3, 0.7])
        t = JointTable(np.einsum("i,j,k->ijk", p, p, p))
        return abs(neural_complexity(t)), 1e-12
    s.run("neural_independent", independent)


def verify_suite(cfg: RunConfiguration) -> VerifyReport:
    """Run every applicable check over the objects named in ``cfg``."""
    s = _Suite(cfg)
    for part in (_structural, _coefficients, _topological, _measure, _affinity, _conditional,
                 _mc, _neural):
        part(s)
    return s.report
