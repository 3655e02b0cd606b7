"""Acceptance checks, shared by ``lienard verify`` and the test suite.

Each check returns a :class:`CriterionResult`; none of them raises on a
numerical failure, so a report always lists every criterion.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cycles import RETURN_TOL, CycleCensus, census, displacement_profile
from .polysys import (BivariatePoly, CanonicalSystem, LienardSystem, expand_canonical,
                      parametrized_field, reversible_system, rotation_determinant)
from .rotate import certify_rotation_monotonicity, construct_configuration, hopf_scan
from .singular import (check_alternation, check_first_index_theorem, find_finite_singularities,
                       poincare_index)

DENSE_SAMPLES = 400
DENSE_SCALE = 2.0
L1_BETA = (-3.0,)
L1_SIGNS = (1,)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    seconds: float
    budget: float
    detail: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.seconds < self.budget

    def line(self) -> str:
        verdict = "PASS" if self.passed and self.within_budget else "FAIL"
        extra = "" if self.within_budget else f" (over budget {self.budget:g}s)"
        return f"[{verdict}] {self.name}: {self.seconds:.1f}s{extra}"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3),
                "budget": self.budget, "detail": self.detail}


def _timed(name: str, budget: float, fn) -> CriterionResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(name, bool(passed), time.perf_counter() - t0, budget, detail)


def dense_census(sys: LienardSystem) -> CycleCensus:
    """Brute-force oracle: 400 samples, default outer radius widened twice."""
    return census(sys, n_samples=DENSE_SAMPLES, r_max_scale=DENSE_SCALE)


def _radii(c: CycleCensus) -> list[list[float]]:
    return [[cy.r_star for cy in a.cycles] for a in c.anchors]


def _random_canonical(rng: np.random.Generator, k: int, l: int) -> CanonicalSystem:
    return CanonicalSystem(k, l, tuple(rng.uniform(-2, 2, k + 1)), tuple(rng.uniform(-3, 3, l)),
                           tuple(int(s) for s in rng.choice([-1, 1], l)))


def _simple_roots(sys: LienardSystem) -> bool:
    pts = find_finite_singularities(sys)
    return all(not p.multiple and p.jacobian_det != 0 for p in pts)


# -- criteria ---------------------------------------------------------------

def delta_identities() -> CriterionResult:
    def run():
        bad = []
        checked = 0
        for k in range(4):
            for l in range(3):
                csys = CanonicalSystem(k, l, tuple(0.5 + i for i in range(k + 1)),
                                       tuple(-1.5 - j for j in range(l)), tuple([1] * l))
                sys = expand_canonical(csys)
                for i in range(k + 1):
                    delta = rotation_determinant(*parametrized_field(sys, f"a{2 * i}"))
                    checked += 1
                    if delta != BivariatePoly.monomial(2 * i, 2):
                        bad.append(f"k={k} l={l} a{2 * i}: {delta}")
                rev = reversible_system(k, l, csys.beta_odd, csys.even_signs)
                for j in range(1, l + 1):
                    delta = rotation_determinant(*parametrized_field(rev, f"b{2 * j - 1}"))
                    checked += 1
                    if delta != BivariatePoly.monomial(2 * j, 1, -1.0):
                        bad.append(f"k={k} l={l} b{2 * j - 1}: {delta}")
        return not bad, {"checked": checked, "mismatches": bad}
    return _timed("delta-identities", 1.0, run)


def index_suite(n_random: int = 20, seed: int = 7) -> CriterionResult:
    def run():
        sys = expand_canonical(CanonicalSystem(1, 1, (0.1, -1.0), L1_BETA, L1_SIGNS))
        pts = find_finite_singularities(sys)
        saddle = next(p for p in pts if p.kind == "saddle")
        gap = min(abs(a.x - b.x) for a, b in zip(pts, pts[1:]))
        idx_origin = poincare_index(sys, (0.0, 0.0), 0.25 * gap)
        idx_saddle = poincare_index(sys, (saddle.x, 0.0), 0.25 * gap)
        mid = 0.5 * (pts[0].x + pts[-1].x)
        idx_all = poincare_index(sys, (mid, 0.0), 0.5 * (pts[-1].x - pts[0].x) + 0.5)
        rng = np.random.default_rng(seed)
        checked, skipped, unbalanced, with_other = 0, 0, [], 0
        while checked < n_random:
            k, l = int(rng.integers(0, 4)), int(rng.integers(0, 3))
            s = expand_canonical(_random_canonical(rng, k, l))
            if not _simple_roots(s):
                continue
            led = check_first_index_theorem(s)
            if not led.conclusive:
                skipped += 1
                continue
            checked += 1
            with_other += led.other_infinite > 0
            if not led.balanced:
                unbalanced.append(s.to_dict())
        ok = idx_origin == 1 and idx_saddle == -1 and idx_all == 1 and not unbalanced
        return ok, {"origin": idx_origin, "saddle": idx_saddle, "saddle_x": saddle.x, "enclosing": idx_all,
                    "ledger_checked": checked, "ledger_skipped": skipped,
                    "checked_with_other_infinite": int(with_other), "unbalanced": unbalanced}
    return _timed("index-suite", 30.0, run)


def alternation_suite(n: int = 100, seed: int = 11) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        done, failed = 0, []
        while done < n:
            k, l = int(rng.integers(0, 4)), int(rng.integers(0, 3))
            s = expand_canonical(_random_canonical(rng, k, l))
            if not _simple_roots(s):
                continue
            done += 1
            if check_alternation(s) != "pass":
                failed.append(s.to_dict())
        return not failed, {"systems": done, "failed": failed}
    return _timed("alternation-suite", 30.0, run)


def center_suite(seed: int = 3) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        worst, nonempty, cases = 0.0, [], 0
        for k in range(3):
            for l in range(3):
                c = _random_canonical(rng, k, l)
                base = expand_canonical(c)
                sys = LienardSystem(k, l, (0.0,) * (2 * k + 1), base.beta)
                cases += 1
                for p in find_finite_singularities(sys):
                    if not p.is_anti_saddle:
                        continue
                    prof = displacement_profile(sys, p)
                    ok = prof.ok
                    if ok.any():
                        worst = max(worst, float(np.max(np.abs(prof.d[ok]))))
                cen = census(sys)
                if sum(cen.totals):
                    nonempty.append(sys.to_dict())
        return worst < 1e-8 and not nonempty, {"systems": cases, "max_abs_d": worst, "nonempty": nonempty}
    return _timed("center-symmetry-suite", 60.0, run)


def hopf_suite() -> CriterionResult:
    def run():
        tmpl = CanonicalSystem(1, 0, (0.1, -1.0))
        events = hopf_scan(tmpl, "a0", -1.0, 1.0)
        at = [e.value for e in events]
        radii = {}
        for eps in (1e-4, 4e-4, 1.6e-3):
            cyc = census(expand_canonical(tmpl.with_alpha_even(0, eps))).at(0.0).cycles
            radii[eps] = cyc[0].r_star if len(cyc) == 1 else math.nan
        ratios = [radii[4e-4] / radii[1e-4], radii[1.6e-3] / radii[4e-4]]
        ok = (len(at) == 1 and abs(at[0]) < 1e-10
              and all(1.6 <= q <= 2.4 for q in ratios))
        return ok, {"events": at, "radii": {repr(k): v for k, v in radii.items()}, "ratios": ratios}
    return _timed("hopf-suite", 60.0, run)


def uniqueness_suite(seed: int = 2024) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        rows = []
        bad = []
        for pattern in ("opposite", "same"):
            m0 = 10 ** rng.uniform(-3, 0, 4)
            m2 = 10 ** rng.uniform(-3, 0, 4)
            s0 = rng.choice([-1.0, 1.0], 4)
            want = 1 if pattern == "opposite" else 0
            for i in range(4):
                for j in range(4):
                    a0 = s0[i] * m0[i]
                    a2 = (-s0[i] if pattern == "opposite" else s0[i]) * m2[j]
                    sys = LienardSystem(1, 0, (a0, 1.0, a2))
                    std = census(sys)
                    dense = dense_census(sys)
                    row = {"a0": a0, "a2": a2, "count": std.cycles_at_origin,
                           "dense": dense.cycles_at_origin, "r": _radii(std)[0]}
                    rows.append(row)
                    if std.cycles_at_origin != want or dense.cycles_at_origin != want:
                        bad.append(row)
        return not bad, {"points": len(rows), "mismatches": bad, "grid": rows}
    return _timed("uniqueness-k1-suite", 600.0, run)


def _construction_targets():
    return [((1, 0), (), ()), ((1, 1), L1_BETA, L1_SIGNS), ((2, 0), (), ())]


def construction_suite() -> CriterionResult:
    def run():
        out, ok = [], True
        for (k, l), beta, signs in _construction_targets():
            res = construct_configuration(k, l, beta, signs)
            dense = dense_census(expand_canonical(res.system))
            stab = [c.stability for c in res.census.at(0.0).cycles]
            good = res.reached and dense.totals == res.census.totals
            if (k, l) == (2, 0):
                good = good and stab == ["unstable", "stable"]
            ok = ok and good
            out.append({"target": [k, l], "alpha_even": list(res.system.alpha_even),
                        "census": list(res.census.totals), "dense": list(dense.totals),
                        "origin_stabilities": stab, "attempts": res.attempts, "passed": good})
        return ok, {"constructions": out}
    return _timed("construction-suite", 900.0, run)


def rotation_suite(samples: int = 5, growth: float = 0.4) -> CriterionResult:
    """Grow the magnitude of the second-highest even coefficient of the two-cycle system."""
    def run():
        res = construct_configuration(2, 0)
        sub = res.system.alpha_even[1]
        values = list(np.linspace(sub, sub * (1 + growth), samples))
        rep = certify_rotation_monotonicity(res.system, "a2", values)
        inner_contracts = outer_expands = False
        if rep.stabilities == ["unstable", "stable"] and rep.status == "pass":
            inner, outer = rep.radii
            inner_contracts = all(b < a for a, b in zip(inner, inner[1:]))
            outer_expands = all(b > a for a, b in zip(outer, outer[1:]))
        ok = rep.status == "pass" and inner_contracts and outer_expands
        return ok, {"system": res.system.to_dict(), "report": rep.to_dict(),
                    "inner_contracts": inner_contracts, "outer_expands": outer_expands}
    return _timed("rotation-monotonicity", 300.0, run)


def hygiene_suite() -> CriterionResult:
    def run():
        systems = [LienardSystem(1, 0, (0.1, 1.0, -1.0)),
                   LienardSystem(1, 0, (0.1065, 1.0, -0.001723)),
                   LienardSystem(1, 0, (-0.004395, 1.0, 0.001723))]
        for (k, l), beta, signs in _construction_targets():
            systems.append(expand_canonical(construct_configuration(k, l, beta, signs).system))
        worst, rows, ok = 0.0, [], True
        for sys in systems:
            a = census(sys, tol=RETURN_TOL)
            b = census(sys, tol=RETURN_TOL / 2)
            ra, rb = _radii(a), _radii(b)
            same = [len(x) for x in ra] == [len(x) for x in rb]
            rel = 0.0
            if same:
                for xa, xb in zip(ra, rb):
                    for u, v in zip(xa, xb):
                        rel = max(rel, abs(u - v) / abs(u))
            worst = max(worst, rel)
            ok = ok and same and rel < 1e-4
            rows.append({"alpha": list(sys.alpha), "beta": list(sys.beta), "counts_equal": same, "max_rel": rel})
        return ok, {"systems": rows, "max_rel": worst}
    return _timed("numerical-hygiene", 600.0, run)


CRITERIA = {
    "delta-identities": delta_identities,
    "index-suite": index_suite,
    "alternation-suite": alternation_suite,
    "center-symmetry-suite": center_suite,
    "hopf-suite": hopf_suite,
    "uniqueness-k1-suite": uniqueness_suite,
    "construction-suite": construction_suite,
    "rotation-monotonicity": rotation_suite,
    "numerical-hygiene": hygiene_suite,
}


def run_all(names=None) -> list[CriterionResult]:
    names = list(CRITERIA) if names is None else names
    return [CRITERIA[n]() for n in names]
