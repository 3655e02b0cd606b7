import math

import numpy as np
import pytest

from lienard.cycles import census
from lienard.polysys import CanonicalSystem, LienardSystem, expand_canonical
from lienard.rotate import (SweepPlan, SweepStep, certify_rotation_monotonicity, construct_configuration,
                            hopf_scan, sweep)

K1 = CanonicalSystem(1, 0, (0.1, -1.0))
L1 = CanonicalSystem(1, 1, (0.0, -1.0), (-3.0,), (1,))


def test_hopf_at_origin_is_exactly_zero():
    for tmpl in (K1, L1, CanonicalSystem(2, 2, (0.3, 0.2, -1.0), (-3.0, 0.5), (1, -1))):
        events = hopf_scan(tmpl, "a0", -1.0, 1.0)
        assert len(events) == 1
        assert abs(events[0].value) < 1e-10


def test_hopf_at_outer_anchor_matches_affine_root():
    xs = (3 + math.sqrt(5)) / 2
    # trace(x*) = a0 + x* + a2 x*^2 with a2 = -1
    expected = -(xs - xs * xs)
    events = hopf_scan(L1, "a0", -10.0, 10.0, anchor_x=xs)
    assert len(events) == 1
    assert events[0].value == pytest.approx(expected, abs=1e-10)


def test_restoring_slot_has_no_hopf_at_origin():
    assert hopf_scan(L1.with_alpha_even(0, 0.1), "b1", -5.0, -2.5) == []
    assert hopf_scan(L1, "b1", -5.0, -2.5) == []  # trace identically zero: no crossing


def test_plan_validation():
    with pytest.raises(ValueError, match="alternate"):
        SweepPlan(K1, [SweepStep("a2", 1.0), SweepStep("a0", 0.5)])
    with pytest.raises(ValueError):
        SweepPlan(K1, [SweepStep("a1", 1.0)])
    with pytest.raises(ValueError):
        SweepPlan(K1, [SweepStep("a2", 1.0), SweepStep("a2", -1.0)])
    SweepPlan(K1, [SweepStep("a2", 1.0), SweepStep("a0", -0.1)])
    SweepPlan(K1, [SweepStep("a2", -1.0), SweepStep("a0", 0.1)])


def test_k1_sweep_opposite_signs_births_one_cycle_at_hopf():
    plan = SweepPlan(CanonicalSystem(1, 0, (0.0, 0.0)),
                     [SweepStep("a2", -1.0, 10), SweepStep("a0", 0.1, 10)])
    log = sweep(plan)
    assert log.ok
    for slot, v, c in log.snapshots:
        a0 = v if slot == "a0" else 0.0
        a2 = v if slot == "a2" else -1.0
        assert c.cycles_at_origin == (1 if a0 * a2 < 0 else 0)
    hopf = [e for e in log.events if e.kind == "hopf"]
    assert len(hopf) == 1 and abs(hopf[0].value) < 1e-10
    values = [v for s, v, _ in log.snapshots if s == "a0"]
    assert values == sorted(values)


def test_same_sign_and_single_parameter_plans_stay_empty():
    same = SweepPlan(CanonicalSystem(1, 0, (0.0, 0.0)), [SweepStep("a2", 1.0, 5)])
    log = sweep(same)
    tmpl = CanonicalSystem(1, 0, (0.0, 1.0))
    log2 = sweep(SweepPlan(tmpl, [SweepStep("a0", 0.2, 5)]))
    single = sweep(SweepPlan(CanonicalSystem(0, 0, (0.0,)), [SweepStep("a0", 0.5, 5)]))
    for lg in (log, log2, single):
        assert all(c.totals == (0, 0) for _, _, c in lg.snapshots)


def test_same_sign_grid_is_empty():
    rng = np.random.default_rng(5)
    m0, m2 = 10 ** rng.uniform(-3, 0, 5), 10 ** rng.uniform(-3, 0, 5)
    signs = rng.choice([-1.0, 1.0], 5)
    for i in range(5):
        for j in range(5):
            sys = LienardSystem(1, 0, (signs[i] * m0[i], 1.0, signs[i] * m2[j]))
            assert census(sys).totals == (0, 0)


def test_construct_trivial_and_k1():
    zero = construct_configuration(0, 0)
    assert zero.census.totals == (0, 0) and zero.system.alpha_even == (0.0,)
    one = construct_configuration(1, 0)
    assert one.reached and one.census.totals == (1, 0)


def test_construct_requires_extra_anti_saddle():
    with pytest.raises(ValueError):
        construct_configuration(1, 1, (0.0,), (1,))  # g = x (1 + x^2): origin only


def test_monotonicity_identical_values_pass():
    rep = certify_rotation_monotonicity(K1, "a0", [0.1] * 3)
    assert rep.status == "pass"


def test_stable_k1_cycle_expands_as_a0_grows():
    rep = certify_rotation_monotonicity(K1, "a0", [0.05, 0.06, 0.07, 0.08, 0.09])
    assert rep.status == "pass"
    assert rep.stabilities == ["stable"]
    assert all(b > a for a, b in zip(rep.radii[0], rep.radii[0][1:]))


def test_monotonicity_rejects_odd_slot():
    with pytest.raises(ValueError):
        certify_rotation_monotonicity(K1, "a1", [0.0, 1.0])


def test_lost_cycle_is_inconclusive():
    rep = certify_rotation_monotonicity(K1, "a0", [0.05, -0.05])
    assert rep.status == "inconclusive"
