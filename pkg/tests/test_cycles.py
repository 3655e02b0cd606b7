import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from lienard.cycles import (CensusError, DisplacementProfile, census, count_cycles, displacement_profile,
                            enclosed_points, refine_semistable)
from lienard.flow import crossings
from lienard.polysys import CanonicalSystem, LienardSystem, expand_canonical, vector_field
from lienard.singular import find_finite_singularities

K1 = LienardSystem(1, 0, (0.1, 1.0, -1.0))


def origin(sys):
    return next(p for p in find_finite_singularities(sys) if p.x == 0.0)


def scipy_return(sys, r):
    """First clockwise return to the positive x-axis, from an independent integrator."""
    def hit(t, u):
        return u[1]
    hit.direction = -1
    hit.terminal = False
    sol = solve_ivp(lambda t, u: vector_field(sys, u), (0, 200), [r, 0.0], method="DOP853",
                    rtol=1e-12, atol=1e-13, events=hit)
    xs = [u[0] for t, u in zip(sol.t_events[0], sol.y_events[0]) if t > 1e-6 and u[0] > 0]
    return xs[0]


def test_k1_cycle_matches_scipy_shooting():
    c = census(K1)
    assert c.totals == (1, 0)
    cyc = c.anchors[0].cycles[0]
    assert cyc.stability == "stable"
    r_ref = brentq(lambda r: scipy_return(K1, r) - r, 0.3, 1.0, xtol=1e-12)
    assert cyc.r_star == pytest.approx(r_ref, abs=1e-7)
    assert 0 < cyc.multiplier_estimate < 1


def test_k1_profile_sign_pattern():
    prof = displacement_profile(K1, origin(K1))
    d = prof.d[prof.ok]
    assert d[0] > 0 and d[-1] < 0


def test_center_profile_is_flat_and_census_empty():
    sys = LienardSystem(1, 1, (0.0, 0.0, 0.0), (-3.0, 1.0))
    prof = displacement_profile(sys, origin(sys))
    assert np.max(np.abs(prof.d[prof.ok])) < 1e-8
    assert census(sys).totals == (0, 0)


def test_single_radius_grid():
    prof = displacement_profile(K1, origin(K1), r_min=0.1, n_samples=1)
    assert len(prof.radii) == 1 and prof.status[0] == "ok"


def test_all_samples_escape_is_reported():
    sys = LienardSystem(1, 0, (3.0, 0.0, 1.0))  # unstable node: orbits leave without turning
    with pytest.raises(CensusError, match="no sample returned"):
        displacement_profile(sys, origin(sys))
    c = census(sys)
    assert c.totals == (0, 0)
    assert any("no returns" in n for n in c.anchors[0].notes)


def test_hopf_sign_link():
    for a0 in (0.05, -0.05):
        sys = LienardSystem(1, 0, (a0, 1.0, 0.0))
        prof = displacement_profile(sys, origin(sys), r_max=0.01, n_samples=4)
        assert math.copysign(1, prof.d[0]) == math.copysign(1, a0)


def test_unstable_relaxation_cycle_is_mirror_of_stable_one():
    """x -> -x with time reversed maps a(x) to -a(-x); the cycle keeps its size."""
    unstable = LienardSystem(1, 0, (-0.004395, 1.0, 0.001723))
    stable = LienardSystem(1, 0, (0.004395, 1.0, -0.001723))
    cu = census(unstable).anchors[0].cycles
    cs = census(stable).anchors[0].cycles
    assert [c.stability for c in cu] == ["unstable"]
    assert [c.stability for c in cs] == ["stable"]
    left = crossings(stable, (cs[0].r_star, 0.0), ((0.0, 0.0), (-1.0, 0.0)), 1, t_max=2e3, r_escape=1e8)
    assert cu[0].r_star == pytest.approx(left[0].r, rel=1e-6)


def test_noise_below_signal_threshold_is_not_a_cycle():
    radii = np.linspace(0.1, 1.0, 6)
    d = np.array([1e-9, -1e-9, 1e-9, -1e-9, 1e-9, -1e-9])
    prof = DisplacementProfile(K1, origin(K1), radii, d, ["ok"] * 6)
    notes = []
    assert count_cycles(prof, notes) == []
    assert any("noise" in n for n in notes)


def test_refine_semistable_rejects_clean_crossing_and_flat_profile():
    assert refine_semistable(K1, origin(K1), (0.3, 1.0)) is None
    center = LienardSystem(1, 0, (0.0, 0.0, 0.0))
    assert refine_semistable(center, origin(center), (0.2, 0.6)) is None


def test_semistable_cycle_at_fold_matches_merging_pair():
    def pair(a2):
        c = census(expand_canonical(CanonicalSystem(2, 0, (-0.001, a2, -1.0)))).anchors[0].cycles
        return [x.r_star for x in c]

    lo, hi = 0.08, 0.09  # no cycles at lo, a pair at hi
    assert pair(lo) == [] and len(pair(hi)) == 2
    while hi - lo > 1e-11:
        mid = 0.5 * (lo + hi)
        if len(pair(mid)) == 2:
            hi = mid
        else:
            lo = mid
    inner, outer = pair(hi)
    sys = expand_canonical(CanonicalSystem(2, 0, (-0.001, lo, -1.0)))
    semi = refine_semistable(sys, origin(sys), (0.5 * inner, 1.5 * outer))
    assert semi is not None and semi.stability == "semi-stable"
    assert semi.r_star == pytest.approx(0.5 * (inner + outer), rel=1e-4)


def test_cycle_around_several_points_is_not_counted():
    sys = expand_canonical(CanonicalSystem(1, 1, (0.001, -0.38311), (-3.0,), (1,)))
    c = census(sys)
    outer = c.anchors[-1]
    assert outer.outer and all(len(enclosed_points(sys, o, find_finite_singularities(sys))) == 3
                               for o in outer.outer)
    assert c.cycles_elsewhere == len(outer.cycles)


def test_grid_refinement_keeps_count_and_radius():
    sys = expand_canonical(CanonicalSystem(2, 0, (-0.001, 0.1, -1.0)))
    a = census(sys).anchors[0].cycles
    b = census(sys, n_samples=128).anchors[0].cycles
    assert len(b) >= len(a) == 2
    for x, y in zip(a, b):
        assert abs(x.r_star - y.r_star) / x.r_star < 1e-4


def test_census_json_shape():
    out = census(K1).to_dict()
    assert set(out) >= {"anchors", "totals"}
    assert out["totals"] == {"origin": 1, "others": 0}
    assert set(out["anchors"][0]["cycles"][0]) == {"r", "stability", "multiplier"}
