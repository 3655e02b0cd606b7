import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.integrate._ivp.rk import RK45

from lienard import flow
from lienard.flow import crossings, first_return, integrate
from lienard.polysys import LienardSystem, vector_field

HARMONIC = LienardSystem(0, 0, (0.0,))


def test_tableau_matches_scipy_dormand_prince():
    np.testing.assert_allclose(flow._C, RK45.C, atol=0)
    np.testing.assert_allclose(flow._B, RK45.B, atol=0)
    # scipy stores the error weights with the opposite sign; only |err| is used
    np.testing.assert_allclose(flow._E, -RK45.E, atol=1e-18)
    np.testing.assert_allclose(flow._P, RK45.P, atol=1e-15)
    np.testing.assert_allclose(flow._A, RK45.A[:, :], atol=0)


def test_harmonic_oscillator_exact_solution():
    tr = integrate(HARMONIC, (1.0, 0.0), t_max=2 * math.pi, tol=1e-10)
    # x = cos t, y = -sin t
    err = np.max(np.hypot(tr.x - np.cos(tr.t), tr.y + np.sin(tr.t)))
    assert err < 1e-8
    assert tr.terminal == "time-limit"
    assert tr.t[-1] == pytest.approx(2 * math.pi)


def test_agrees_with_scipy_on_van_der_pol_like_system():
    sys = LienardSystem(1, 1, (0.1, 1.0, -1.0), (-3.0, 1.0))
    tr = integrate(sys, (0.2, 0.1), t_max=5.0, tol=1e-11)
    ref = solve_ivp(lambda t, u: vector_field(sys, u), (0, 5.0), [0.2, 0.1], method="DOP853",
                    rtol=1e-12, atol=1e-12)
    assert tr.end == pytest.approx(tuple(ref.y[:, -1]), abs=1e-8)


def test_backward_run_retraces_forward_run():
    sys = LienardSystem(1, 0, (0.1, 1.0, -1.0))
    fwd = integrate(sys, (0.3, 0.2), t_max=3.0, tol=1e-11)
    back = integrate(sys, fwd.end, t_max=3.0, tol=1e-11, backward=True)
    assert back.end == pytest.approx((0.3, 0.2), abs=1e-8)


def test_energy_conserved_without_damping():
    sys = LienardSystem(0, 1, (0.0,), (-3.0, 1.0))
    tr = integrate(sys, (0.2, 0.0), t_max=20.0, tol=1e-11)
    G = sys.restoring.antiderivative()
    E = 0.5 * tr.y ** 2 + G(tr.x)
    assert np.ptp(E) < 1e-9


def test_escape_and_convergence_terminals():
    blowup = LienardSystem(1, 0, (1.0, 0.0, 1.0))
    assert integrate(blowup, (1.0, 0.0), t_max=100.0, r_escape=50.0).terminal == "escaped"
    sink = LienardSystem(0, 0, (-1.0,))
    assert integrate(sink, (0.1, 0.0), t_max=1e3).terminal == "converged-to-point"


def test_start_outside_escape_radius_rejected():
    with pytest.raises(ValueError):
        integrate(HARMONIC, (5.0, 0.0), t_max=1.0, r_escape=1.0)
    with pytest.raises(ValueError):
        integrate(HARMONIC, (0.5, 0.0), t_max=1.0, tol=0.0)


def test_ray_crossings_of_harmonic_oscillator():
    ev = crossings(HARMONIC, (1.0, 0.0), ((0.0, 0.0), (1.0, 0.0)), 3, tol=1e-11)
    assert [e.winding for e in ev] == [-1, -2, -3]
    np.testing.assert_allclose([e.t for e in ev], [2 * math.pi, 4 * math.pi, 6 * math.pi], rtol=1e-8)
    np.testing.assert_allclose([e.r for e in ev], 1.0, atol=1e-8)


def test_first_return_time_reversal_mirror():
    """Reversing time and mirroring y negates every damping coefficient."""
    sys = LienardSystem(1, 0, (0.1, 1.0, -1.0))
    mirror = LienardSystem(1, 0, (-0.1, -1.0, 1.0))
    _, r1, w = first_return(sys, 0.0, 0.4, tol=1e-11)
    assert w == -1
    _, r0, _ = first_return(mirror, 0.0, r1, tol=1e-11)
    assert r0 == pytest.approx(0.4, abs=1e-8)


def test_trajectory_csv_header_and_rows():
    tr = integrate(HARMONIC, (1.0, 0.0), t_max=0.1)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x,y"
    assert len(lines) == len(tr.t) + 1


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-3.0, 3.0))
def test_undamped_flow_is_reversible_under_y_mirror(x0, y0, b1):
    """With zero damping, (x, y, t) -> (x, -y, -t) maps orbits to orbits."""
    sys = LienardSystem(0, 1, (0.0,), (b1, 1.0))
    fwd = integrate(sys, (x0, y0), t_max=1.0, tol=1e-11, r_escape=1e6)
    back = integrate(sys, (x0, -y0), t_max=1.0, tol=1e-11, r_escape=1e6, backward=True)
    if fwd.terminal != "time-limit" or back.terminal != "time-limit":
        return
    assert back.end[0] == pytest.approx(fwd.end[0], abs=1e-7)
    assert back.end[1] == pytest.approx(-fwd.end[1], abs=1e-7)
