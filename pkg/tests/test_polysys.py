import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lienard.polysys import (BivariatePoly, CanonicalSystem, LienardSystem, Polynomial, canonical_from,
                             expand_canonical, parametrized_field, parse_slot, reversible_system,
                             rotation_determinant, symmetry_class, system_from_dict, to_classical,
                             vector_field)


def test_polynomial_hand_evaluation():
    p = Polynomial([1, 2, -3])
    assert p(2.0) == 1 + 4 - 12
    assert p.degree == 2
    assert Polynomial([1, 0, 0]).degree == 0
    np.testing.assert_allclose(p(np.array([0.0, 1.0])), [1.0, 0.0])


def test_derivative_and_antiderivative_termwise():
    p = Polynomial([4, 3, 6, 8])
    assert p.derivative().coeffs == (3, 12, 24)
    assert p.antiderivative().coeffs == (0, 4, 1.5, 2, 2)


def test_real_roots_of_factored_cubic():
    # (x - 1)(x + 2)(x - 0.5) = x^3 + 0.5x^2 - 2.5x + 1
    roots = Polynomial([1, -2.5, 0.5, 1]).real_roots()
    np.testing.assert_allclose(sorted(r for r, _ in roots), [-2, 0.5, 1], atol=1e-12)
    assert not any(m for _, m in roots)


def test_double_root_is_flagged():
    roots = Polynomial([1, -2, 1]).real_roots()
    assert len(roots) == 1
    assert roots[0][1]
    assert abs(roots[0][0] - 1) < 1e-6


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_real_roots_match_quadratic_formula(r1, r2):
    if abs(r1 - r2) < 1e-3:
        return
    b, c = -(r1 + r2), r1 * r2
    disc = math.sqrt(b * b - 4 * c)
    expected = sorted([(-b - disc) / 2, (-b + disc) / 2])
    found = sorted(r for r, _ in Polynomial([c, b, 1]).real_roots())
    np.testing.assert_allclose(found, expected, atol=1e-9)


def test_bivariate_product_difference_of_squares():
    x = BivariatePoly.monomial(1, 0)
    y = BivariatePoly.monomial(0, 1)
    assert (x + y) * (x - y) == x * x - y * y
    assert str(BivariatePoly.monomial(2, 2)) == "x^2*y^2"
    assert (x - x).is_zero()


def test_parse_slot():
    assert parse_slot("a2") == ("alpha", 2)
    assert parse_slot("b3") == ("beta", 3)
    with pytest.raises(ValueError):
        parse_slot("c1")


def test_vector_field_by_hand():
    sys = LienardSystem(1, 1, (0.5, 1.0, -1.0), (-3.0, 1.0))
    x, y = 2.0, 0.5
    g = x * (1 - 3 * x + x * x)
    a = 0.5 + x - x * x
    assert vector_field(sys, (x, y)) == pytest.approx((y, -g + y * a))


def test_system_validates_lengths():
    with pytest.raises(ValueError):
        LienardSystem(1, 0, (1.0, 2.0), ())
    with pytest.raises(ValueError):
        LienardSystem(0, 1, (1.0,), (1.0,))


def test_canonical_roundtrip():
    c = CanonicalSystem(2, 1, (0.1, -0.2, 1.0), (-3.0,), (1,))
    s = expand_canonical(c)
    assert s.alpha == (0.1, 1.0, -0.2, 1.0, 1.0)
    assert s.beta == (-3.0, 1.0)
    assert canonical_from(s) == c
    with pytest.raises(ValueError):
        canonical_from(LienardSystem(1, 0, (0.0, 2.0, 0.0)))


def test_delta_for_even_alpha_is_x_power_y_squared():
    s = expand_canonical(CanonicalSystem(2, 1, (0.3, 0.2, -1.0), (-3.0,), (1,)))
    for i in range(3):
        assert rotation_determinant(*parametrized_field(s, f"a{2 * i}")) == BivariatePoly.monomial(2 * i, 2)


def test_delta_for_odd_beta_in_reversible_system():
    rev = reversible_system(1, 2, (-3.0, 0.5), (1, -1))
    assert rev.alpha[0::2] == (0.0, 0.0)
    for j in (1, 2):
        delta = rotation_determinant(*parametrized_field(rev, f"b{2 * j - 1}"))
        assert delta == BivariatePoly.monomial(2 * j, 1, -1.0)


def test_rotation_determinant_rejects_nonlinear_family():
    P = [BivariatePoly(), BivariatePoly(), BivariatePoly.monomial(0, 1)]
    Q = [BivariatePoly(), BivariatePoly.monomial(1, 0)]
    with pytest.raises(ValueError):
        rotation_determinant(P, Q)


def test_symmetry_classes():
    assert symmetry_class(LienardSystem(1, 1, (0.0, 0.0, 0.0), (-3.0, 1.0))) == "x-axis-symmetric"
    assert symmetry_class(LienardSystem(1, 1, (0.0, 1.0, 0.0), (0.0, 1.0))) == "y-axis-symmetric"
    assert symmetry_class(LienardSystem(1, 0, (0.1, 1.0, -1.0))) == "none"


def test_to_classical_divides_by_power():
    assert to_classical(LienardSystem(1, 0, (0.1, 1.0, -1.0))) == pytest.approx((0.1, 0.5, -1 / 3))
    with pytest.raises(ValueError):
        to_classical(LienardSystem(0, 1, (0.0,), (1.0, 1.0)))


def test_system_from_dict_forms():
    s, c = system_from_dict({"alpha": [0.1, 1, -1]})
    assert c is None and s.k == 1
    s, c = system_from_dict({"form": "canonical", "k": 1, "l": 1, "alpha_even": [0.1, -1],
                             "beta_odd": [-3], "even_signs": ["+"]})
    assert c.even_signs == (1,)
    s, c = system_from_dict({"alpha_even": [0.1, -1], "beta_odd": [-3], "even_signs": ["+"]})
    assert (c.k, c.l) == (1, 1)
    with pytest.raises(ValueError):
        system_from_dict({"form": "canonical", "k": 1})
    with pytest.raises(ValueError):
        system_from_dict({"alpha": [0.1], "alpha_even": [0.1]})
    with pytest.raises(ValueError):
        system_from_dict({"form": "canonical", "k": 0, "alpha_even": [0.0], "beta": [1.0]})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2), st.data())
def test_delta_identity_holds_for_any_coefficients(k, l, data):
    floats = st.floats(-5, 5, allow_nan=False)
    c = CanonicalSystem(k, l, tuple(data.draw(floats) for _ in range(k + 1)),
                        tuple(data.draw(floats) for _ in range(l)),
                        tuple(data.draw(st.sampled_from([-1, 1])) for _ in range(l)))
    s = expand_canonical(c)
    i = data.draw(st.integers(0, k))
    assert rotation_determinant(*parametrized_field(s, f"a{2 * i}")) == BivariatePoly.monomial(2 * i, 2)
