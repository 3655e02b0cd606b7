import math

import pytest

from lienard.polysys import CanonicalSystem, LienardSystem, expand_canonical
from lienard.singular import (ContourError, InfinitePoint, adaptive_winding, alternates, check_alternation,
                              check_first_index_theorem, classify_infinite, find_finite_singularities,
                              infinity_disagreements, poincare_index, singular_report, winding_number)

L1 = LienardSystem(1, 1, (0.1, 1.0, -1.0), (-3.0, 1.0))


def test_finite_points_match_quadratic_formula():
    # g(x) = x (1 - 3x + x^2): roots 0 and (3 -+ sqrt 5) / 2
    pts = find_finite_singularities(L1)
    xs = [p.x for p in pts]
    assert xs == pytest.approx([0.0, (3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2], abs=1e-12)
    assert [p.kind for p in pts] == ["focus", "saddle", "focus"]


def test_jacobian_trace_and_determinant_by_hand():
    for p in find_finite_singularities(L1):
        x = p.x
        assert p.jacobian_trace == pytest.approx(0.1 + x - x * x, abs=1e-12)
        assert p.jacobian_det == pytest.approx(1 - 6 * x + 3 * x * x, abs=1e-12)


def test_winding_of_linear_and_quadratic_fields():
    assert winding_number(lambda x, y: (x, y), (0, 0), 1.0) == 1
    assert winding_number(lambda x, y: (x, -y), (0, 0), 1.0) == -1
    assert winding_number(lambda x, y: (x * x - y * y, 2 * x * y), (0, 0), 1.0) == 2
    assert winding_number(lambda x, y: (1.0, 0.0), (0, 0), 1.0) == 0


def test_adaptive_winding_agrees_on_smooth_field():
    assert adaptive_winding(lambda x, y: (x * x - y * y, -2 * x * y), (0, 0), 1.0) == -2


def test_contour_through_singular_point_is_rejected():
    with pytest.raises(ContourError):
        winding_number(lambda x, y: (x - 1.0, y), (0, 0), 1.0)


def test_index_additivity_on_enclosing_contour():
    pts = find_finite_singularities(L1)
    parts = sum(poincare_index(L1, (p.x, 0.0), 0.1) for p in pts)
    whole = poincare_index(L1, (1.3, 0.0), 2.0)
    assert parts == whole == 1


def test_first_index_theorem_on_examples():
    for sys in (L1, LienardSystem(1, 0, (0.1, 1.0, -1.0)),
                expand_canonical(CanonicalSystem(2, 2, (0.1, 0.2, -1.0), (-3.0, 0.5), (1, -1)))):
        led = check_first_index_theorem(sys)
        assert led.conclusive
        assert led.balanced


def test_infinity_reports_both_axis_ends():
    ends = classify_infinite(L1)
    assert [e.axis for e in ends] == ["x-ends", "y-ends"]


def test_alternation_helper():
    assert alternates(["focus", "saddle", "node", "saddle", "focus"])
    assert not alternates(["focus", "focus"])
    assert check_alternation(L1) == "pass"
    double = LienardSystem(0, 1, (0.0,), (-2.0, 1.0))  # g = x (x - 1)^2
    assert check_alternation(double) == "n/a"


def test_linear_center_equator_is_other_not_a_crash():
    ends = classify_infinite(LienardSystem(0, 0, (0.0,)))
    assert [e.kind for e in ends] == ["other", "other"]


def test_disagreement_flags_only_mismatched_ends():
    assert infinity_disagreements([InfinitePoint("x-ends", "node"), InfinitePoint("y-ends", "saddle")]) == []
    assert infinity_disagreements([InfinitePoint("x-ends", "saddle"), InfinitePoint("y-ends", "saddle")]) == ["x-ends"]


def test_report_carries_per_instance_comparison():
    rep = singular_report(LienardSystem(1, 0, (0.1, 1.0, -1.0)))
    ends = {e["axis"]: e["kind"] for e in rep["infinite"]}
    flagged = rep["infinite_vs_nominal"]["disagree"]
    assert flagged == [a for a, k in ends.items() if k != {"x-ends": "node", "y-ends": "saddle"}[a]]
