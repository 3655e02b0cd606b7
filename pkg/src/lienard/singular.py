"""Finite and infinite singular points, Poincaré indices and the index theorems."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, Sequence

import numpy as np

from .polysys import BivariatePoly, LienardSystem, Polynomial

TRACE_ZERO = 1e-10
ANTI_SADDLE_KINDS = ("node", "focus", "center-candidate")


class ContourError(ValueError):
    """The contour is under-sampled or passes (numerically) through a singular point."""


@dataclass(frozen=True)
class SingularPoint:
    x: float
    jacobian_trace: float
    jacobian_det: float
    kind: str
    index: int
    multiple: bool = False

    @property
    def is_anti_saddle(self) -> bool:
        return self.kind in ANTI_SADDLE_KINDS

    def to_dict(self) -> dict:
        return {"x": self.x, "trace": self.jacobian_trace, "det": self.jacobian_det,
                "kind": self.kind, "index": self.index}


@dataclass(frozen=True)
class InfinitePoint:
    """A point of the equator of the Poincaré sphere.

    ``axis`` is ``'x-ends'``, ``'y-ends'`` or ``'oblique'`` (then ``slope``
    gives the direction ``y = slope * x``).  ``index`` is the contour index of
    the compactified field there, ``None`` if it could not be resolved.
    """

    axis: str
    kind: str
    singular: bool = True
    trace: float = math.nan
    det: float = math.nan
    index: int | None = None
    slope: float | None = None

    def to_dict(self) -> dict:
        out = {"axis": self.axis, "kind": self.kind, "singular": self.singular, "index": self.index}
        if self.singular:
            out.update(trace=self.trace, det=self.det)
        if self.slope is not None:
            out["slope"] = self.slope
        return out


@dataclass(frozen=True)
class IndexLedger:
    N: int
    Nf: int
    Nc: int
    C: int
    Np: int
    Cp: int
    other_infinite: int
    conclusive: bool
    balanced: bool
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _classify(trace: float, det: float) -> str:
    if det < 0:
        return "saddle"
    if det == 0:
        return "degenerate"
    if abs(trace) < TRACE_ZERO:
        return "center-candidate"
    return "node" if trace * trace - 4 * det >= 0 else "focus"


def _lienard_field(sys: LienardSystem) -> Callable:
    a, g = sys.damping, sys.restoring

    def field(x, y):
        return y, -g(x) + y * a(x)

    return field


def winding_number(field: Callable, center, radius: float, samples: int = 256) -> int:
    """Turns of ``field`` along the counterclockwise circle, by branch-tracked angles."""
    cx, cy = center
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    px = cx + radius * np.cos(theta)
    py = cy + radius * np.sin(theta)
    fx, fy = field(px, py)
    fx = np.broadcast_to(np.asarray(fx, dtype=float), px.shape)
    fy = np.broadcast_to(np.asarray(fy, dtype=float), px.shape)
    mag = np.hypot(fx, fy)
    if not np.all(np.isfinite(mag)):
        raise ContourError("field is not finite on the contour")
    if mag.max() == 0.0 or mag.min() < 1e-12 * mag.max():
        raise ContourError("field magnitude underflows on the contour; a singular point is too close")
    gx, gy = np.roll(fx, -1), np.roll(fy, -1)
    steps = np.arctan2(fx * gy - fy * gx, fx * gx + fy * gy)
    if np.max(np.abs(steps)) > np.pi / 2:
        raise ContourError("consecutive field directions differ by more than pi/2; increase samples")
    turns = steps.sum() / (2 * np.pi)
    j = int(round(turns))
    if abs(turns - j) >= 0.25:
        raise ContourError(f"winding residue {abs(turns - j):.3g} too large")
    return j


def adaptive_winding(field: Callable, center, radius: float, samples: int = 256,
                     max_depth: int = 80, max_evals: int = 200_000) -> int:
    """Winding number with recursive bisection of badly resolved arcs.

    Near degenerate points the field direction can sweep through half a turn
    across an arc far thinner than any uniform sampling; such arcs are split
    until every increment stays below pi/4.
    """
    cx, cy = center

    def direction(phi):
        fx, fy = field(cx + radius * math.cos(phi), cy + radius * math.sin(phi))
        fx, fy = float(fx), float(fy)
        if not (math.isfinite(fx) and math.isfinite(fy)) or (fx == 0.0 and fy == 0.0):
            raise ContourError("field vanishes or is not finite on the contour")
        return fx, fy

    phis = [2 * math.pi * i / samples for i in range(samples)] + [2 * math.pi]
    vecs = [direction(p) for p in phis[:-1]]
    vecs.append(vecs[0])
    evals = samples
    total = 0.0
    for i in range(samples):
        stack = [(phis[i], vecs[i], phis[i + 1], vecs[i + 1], 0)]
        while stack:
            p0, v0, p1, v1, depth = stack.pop()
            step = math.atan2(v0[0] * v1[1] - v0[1] * v1[0], v0[0] * v1[0] + v0[1] * v1[1])
            if abs(step) <= math.pi / 4:
                total += step
                continue
            if depth >= max_depth or evals >= max_evals:
                raise ContourError("contour could not be resolved by arc subdivision")
            pm = 0.5 * (p0 + p1)
            vm = direction(pm)
            evals += 1
            # pushed in reverse so arcs are summed in order
            stack.append((pm, vm, p1, v1, depth + 1))
            stack.append((p0, v0, pm, vm, depth + 1))
    turns = total / (2 * math.pi)
    j = int(round(turns))
    if abs(turns - j) >= 0.25:
        raise ContourError(f"winding residue {abs(turns - j):.3g} too large")
    return j


def poincare_index(sys: LienardSystem, center, radius: float, samples: int = 256) -> int:
    """Index of the closed circle around ``center`` for the field of ``sys``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return winding_number(_lienard_field(sys), center, radius, samples)


def _local_radius(xs: Sequence[float], i: int) -> float:
    gaps = [abs(xs[i] - xs[j]) for j in range(len(xs)) if j != i]
    return min([0.25 * g for g in gaps] + [0.1])


def find_finite_singularities(sys: LienardSystem) -> list[SingularPoint]:
    """All finite singular points ``(x, 0)`` with ``g(x) = 0``, sorted by ``x``.

    The Jacobian at such a point is ``[[0, 1], [-g'(x), a(x)]]``.  Roots
    closer than the separation threshold are merged into one point of kind
    ``'saddle-node'`` whose index comes from a contour, not the Jacobian.
    """
    g = sys.restoring
    dg = g.derivative()
    a = sys.damping
    roots = g.real_roots()
    xs = [x for x, _ in roots]
    out = []
    for i, (x, multiple) in enumerate(roots):
        if x == 0.0 or abs(x) < 1e-15:
            x = 0.0
        trace = float(a(x))
        det = float(dg(x))
        kind = "saddle-node" if multiple else _classify(trace, det)
        if kind in ("saddle-node", "degenerate"):
            index = adaptive_winding(_lienard_field(sys), (x, 0.0), _local_radius(xs, i))
        else:
            index = -1 if kind == "saddle" else 1
        out.append(SingularPoint(x, trace, det, kind, index, multiple))
    return out


# --- infinity -------------------------------------------------------------------


def _chart_transform(poly: BivariatePoly, d: int, chart: int) -> BivariatePoly:
    """Multiply by the degree power and rewrite in chart coordinates.

    Chart 1: ``x = 1/z, y = u/z`` -> polynomial in ``(u, z)``.
    Chart 2: ``x = v/w, y = 1/w`` -> polynomial in ``(v, w)``.
    """
    out = {}
    for (i, j), c in poly.terms.items():
        key = (j, d - i - j) if chart == 1 else (i, d - i - j)
        out[key] = out.get(key, 0.0) + c
    return BivariatePoly(out)


def chart_field(sys: LienardSystem, chart: int) -> tuple[BivariatePoly, BivariatePoly]:
    """Compactified field in Poincaré chart 1 (``(u, z)``) or chart 2 (``(v, w)``).

    The equator is ``z = 0`` (``w = 0``).  A power of the second variable
    common to both components is divided out.
    """
    P, Q = sys.field_polys()
    d = max(P.degree(), Q.degree())
    Pt = _chart_transform(P, d, chart)
    Qt = _chart_transform(Q, d, chart)
    first = BivariatePoly.monomial(1, 0)
    second = BivariatePoly.monomial(0, 1)
    if chart == 1:
        A, B = Qt - first * Pt, -(second * Pt)
    else:
        A, B = Pt - first * Qt, -(second * Qt)
    m = min(j for (_, j) in list(A.terms) + list(B.terms)) if (A.terms or B.terms) else 0
    if m > 0:
        A = BivariatePoly({(i, j - m): c for (i, j), c in A.terms.items()})
        B = BivariatePoly({(i, j - m): c for (i, j), c in B.terms.items()})
    return A, B


def _partial(p: BivariatePoly, var: int) -> BivariatePoly:
    out = {}
    for (i, j), c in p.terms.items():
        e = (i, j)[var]
        if e:
            key = (i - 1, j) if var == 0 else (i, j - 1)
            out[key] = out.get(key, 0.0) + e * c
    return BivariatePoly(out)


def _equator_point(A: BivariatePoly, B: BivariatePoly, s: float, spacing: float,
                   axis: str, slope: float | None) -> InfinitePoint:
    J = np.array([
        [_partial(A, 0)(s, 0.0), _partial(A, 1)(s, 0.0)],
        [_partial(B, 0)(s, 0.0), _partial(B, 1)(s, 0.0)],
    ])
    tr = float(np.trace(J))
    det = float(np.linalg.det(J))
    scale = max(1.0, float(np.max(np.abs(J))))

    def field(u, z):
        return A(u, z), B(u, z)

    try:
        index = adaptive_winding(field, (s, 0.0), min(1e-2, 0.25 * spacing))
    except ContourError:
        index = None
    if abs(det) > 1e-12 * scale * scale:
        kind = "saddle" if det < 0 else ("node" if tr * tr - 4 * det >= 0 else "other")
    elif abs(tr) > 1e-12 * scale and index in (1, -1):
        # semi-hyperbolic: index +1 is a topological node, -1 a saddle
        kind = "node" if index == 1 else "saddle"
    else:
        kind = "other"
    return InfinitePoint(axis, kind, True, tr, det, index, slope)


def infinite_singularities(sys: LienardSystem) -> list[InfinitePoint] | None:
    """Every singular point on the equator, one entry per antipodal pair.

    Returns ``None`` when the whole equator consists of singular points.
    """
    A, B = chart_field(sys, 1)
    eq_u = Polynomial([A.terms.get((i, 0), 0.0) for i in range(A.degree() + 1)])
    eq_z = Polynomial([B.terms.get((i, 0), 0.0) for i in range(B.degree() + 1)])
    if eq_u.is_zero() and eq_z.is_zero():
        return None
    roots = [] if eq_u.is_zero() else [u for u, _ in eq_u.real_roots()]
    roots = [u for u in roots if abs(eq_z(u)) < 1e-9 * (1 + abs(u)) ** max(eq_z.degree, 1)]
    out = []
    for i, u in enumerate(roots):
        gaps = [abs(u - v) for j, v in enumerate(roots) if j != i]
        spacing = min(gaps + [1.0])
        axis = "x-ends" if abs(u) < 1e-12 else "oblique"
        out.append(_equator_point(A, B, 0.0 if axis == "x-ends" else u, spacing, axis,
                                  None if axis == "x-ends" else u))
    A2, B2 = chart_field(sys, 2)
    if abs(A2(0.0, 0.0)) < 1e-14 and abs(B2(0.0, 0.0)) < 1e-14:
        # nearest chart-1 point seen from chart 2 sits at v = 1/u
        far = [abs(1.0 / u) for u in roots if u != 0.0]
        out.append(_equator_point(A2, B2, 0.0, min(far + [1.0]), "y-ends", None))
    return out


def classify_infinite(sys: LienardSystem) -> list[InfinitePoint]:
    """The ends of the x-axis and of the y-axis on the Poincaré equator.

    Hyperbolic points are labelled from the chart Jacobian; semi-hyperbolic
    ones from their contour index; anything more degenerate, or an end that
    is not singular at all, is reported as ``'other'``.
    """
    pts = infinite_singularities(sys)
    if pts is None:
        return [InfinitePoint("x-ends", "other", True), InfinitePoint("y-ends", "other", True)]
    by_axis = {p.axis: p for p in pts if p.axis != "oblique"}
    return [by_axis.get(axis, InfinitePoint(axis, "other", singular=False)) for axis in ("x-ends", "y-ends")]


# The textbook picture of the equator for this family.
NOMINAL_INFINITY = {"x-ends": "node", "y-ends": "saddle"}


def infinity_disagreements(points: Sequence[InfinitePoint]) -> list[str]:
    """Axis ends whose computed kind differs from ``NOMINAL_INFINITY``."""
    return [p.axis for p in points if NOMINAL_INFINITY.get(p.axis, p.kind) != p.kind]


def check_first_index_theorem(sys: LienardSystem) -> IndexLedger:
    """Fill the node/focus/center/saddle ledger and test ``N+Nf+Nc+N' = C+C'+1``.

    Infinite points are counted per antipodal pair with their index as
    multiplicity: ``N'`` sums positive indices, ``C'`` negative ones, which
    reduces to node and saddle counts when every point is elementary.  The ledger is inconclusive when a
    finite point is not simple or an infinite index could not be resolved.
    """
    finite = find_finite_singularities(sys)
    N = sum(p.kind == "node" for p in finite)
    Nf = sum(p.kind == "focus" for p in finite)
    Nc = sum(p.kind == "center-candidate" for p in finite)
    C = sum(p.kind == "saddle" for p in finite)
    notes = []
    conclusive = True
    if any(p.kind in ("saddle-node", "degenerate") for p in finite):
        conclusive = False
        notes.append("non-simple finite singular point")
    inf = infinite_singularities(sys)
    if inf is None:
        return IndexLedger(N, Nf, Nc, C, 0, 0, 0, False, False, "equator entirely singular")
    # counted with index multiplicity so degenerate points still enter the balance
    Np = sum(max(p.index, 0) for p in inf if p.index is not None)
    Cp = sum(max(-p.index, 0) for p in inf if p.index is not None)
    other = sum(p.kind == "other" for p in inf)
    if any(p.index is None for p in inf):
        conclusive = False
        notes.append("unresolved infinite index")
    odd = sum(p.index not in (None, 1, -1) for p in inf)
    if odd:
        notes.append(f"{odd} infinite point(s) with index outside +-1")
    balanced = N + Nf + Nc + Np == C + Cp + 1
    return IndexLedger(N, Nf, Nc, C, Np, Cp, other, conclusive, balanced, "; ".join(notes))


def alternates(kinds: Sequence[str]) -> bool:
    """True iff consecutive kinds switch between saddle and anti-saddle."""
    flags = [k == "saddle" for k in kinds]
    return all(a != b for a, b in zip(flags, flags[1:]))


def check_alternation(sys: LienardSystem) -> str:
    finite = find_finite_singularities(sys)
    if any(p.kind in ("saddle-node", "degenerate") for p in finite):
        return "n/a"
    return "pass" if alternates([p.kind for p in finite]) else "fail"


def singular_report(sys: LienardSystem) -> dict:
    ledger = check_first_index_theorem(sys)
    ends = classify_infinite(sys)
    return {
        "finite": [p.to_dict() for p in find_finite_singularities(sys)],
        "infinite": [p.to_dict() for p in ends],
        "infinite_vs_nominal": {"nominal": NOMINAL_INFINITY, "disagree": infinity_disagreements(ends)},
        "ledger": {"N": ledger.N, "Nf": ledger.Nf, "Nc": ledger.Nc, "C": ledger.C,
                   "Np": ledger.Np, "Cp": ledger.Cp, "balanced": ledger.balanced,
                   "conclusive": ledger.conclusive, "note": ledger.note},
        "alternation": check_alternation(sys),
    }
