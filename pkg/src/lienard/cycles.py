"""Displacement maps on rays from anti-saddles and the limit cycles they reveal."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._parallel import pmap
from .flow import crossings, default_escape_radius, first_return
from .polysys import LienardSystem, symmetry_class
from .singular import SingularPoint, find_finite_singularities

FIXED_POINT_TOL = 1e-9
SIGNAL_THRESHOLD = 1e-7
TANGENCY_THRESHOLD = 1e-5
DEFAULT_SAMPLES = 64
DEFAULT_R_MIN = 1e-3
RETURN_T_MAX = 2e3
RETURN_TOL = 1e-10
RAY_CAP = 0.98
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class CensusError(RuntimeError):
    pass


@dataclass(frozen=True)
class LimitCycle:
    anchor_x: float
    r_star: float
    stability: str
    multiplier_estimate: float
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {"r": self.r_star, "stability": self.stability, "multiplier": self.multiplier_estimate}


@dataclass
class DisplacementProfile:
    sys: LienardSystem
    anchor: SingularPoint
    radii: np.ndarray
    d: np.ndarray
    status: list[str]
    tol: float = RETURN_TOL
    r_escape: float | None = None

    @property
    def ok(self) -> np.ndarray:
        return np.array([s == "ok" for s in self.status], dtype=bool)

    def displacement(self, r: float) -> float:
        return displacement(self.sys, self.anchor.x, r, self.tol, self.r_escape)[0]

    def to_csv(self) -> str:
        rows = ["r,d,status"]
        for r, d, s in zip(self.radii.tolist(), self.d.tolist(), self.status):
            rows.append(f"{r!r},{'' if math.isnan(d) else repr(d)},{s}")
        return "\n".join(rows) + "\n"


@dataclass
class AnchorCensus:
    anchor: SingularPoint
    cycles: list[LimitCycle]
    notes: list[str] = field(default_factory=list)
    profile: DisplacementProfile | None = None
    outer: list[LimitCycle] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"x": self.anchor.x, "cycles": [c.to_dict() for c in self.cycles]}
        if self.outer:
            out["outer_cycles"] = [c.to_dict() for c in self.outer]
        if self.notes:
            out["notes"] = list(self.notes)
        return out


@dataclass
class CycleCensus:
    anchors: list[AnchorCensus]
    notes: list[str] = field(default_factory=list)

    @property
    def cycles_at_origin(self) -> int:
        return sum(len(a.cycles) for a in self.anchors if a.anchor.x == 0.0)

    @property
    def cycles_elsewhere(self) -> int:
        return sum(len(a.cycles) for a in self.anchors if a.anchor.x != 0.0)

    @property
    def totals(self) -> tuple[int, int]:
        return self.cycles_at_origin, self.cycles_elsewhere

    def at(self, x: float) -> AnchorCensus | None:
        for a in self.anchors:
            if abs(a.anchor.x - x) < 1e-9 * (1 + abs(x)):
                return a
        return None

    def to_dict(self) -> dict:
        out = {
            "anchors": [a.to_dict() for a in self.anchors],
            "totals": {"origin": self.cycles_at_origin, "others": self.cycles_elsewhere},
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def displacement(sys: LienardSystem, anchor_x: float, r: float, tol: float = RETURN_TOL,
                 r_escape: float | None = None, singular_points=None) -> tuple[float, str]:
    """``(d(r), status)`` for the ray ``y = 0, x > anchor_x``; ``d`` is NaN unless status is ok."""
    terminal, r_ret, winding = first_return(sys, anchor_x, r, tol=tol, t_max=RETURN_T_MAX,
                                            r_escape=r_escape, singular_points=singular_points)
    if terminal == "event-count-reached":
        if winding == -1:
            return r_ret - r, "ok"
        return math.nan, "hit-other-basin"
    if terminal == "escaped":
        return math.nan, "escaped"
    return math.nan, "no-return"


def ray_limit(anchor: SingularPoint, points: list[SingularPoint]) -> float:
    """Distance along +x to the next singular point, ``inf`` if there is none."""
    right = [p.x - anchor.x for p in points if p.x > anchor.x + 1e-12]
    return min(right) if right else math.inf


def damping_scale(sys: LienardSystem) -> float:
    """Cauchy bound on the real roots of the damping polynomial ``a(x)``.

    A cycle must cross a sign change of ``a`` (the energy balance forces
    it), and relaxation cycles reach about 1.5 times the outermost root, so
    this sets the length scale of the search.
    """
    c = sys.damping.coeffs
    if len(c) < 2:
        return 0.0
    return 1.0 + max(abs(v) for v in c[:-1]) / abs(c[-1])


def escape_radius_for(sys: LienardSystem, reach: float) -> float:
    """Escape radius for orbits launched within ``reach`` of the origin.

    Returning orbits keep ``|y|`` of the order of ``|A(x)|`` with ``A`` the
    antiderivative of the damping, so the bound is ten times the larger of
    the two scales, and never below the integrator default.
    """
    A = sys.damping.antiderivative()
    xs = np.linspace(-reach, reach, 2001)
    y_scale = float(np.max(np.abs(A(xs))))
    return max(default_escape_radius(sys), 10.0 * (reach + y_scale))


def default_r_max(sys: LienardSystem, anchor: SingularPoint, points: list[SingularPoint] | None = None,
                  scale: float = 1.0) -> float:
    """Escape-informed outer radius for the ray from ``anchor``.

    The larger of half the default escape radius and twice the damping
    scale, times ``scale``, capped just short of the next singular point.
    """
    points = find_finite_singularities(sys) if points is None else points
    base = max(0.5 * default_escape_radius(sys) - abs(anchor.x), 2.0 * damping_scale(sys))
    return min(scale * base, RAY_CAP * ray_limit(anchor, points))


def displacement_profile(sys: LienardSystem, anchor: SingularPoint, r_min: float = DEFAULT_R_MIN,
                         r_max: float | None = None, n_samples: int = DEFAULT_SAMPLES,
                         tol: float = RETURN_TOL, r_escape: float | None = None) -> DisplacementProfile:
    """Sample ``d(r)`` on ``n_samples`` log-spaced radii of the ray from ``anchor``."""
    if not anchor.is_anti_saddle:
        raise ValueError(f"anchor at x={anchor.x} is a {anchor.kind}, not an anti-saddle")
    points = find_finite_singularities(sys)
    if r_max is None:
        r_max = default_r_max(sys, anchor, points)
    if not 0 < r_min < r_max and n_samples > 1:
        raise ValueError("need 0 < r_min < r_max")
    if r_escape is None:
        r_escape = escape_radius_for(sys, abs(anchor.x) + r_max)
    radii = np.geomspace(r_min, r_max, n_samples) if n_samples > 1 else np.array([r_min])
    sing = np.array([p.x for p in points])
    results = pmap(lambda r: displacement(sys, anchor.x, float(r), tol, r_escape, sing), radii)
    d = np.array([v for v, _ in results])
    status = [s for _, s in results]
    prof = DisplacementProfile(sys, anchor, radii, d, status, tol, r_escape)
    if not any(s == "ok" for s in status):
        kinds = sorted(set(status))
        raise CensusError(f"no sample returned to the ray from x={anchor.x} (statuses: {', '.join(kinds)})")
    return prof


def _refine_root(f, a: float, b: float) -> float:
    return brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def _checked(prof: DisplacementProfile):
    def f(r):
        v = prof.displacement(r)
        if math.isnan(v):
            raise CensusError(f"return map undefined at r={r} inside a bracket")
        return v
    return f


def _make_cycle(prof: DisplacementProfile, r: float, stability: str) -> LimitCycle:
    f = prof.displacement
    h = 1e-4 * r
    slope = (f(r + h) - f(r - h)) / (2 * h)
    return LimitCycle(prof.anchor.x, r, stability, 1.0 + slope, abs(f(r)))


def _golden_min(f, a: float, b: float, iters: int = 60) -> tuple[float, float]:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        if b - a < 1e-12 * (1 + abs(a)):
            break
    return (c, fc) if fc < fd else (d, fd)


def _probe_dip(prof: DisplacementProfile, bracket: tuple[float, float], sign: float):
    """Minimise ``sign * d`` over the bracket.

    Returns ``('pair', r_min)`` if ``d`` crosses zero twice inside,
    ``('tangent', r_min)`` if it just touches zero, else ``(None, r_min)``.
    """
    f = _checked(prof)
    r_min, val = _golden_min(lambda r: sign * f(r), *bracket)
    if val < -FIXED_POINT_TOL:
        return "pair", r_min
    if abs(val) <= FIXED_POINT_TOL:
        return "tangent", r_min
    return None, r_min


def refine_semistable(sys: LienardSystem, anchor: SingularPoint, r_bracket: tuple[float, float],
                      tol: float = RETURN_TOL, r_escape: float | None = None) -> LimitCycle | None:
    """Semi-stable cycle at a tangency of ``d`` with zero inside ``r_bracket``, if any."""
    a, b = r_bracket
    prof = DisplacementProfile(sys, anchor, np.array([a, b]), np.full(2, np.nan), ["ok", "ok"], tol, r_escape)
    da, db = prof.displacement(a), prof.displacement(b)
    if math.isnan(da) or math.isnan(db) or da * db <= 0:
        return None
    if max(abs(da), abs(db)) < SIGNAL_THRESHOLD:
        return None
    kind, r = _probe_dip(prof, (a, b), math.copysign(1.0, da))
    if kind != "tangent" or r - a < 1e-9 * b or b - r < 1e-9 * b:
        return None
    return _make_cycle(prof, r, "semi-stable")


def _reversed(prof: DisplacementProfile) -> DisplacementProfile:
    """Profile of the time-reversed flow, mirrored in ``y`` so it still turns clockwise.

    That mirror image is the same family with every ``alpha`` negated; its
    return map is the inverse of the original one on the ray.
    """
    sys = prof.sys
    rev = LienardSystem(sys.k, sys.l, tuple(-a for a in sys.alpha), sys.beta)
    return DisplacementProfile(rev, prof.anchor, prof.radii, np.full(len(prof.radii), np.nan),
                               prof.status, prof.tol, prof.r_escape)


def _escape_bracket(prof: DisplacementProfile, lo: float, hi: float, iters: int = 80) -> LimitCycle | None:
    """Unstable cycle between an inward-returning radius and an escaping one.

    Forward bisection works for mild repulsion.  Strongly repelling cycles
    (time-reversed relaxation oscillations) are found as attracting cycles
    of the reversed flow instead.
    """
    f = prof.displacement
    a, b = lo, hi
    for _ in range(iters):
        mid = 0.5 * (a + b)
        v = f(mid)
        if math.isnan(v):
            b = mid
        elif v < 0:
            a = mid
        else:
            return _make_cycle(prof, _refine_root(_checked(prof), a, mid), "unstable")
        if b - a < 1e-13 * b:
            break
    rev = _reversed(prof)
    g = rev.displacement
    grid = np.linspace(lo, hi, 17)
    vals = [g(float(r)) for r in grid]
    for (r0, v0), (r1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if v0 > SIGNAL_THRESHOLD and v1 < -SIGNAL_THRESHOLD:
            root = _refine_root(_checked(rev), float(r0), float(r1))
            back = _make_cycle(rev, root, "stable")
            mult = 1.0 / back.multiplier_estimate if back.multiplier_estimate else math.inf
            return LimitCycle(back.anchor_x, root, "unstable", mult, back.residual)
    return None


def count_cycles(profile: DisplacementProfile, notes: list[str] | None = None) -> list[LimitCycle]:
    """Limit cycles implied by the profile, refined and classified.

    Sign changes between significant samples (``|d|`` above the signal
    threshold) are refined to simple cycles; dips of ``|d|`` below the
    tangency threshold are probed for semi-stable cycles or close pairs.
    Sign flips among insignificant samples only are noise.
    """
    notes = [] if notes is None else notes
    ok = profile.ok
    if ok.sum() < 2:
        raise CensusError("profile needs at least two returning samples")
    r, d = profile.radii, profile.d
    f = _checked(profile)
    cycles: list[LimitCycle] = []

    idx = np.flatnonzero(ok)
    # runs of consecutive ok samples; cycles are only sought inside a run
    runs, cur = [], [idx[0]]
    for i in idx[1:]:
        if i == cur[-1] + 1:
            cur.append(i)
        else:
            runs.append(cur)
            cur = [i]
    runs.append(cur)

    noise = 0
    for run in runs:
        sig = [i for i in run if abs(d[i]) > SIGNAL_THRESHOLD]
        for i, j in zip(sig, sig[1:]):
            if d[i] * d[j] < 0:
                root = _refine_root(f, r[i], r[j])
                cycles.append(_make_cycle(profile, root, "stable" if d[i] > 0 else "unstable"))
        for i, j in zip(run, run[1:]):
            if abs(d[i]) <= SIGNAL_THRESHOLD and abs(d[j]) <= SIGNAL_THRESHOLD and d[i] * d[j] < 0:
                noise += 1
        # interior local minimum of |d| with the same sign on both sides
        for a, m, b in zip(sig, sig[1:], sig[2:]):
            if not (d[a] * d[m] > 0 and d[m] * d[b] > 0):
                continue
            if abs(d[m]) < TANGENCY_THRESHOLD and abs(d[m]) < abs(d[a]) and abs(d[m]) < abs(d[b]):
                s = math.copysign(1.0, d[m])
                kind, rm = _probe_dip(profile, (r[a], r[b]), s)
                if kind == "pair":
                    lo = _refine_root(f, r[a], rm)
                    hi = _refine_root(f, rm, r[b])
                    inner = "stable" if s > 0 else "unstable"
                    outer = "unstable" if s > 0 else "stable"
                    cycles += [_make_cycle(profile, lo, inner), _make_cycle(profile, hi, outer)]
                    notes.append(f"close cycle pair near r={rm:.6g} resolved between grid samples")
                elif kind == "tangent":
                    cycles.append(_make_cycle(profile, rm, "semi-stable"))
    # an inward return followed by an escape encloses an unstable cycle,
    # unless the basin boundary runs off to infinity
    for i in range(len(r) - 1):
        if ok[i] and d[i] < -SIGNAL_THRESHOLD and profile.status[i + 1] == "escaped":
            found = _escape_bracket(profile, r[i], r[i + 1])
            if found is None:
                notes.append(f"escape boundary between r={r[i]:.6g} and r={r[i + 1]:.6g} without a cycle")
            else:
                cycles.append(found)
    if noise:
        notes.append(f"{noise} sign flip(s) below the signal threshold discarded as noise")
    cycles.sort(key=lambda c: c.r_star)
    return cycles


def enclosed_points(sys: LienardSystem, cycle: LimitCycle, points: list[SingularPoint],
                    r_escape: float | None = None) -> list[float] | None:
    """Abscissae of the singular points inside ``cycle``, or None if the orbit
    never reaches the axis on the left of its anchor.

    All singular points sit on ``y = 0``, and a cycle around the anchor meets
    that axis once on each side, so the enclosed points are those between
    the two crossings.
    """
    ray = ((cycle.anchor_x, 0.0), (-1.0, 0.0))
    ev = crossings(sys, (cycle.anchor_x + cycle.r_star, 0.0), ray, 1, t_max=RETURN_T_MAX, r_escape=r_escape)
    if not ev:
        return None
    left = cycle.anchor_x - ev[0].r
    return [p.x for p in points if left < p.x < cycle.anchor_x + cycle.r_star]


def check_nesting(cycles: list[LimitCycle]) -> bool:
    return all(b.r_star - a.r_star > 10 * FIXED_POINT_TOL for a, b in zip(cycles, cycles[1:]))


def check_stability_alternation(cycles: list[LimitCycle]) -> bool:
    for a, b in zip(cycles, cycles[1:]):
        if "semi-stable" in (a.stability, b.stability):
            continue
        if a.stability == b.stability:
            return False
    return True


def census(sys: LienardSystem, n_samples: int = DEFAULT_SAMPLES, r_min: float = DEFAULT_R_MIN,
           r_max: float | None = None, tol: float = RETURN_TOL, r_escape: float | None = None,
           r_max_scale: float = 1.0, keep_profiles: bool = False) -> CycleCensus:
    """Limit cycles around every anti-saddle, each found on its own ray.

    ``r_max`` overrides the default radius bound of every anchor;
    ``r_max_scale`` widens the default bound but never past the next
    singular point on the ray.
    """
    points = find_finite_singularities(sys)
    symmetric = symmetry_class(sys) != "none"
    out = CycleCensus([])
    if symmetric:
        out.notes.append(f"{symmetry_class(sys)}: anti-saddles are certified centers")
    for anchor in points:
        if not anchor.is_anti_saddle:
            continue
        notes: list[str] = []
        limit = ray_limit(anchor, points)
        if r_max is None:
            top = default_r_max(sys, anchor, points, r_max_scale)
        else:
            top = min(r_max, RAY_CAP * limit)
        try:
            prof = displacement_profile(sys, anchor, r_min, top, n_samples, tol, r_escape)
        except CensusError as exc:
            notes.append(f"no returns: {exc}")
            out.anchors.append(AnchorCensus(anchor, [], notes))
            continue
        escaped = sum(s == "escaped" for s in prof.status)
        if escaped:
            notes.append(f"{escaped} of {len(prof.status)} samples escaped")
        if sum(prof.ok) < 2:
            notes.append("fewer than two returning samples")
            cycles = []
        else:
            cycles = count_cycles(prof, notes)
        if symmetric and cycles:
            notes.append(f"{len(cycles)} spurious cycle(s) overridden by symmetry")
            cycles = []
        outer = []
        if len(points) > 1:
            own = []
            for c in cycles:
                inside = enclosed_points(sys, c, points, prof.r_escape)
                if inside is not None and len(inside) > 1:
                    outer.append(c)
                    notes.append(f"cycle at r={c.r_star:.6g} surrounds {len(inside)} singular points;"
                                 " reported as an outer cycle, not counted")
                else:
                    own.append(c)
            cycles = own
        if not check_nesting(cycles):
            raise CensusError(f"cycles around x={anchor.x} are not strictly nested")
        if not check_stability_alternation(cycles):
            notes.append("adjacent cycles share a stability class")
        out.anchors.append(AnchorCensus(anchor, cycles, notes, prof if keep_profiles else None, outer))
    return out
