"""Field-rotation continuation: Hopf events, parameter sweeps and cycle construction.

Increasing any even damping coefficient ``alpha_2i`` turns the canonical
field the same way at every point (the rotation determinant is
``x**(2i) * y**2 >= 0``).  Under that rotation stable cycles expand and
unstable ones contract, which is the rule the sweeps below check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cycles import CensusError, CycleCensus, LimitCycle, census
from .polysys import CanonicalSystem, LienardSystem, expand_canonical, parse_slot
from .singular import SingularPoint, find_finite_singularities

HOPF_WIDTH = 1e-8
DEFAULT_STEPS = 50
LOCALIZE_FRACTION = 1e-6
TRACK_GATE = 0.3
LADDER_RATIO = 10.0
ADAPT_BUDGET = 10
MAX_HALVINGS = 6


@dataclass(frozen=True)
class BifurcationEvent:
    kind: str  # hopf | fold | escape-to-separatrix | count-change
    slot: str
    value: float
    anchor: SingularPoint
    detail: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "slot": self.slot, "value": self.value,
                "anchor_x": self.anchor.x, "detail": self.detail}


@dataclass(frozen=True)
class SweepStep:
    slot: str
    to: float
    steps: int = DEFAULT_STEPS


@dataclass
class SweepPlan:
    """Ordered even-damping slots, each swept from its template value to ``to``.

    Target signs must alternate along ``order``.  Either leading sign is
    accepted: which one yields a stable outermost cycle depends on the
    rotation direction, not on a fixed convention.
    """

    template: CanonicalSystem
    order: list[SweepStep]

    def __post_init__(self):
        seen = set()
        for st in self.order:
            kind, idx = parse_slot(st.slot)
            if kind != "alpha" or idx % 2:
                raise ValueError(f"{st.slot} is not an even damping slot")
            if idx > 2 * self.template.k:
                raise ValueError(f"{st.slot} exceeds degree 2k={2 * self.template.k}")
            if st.slot in seen:
                raise ValueError(f"slot {st.slot} appears twice")
            if st.steps < 1:
                raise ValueError("steps must be positive")
            seen.add(st.slot)
        signs = [math.copysign(1.0, st.to) for st in self.order if st.to != 0]
        if any(a == b for a, b in zip(signs, signs[1:])):
            raise ValueError("target signs must alternate along the plan")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepPlan":
        from .polysys import system_from_dict
        _, csys = system_from_dict(data["template"])
        if csys is None:
            raise ValueError("sweep template must be in canonical form")
        order = [SweepStep(o["slot"], float(o["to"]), int(o.get("steps", DEFAULT_STEPS))) for o in data["order"]]
        return cls(csys, order)

    def to_dict(self) -> dict:
        return {"template": self.template.to_dict(),
                "order": [{"slot": s.slot, "to": s.to, "steps": s.steps} for s in self.order]}


@dataclass
class SweepLog:
    snapshots: list[tuple[str, float, CycleCensus]] = field(default_factory=list)
    events: list[BifurcationEvent] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    aborted: str | None = None

    @property
    def ok(self) -> bool:
        return self.aborted is None and not self.violations

    def to_dict(self) -> dict:
        return {
            "snapshots": [{"slot": s, "value": v, "totals": list(c.totals), "census": c.to_dict()}
                          for s, v, c in self.snapshots],
            "events": [e.to_dict() for e in self.events],
            "violations": list(self.violations),
            "aborted": self.aborted,
        }


def _set(template, slot: str, value: float):
    kind, idx = parse_slot(slot)
    if isinstance(template, CanonicalSystem):
        if kind == "alpha" and idx % 2 == 0:
            return template.with_alpha_even(idx, value)
        if kind == "beta" and idx % 2 == 1:
            vals = list(template.beta_odd)
            vals[(idx - 1) // 2] = value
            return CanonicalSystem(template.k, template.l, template.alpha_even, tuple(vals), template.even_signs)
        raise ValueError(f"{slot} is fixed by the canonical form")
    return template.with_slot(slot, value)


def _expand(template) -> LienardSystem:
    return expand_canonical(template) if isinstance(template, CanonicalSystem) else template


def _track_anchor(sys: LienardSystem, x_ref: float) -> SingularPoint | None:
    pts = find_finite_singularities(sys)
    if not pts:
        return None
    return min(pts, key=lambda p: abs(p.x - x_ref))


def hopf_scan(template, slot: str, lo: float, hi: float, anchor_x: float = 0.0,
              samples: int = 64) -> list[BifurcationEvent]:
    """Values of ``slot`` in ``[lo, hi]`` where the anchor's Jacobian trace vanishes.

    Each sign change on a uniform grid is bisected to width 1e-8 and then
    finished with one secant step, which is exact when the trace is affine
    in the parameter (every damping slot).  For restoring slots the anchor
    moves with the parameter and is re-located at every evaluation.
    """
    def trace(p):
        sys = _expand(_set(template, slot, p))
        pt = _track_anchor(sys, anchor_x)
        if pt is None or abs(pt.x - anchor_x) > 0.5 * (1 + abs(anchor_x)):
            return math.nan
        return sys.damping(pt.x)

    grid = np.linspace(lo, hi, samples + 1)
    vals = [trace(float(p)) for p in grid]
    # only genuine sign changes count; a trace that vanishes identically has none
    nonzero = [(float(p), v) for p, v in zip(grid, vals) if not math.isnan(v) and v != 0.0]
    events = []
    for (a, fa), (b, fb) in zip(nonzero, nonzero[1:]):
        if fa * fb > 0:
            continue
        zeros = [float(p) for p, v in zip(grid, vals) if a < p < b and v == 0.0]
        root = zeros[0] if len(zeros) == 1 else _bisect_trace(trace, a, b, fa, fb)
        pt = _track_anchor(_expand(_set(template, slot, root)), anchor_x)
        events.append(BifurcationEvent("hopf", slot, root, pt, trace(root)))
    return events


def _bisect_trace(trace, a: float, b: float, fa: float, fb: float) -> float:
    while b - a > HOPF_WIDTH:
        m = 0.5 * (a + b)
        fm = trace(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    root = a - fa * (b - a) / (fb - fa)
    return root if a <= root <= b else 0.5 * (a + b)


def _counts(c: CycleCensus) -> dict[float, int]:
    return {round(a.anchor.x, 9): len(a.cycles) for a in c.anchors}


def _match(prev: list[LimitCycle], cur: list[LimitCycle]) -> list[tuple[LimitCycle, LimitCycle]]:
    """Nearest-radius pairing inside the relative gate, same stability only."""
    pairs, used = [], set()
    for p in prev:
        best, best_err = None, TRACK_GATE
        for j, c in enumerate(cur):
            if j in used or c.stability != p.stability:
                continue
            err = abs(c.r_star - p.r_star) / p.r_star
            if err < best_err:
                best, best_err = j, err
        if best is not None:
            used.add(best)
            pairs.append((p, cur[best]))
    return pairs


def rotation_violations(prev: CycleCensus, cur: CycleCensus, direction: float) -> list[str]:
    """Tracked cycles that moved against the rotation rule.

    ``direction`` is the sign of the change of an even damping slot.
    """
    out = []
    for a in prev.anchors:
        b = cur.at(a.anchor.x)
        if b is None:
            continue
        for p, c in _match(a.cycles, b.cycles):
            move = c.r_star - p.r_star
            if abs(move) <= 1e-9 * (1 + p.r_star) or p.stability == "semi-stable":
                continue
            want = direction if p.stability == "stable" else -direction
            if math.copysign(1.0, move) != want:
                out.append(f"{p.stability} cycle at x={a.anchor.x:.6g} moved from r={p.r_star:.9g} to r={c.r_star:.9g}")
    return out


def _classify_change(sys_a: LienardSystem, sys_b: LienardSystem, ca: CycleCensus, cb: CycleCensus,
                     anchor_x: float) -> str:
    before = ca.at(anchor_x)
    after = cb.at(anchor_x)
    na = len(before.cycles) if before else 0
    nb = len(after.cycles) if after else 0
    ta, tb = sys_a.damping(anchor_x), sys_b.damping(anchor_x)
    if abs(na - nb) == 1 and ta * tb <= 0:
        return "hopf"
    if abs(na - nb) == 2:
        return "fold"
    if abs(na - nb) == 1 and before is not None and na > nb:
        pts = find_finite_singularities(sys_a)
        right = [p.x for p in pts if p.x > anchor_x + 1e-12]
        if right and max(c.r_star for c in before.cycles) > 0.5 * (min(right) - anchor_x):
            return "escape-to-separatrix"
    return "count-change"


def _localize(template, slot: str, a: float, b: float, ca: CycleCensus, anchor_x: float,
              width: float, census_kw: dict) -> tuple[float, float]:
    """Bisect the census count at ``anchor_x`` between ``a`` and ``b``."""
    target = _counts(ca).get(round(anchor_x, 9), 0)
    while abs(b - a) > width:
        m = 0.5 * (a + b)
        cm = census(_expand(_set(template, slot, m)), **census_kw)
        if _counts(cm).get(round(anchor_x, 9), 0) == target:
            a = m
        else:
            b = m
    return a, b


def sweep(plan: SweepPlan, census_kw: dict | None = None) -> SweepLog:
    """Replay the plan slot by slot, snapshotting the census at every step.

    Count changes are localized to a bracket of width 1e-6 times the slot
    range and logged as events.  A jump by more than two cycles halves the
    step (up to a few times); a census failure ends the sweep with the
    partial log.
    """
    census_kw = dict(census_kw or {})
    log = SweepLog()
    current = plan.template
    for st in plan.order:
        start = _expand(current).get(st.slot)
        span = st.to - start
        width = LOCALIZE_FRACTION * abs(span) if span else 0.0
        values = list(np.linspace(start, st.to, st.steps + 1))
        prev_v, prev_c = None, None
        i = 0
        halvings = 0
        while i < len(values):
            v = float(values[i])
            tmpl = _set(current, st.slot, v)
            try:
                c = census(_expand(tmpl), **census_kw)
            except CensusError as exc:
                log.aborted = f"census failed at {st.slot}={v!r}: {exc}"
                return log
            if prev_c is not None:
                before, after = _counts(prev_c), _counts(c)
                jumps = {x: abs(after.get(x, 0) - n) for x, n in before.items()}
                if any(j > 2 for j in jumps.values()) and halvings < MAX_HALVINGS:
                    values.insert(i, 0.5 * (prev_v + v))
                    halvings += 1
                    continue
                if any(j > 2 for j in jumps.values()):
                    log.violations.append(f"count jump above 2 between {st.slot}={prev_v!r} and {v!r}")
                halvings = 0
                log.violations += rotation_violations(prev_c, c, math.copysign(1.0, v - prev_v))
                for x, j in sorted(jumps.items()):
                    if j == 0:
                        continue
                    sa = _expand(_set(current, st.slot, prev_v))
                    sb = _expand(tmpl)
                    kind = _classify_change(sa, sb, prev_c, c, x)
                    if kind == "hopf":
                        lo, hi = sorted((prev_v, v))
                        found = hopf_scan(current, st.slot, lo, hi, x, samples=1)
                        if not found:
                            # the bracket starts or ends exactly on the critical value
                            p_end = prev_v if sa.damping(x) == 0.0 else v
                            pt = _track_anchor(_expand(_set(current, st.slot, p_end)), x)
                            found = [BifurcationEvent("hopf", st.slot, p_end, pt, 0.0)]
                        log.events += found
                        continue
                    a, b = _localize(current, st.slot, prev_v, v, prev_c, x, width, census_kw)
                    anchor = prev_c.at(x).anchor if prev_c.at(x) else c.at(x).anchor
                    log.events.append(BifurcationEvent(kind, st.slot, 0.5 * (a + b), anchor, abs(b - a)))
            log.snapshots.append((st.slot, v, c))
            prev_v, prev_c = v, c
            i += 1
        current = _set(current, st.slot, st.to)
    return log


@dataclass
class Construction:
    system: CanonicalSystem
    census: CycleCensus
    target: tuple[int, int]
    reached: bool
    attempts: int
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {"system": self.system.to_dict(), "census": self.census.to_dict(),
                "target": list(self.target), "reached": self.reached,
                "attempts": self.attempts, "diagnostic": self.diagnostic}


def _ladder(k: int, pattern: int, shrink: list[int], ratio: float) -> list[float]:
    """Even damping values from the top rung down, signs alternating from ``pattern``."""
    vals = [0.0] * (k + 1)
    if k == 0:
        return vals
    mag = 1.0
    for i in range(k + 1):
        if i:
            mag /= ratio ** (1 + shrink[i - 1])
        vals[k - i] = pattern * (-1) ** i * mag
    return vals


def construct_configuration(k: int, l: int, beta_odd=(), even_signs=(), ratio: float = LADDER_RATIO,
                            budget: int = ADAPT_BUDGET, leading_sign: int = -1,
                            census_kw: dict | None = None) -> Construction:
    """Build a canonical system with ``k`` cycles at the origin and one at each other anti-saddle.

    The even damping coefficients start as an alternating geometric ladder
    (``|alpha_2k| = 1``, each lower rung ``ratio`` times smaller).  While the
    origin has too few cycles the lowest rung not yet adjusted is shrunk by
    another factor ``ratio``, up to ``budget`` adjustments.  For ``l > 0`` the
    top rung is moved next to the Hopf value of the nearest non-origin
    anti-saddle, probing small offsets on both sides.  Both sign patterns
    are tried, ``leading_sign`` first.  The best census found is returned
    when the target is missed; nothing is padded.
    """
    census_kw = dict(census_kw or {})
    target = (k, l)
    base = CanonicalSystem(k, l, tuple([0.0] * (k + 1)), tuple(beta_odd), tuple(even_signs))
    others = [p for p in find_finite_singularities(expand_canonical(base)) if p.x != 0.0]
    if l and not any(p.is_anti_saddle for p in others):
        raise ValueError("restoring coefficients give no anti-saddle besides the origin")
    outer = min((p for p in others if p.is_anti_saddle), key=lambda p: abs(p.x), default=None)

    def score(c: CycleCensus) -> tuple:
        o, e = c.totals
        return (-abs(o - k) - abs(e - l), o + e)

    best: Construction | None = None
    attempts = 0
    shrink = [0] * k
    rung = k - 1  # index into shrink, bottom rung first
    for adjustment in range(budget + 1):
        for pattern in (leading_sign, -leading_sign):
            ladder = _ladder(k, pattern, shrink, ratio)
            candidates = [ladder]
            if l and outer is not None and k >= 1:
                tmpl = CanonicalSystem(k, l, tuple(ladder), base.beta_odd, base.even_signs)
                top = 2 * k
                h = -(expand_canonical(tmpl.with_alpha_even(top, 0.0)).damping(outer.x)) / outer.x ** top
                candidates = []
                for rel in (1e-3, -1e-3, 1e-2, -1e-2):
                    c = list(ladder)
                    c[k] = h + rel * abs(h)
                    candidates.append(c)
            for vals in candidates:
                csys = CanonicalSystem(k, l, tuple(vals), base.beta_odd, base.even_signs)
                attempts += 1
                try:
                    c = census(expand_canonical(csys), **census_kw)
                except CensusError as exc:
                    continue
                cand = Construction(csys, c, target, c.totals == target, attempts)
                if cand.reached:
                    return cand
                if best is None or score(c) > score(best.census):
                    best = cand
        if k == 0 or adjustment == budget:
            break
        shrink[rung] += 1
        rung = rung - 1 if rung > 0 else k - 1
    if best is None:
        raise CensusError("no candidate configuration produced a census")
    best.attempts = attempts
    best.diagnostic = (f"target {target} not reached within {budget} ladder adjustments; "
                       f"best census {best.census.totals}")
    return best


@dataclass
class MonotonicityReport:
    status: str  # pass | fail | inconclusive
    slot: str
    values: list[float]
    radii: list[list[float]]
    stabilities: list[str]
    detail: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "slot": self.slot, "values": self.values,
                "radii": self.radii, "stabilities": self.stabilities, "detail": self.detail}


def certify_rotation_monotonicity(template, slot: str, values, anchor_x: float = 0.0,
                                  census_kw: dict | None = None) -> MonotonicityReport:
    """Track the cycles around ``anchor_x`` across ``values`` of an even damping slot.

    Passes when every tracked cycle moves the way the rotation rule says:
    outward for stable and inward for unstable cycles as the slot grows, and
    the reverse as it shrinks.  A cycle that cannot be tracked to the next
    value makes the result inconclusive.
    """
    kind, idx = parse_slot(slot)
    if kind != "alpha" or idx % 2:
        raise ValueError("rotation monotonicity applies to even damping slots only")
    census_kw = dict(census_kw or {})
    values = [float(v) for v in values]
    cycles = []
    for v in values:
        c = census(_expand(_set(template, slot, v)), **census_kw).at(anchor_x)
        cycles.append(c.cycles if c else [])
    first = cycles[0]
    stab = [c.stability for c in first]
    radii = [[c.r_star] for c in first]
    if not first:
        return MonotonicityReport("inconclusive", slot, values, [], [], "no cycle at the first value")
    tracked = list(first)
    for i in range(1, len(values)):
        pairs = dict((id(p), c) for p, c in _match(tracked, cycles[i]))
        if len(pairs) < len(tracked):
            return MonotonicityReport("inconclusive", slot, values, radii, stab,
                                      f"cycle lost between {slot}={values[i - 1]!r} and {values[i]!r}")
        direction = values[i] - values[i - 1]
        nxt = []
        for j, p in enumerate(tracked):
            c = pairs[id(p)]
            radii[j].append(c.r_star)
            nxt.append(c)
            if direction == 0 or p.stability == "semi-stable":
                continue
            move = c.r_star - p.r_star
            want = math.copysign(1.0, direction) * (1 if p.stability == "stable" else -1)
            if move * want <= 0:
                return MonotonicityReport("fail", slot, values, radii, stab,
                                          f"{p.stability} cycle moved from {p.r_star!r} to {c.r_star!r}")
        tracked = nxt
    return MonotonicityReport("pass", slot, values, radii, stab)
