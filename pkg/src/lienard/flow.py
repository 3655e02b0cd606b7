"""Adaptive Dormand-Prince integration of Liénard fields with ray-crossing events.

The hot loop is compiled with numba.  One kernel serves plain trajectory
integration, ray-crossing detection and first-return maps; the Python
wrappers below only allocate buffers and translate status codes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .polysys import LienardSystem

# terminal status codes shared with the kernel
TIME_LIMIT, ESCAPED, CONVERGED, EVENTS_REACHED, STEP_UNDERFLOW, MAX_STEPS = range(6)
TERMINAL_NAMES = {
    TIME_LIMIT: "time-limit",
    ESCAPED: "escaped",
    CONVERGED: "converged-to-point",
    EVENTS_REACHED: "event-count-reached",
    STEP_UNDERFLOW: "step-underflow",
    MAX_STEPS: "max-steps",
}

DEFAULT_TOL = 1e-9
MIN_STEP = 1e-14
CONVERGE_RADIUS = 1e-9

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages, FSAL)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# quartic continuous extension (Shampine's coefficients)
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class IntegrationError(RuntimeError):
    """Step size fell below the floor; ``state`` is the last accepted ``(t, x, y)``."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


@numba.njit(cache=True, nogil=True)
def _rhs(alpha, beta, sgn, x, y):
    a = 0.0
    for i in range(alpha.shape[0] - 1, -1, -1):
        a = a * x + alpha[i]
    b = 0.0
    for i in range(beta.shape[0] - 1, -1, -1):
        b = b * x + beta[i]
    b = 1.0 + x * b
    return sgn * y, sgn * (-x * b + y * a)


@numba.njit(cache=True, nogil=True)
def _dense(x0, y0, h, q, theta):
    t2 = theta * theta
    t3 = t2 * theta
    t4 = t3 * theta
    xs = x0 + h * (q[0, 0] * theta + q[0, 1] * t2 + q[0, 2] * t3 + q[0, 3] * t4)
    ys = y0 + h * (q[1, 0] * theta + q[1, 1] * t2 + q[1, 2] * t3 + q[1, 3] * t4)
    return xs, ys


@numba.njit(cache=True, nogil=True)
def _run(alpha, beta, sgn, x0, y0, t_max, atol, rtol, r_escape, sing,
         ox, oy, ux, uy, max_events, max_steps, record,
         out_t, out_x, out_y, ev, A, B, C, E, P):
    """Integrate until a terminal condition.

    Ray events are same-sense (clockwise) crossings of the half-line
    ``o + s u, s > 0``: the cross product ``u x (state - o)`` goes from
    positive to non-positive.  Each event stores ``(t, s, winding)`` where
    ``winding`` is the number of signed turns about ``o`` since the start.
    Returns ``(status, n_recorded, n_events, t, x, y)``.
    """
    K = np.empty((7, 2))
    q = np.empty((2, 4))
    t = 0.0
    x = x0
    y = y0
    fx, fy = _rhs(alpha, beta, sgn, x, y)
    K[0, 0] = fx
    K[0, 1] = fy

    # initial step from the usual scaled-norm heuristic
    sx = atol + rtol * abs(x)
    sy = atol + rtol * abs(y)
    d0 = math.sqrt(0.5 * ((x / sx) ** 2 + (y / sy) ** 2))
    d1 = math.sqrt(0.5 * ((fx / sx) ** 2 + (fy / sy) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, 0.1, t_max)

    n_rec = 0
    if record:
        out_t[0] = t
        out_x[0] = x
        out_y[0] = y
        n_rec = 1
    n_ev = 0
    angle = 0.0
    tracking = max_events > 0
    status = TIME_LIMIT
    steps = 0
    while True:
        if t >= t_max:
            status = TIME_LIMIT
            break
        if steps >= max_steps:
            status = MAX_STEPS
            break
        if h > t_max - t:
            h = t_max - t
        for s in range(1, 6):
            px = x
            py = y
            for j in range(s):
                px += h * A[s, j] * K[j, 0]
                py += h * A[s, j] * K[j, 1]
            kx, ky = _rhs(alpha, beta, sgn, px, py)
            K[s, 0] = kx
            K[s, 1] = ky
        nx = x
        ny = y
        for j in range(6):
            nx += h * B[j] * K[j, 0]
            ny += h * B[j] * K[j, 1]
        kx, ky = _rhs(alpha, beta, sgn, nx, ny)
        K[6, 0] = kx
        K[6, 1] = ky
        ex = 0.0
        ey = 0.0
        for j in range(7):
            ex += h * E[j] * K[j, 0]
            ey += h * E[j] * K[j, 1]
        sx = atol + rtol * max(abs(x), abs(nx))
        sy = atol + rtol * max(abs(y), abs(ny))
        en = math.sqrt(0.5 * ((ex / sx) ** 2 + (ey / sy) ** 2))
        if not (en <= 1.0):
            if en != en:
                fac = 0.2
            else:
                fac = max(0.2, 0.9 * en ** -0.2)
            h *= fac
            if h < 1e-14:
                status = STEP_UNDERFLOW
                break
            continue
        steps += 1
        stop = False
        if tracking:
            rx0 = x - ox
            ry0 = y - oy
            rx1 = nx - ox
            ry1 = ny - oy
            c0 = ux * ry0 - uy * rx0
            c1 = ux * ry1 - uy * rx1
            if c0 > 0.0 and c1 <= 0.0:
                for i in range(2):
                    for m in range(4):
                        acc = 0.0
                        for j in range(7):
                            acc += K[j, i] * P[j, m]
                        q[i, m] = acc
                lo = 0.0
                hi = 1.0
                cx = nx
                cy = ny
                for _ in range(100):
                    mid = 0.5 * (lo + hi)
                    cx, cy = _dense(x, y, h, q, mid)
                    cm = ux * (cy - oy) - uy * (cx - ox)
                    if abs(cm) < 1e-13 or hi - lo < 1e-16:
                        break
                    if cm > 0.0:
                        lo = mid
                    else:
                        hi = mid
                theta = mid
                rcx = cx - ox
                rcy = cy - oy
                along = ux * rcx + uy * rcy
                if along > 0.0:
                    part = math.atan2(rx0 * rcy - ry0 * rcx, rx0 * rcx + ry0 * rcy)
                    turns = (angle + part) / (2.0 * math.pi)
                    ev[n_ev, 0] = t + theta * h
                    ev[n_ev, 1] = along
                    ev[n_ev, 2] = math.floor(turns + 0.5)
                    n_ev += 1
                    if n_ev >= max_events:
                        t = t + theta * h
                        x = cx
                        y = cy
                        stop = True
            if not stop:
                angle += math.atan2(rx0 * ry1 - ry0 * rx1, rx0 * rx1 + ry0 * ry1)
        if stop:
            if record:
                out_t[n_rec] = t
                out_x[n_rec] = x
                out_y[n_rec] = y
                n_rec += 1
            status = EVENTS_REACHED
            break
        t += h
        x = nx
        y = ny
        K[0, 0] = K[6, 0]
        K[0, 1] = K[6, 1]
        if record:
            out_t[n_rec] = t
            out_x[n_rec] = x
            out_y[n_rec] = y
            n_rec += 1
        if x * x + y * y > r_escape * r_escape:
            status = ESCAPED
            break
        hit = False
        for i in range(sing.shape[0]):
            if (x - sing[i]) ** 2 + y * y < CONVERGE_RADIUS * CONVERGE_RADIUS:
                hit = True
        if hit:
            status = CONVERGED
            break
        if en == 0.0:
            fac = 10.0
        else:
            fac = min(10.0, 0.9 * en ** -0.2)
        h *= fac
    return status, n_rec, n_ev, t, x, y


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    terminal: str

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.t, self.x, self.y])

    @property
    def end(self) -> tuple[float, float]:
        return float(self.x[-1]), float(self.y[-1])

    def to_csv(self) -> str:
        lines = ["t,x,y"]
        lines += [f"{t!r},{x!r},{y!r}" for t, x, y in zip(self.t.tolist(), self.x.tolist(), self.y.tolist())]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RayEvent:
    t: float
    r: float
    winding: int
    direction: str = "same-sense"


def singular_abscissae(sys: LienardSystem) -> np.ndarray:
    return np.array([x for x, _ in sys.restoring.real_roots()], dtype=float)


def default_escape_radius(sys: LienardSystem) -> float:
    xs = singular_abscissae(sys)
    return 10.0 * float(np.max(np.abs(xs), initial=0.0)) + 10.0


def _arrays(sys: LienardSystem):
    return np.asarray(sys.alpha, dtype=float), np.asarray(sys.beta, dtype=float)


def _call(sys, start, t_max, tol, r_escape, sing, ray, max_events, max_steps, record, backward):
    alpha, beta = _arrays(sys)
    if r_escape is None:
        r_escape = default_escape_radius(sys)
    if sing is None:
        sing = singular_abscissae(sys)
    sing = np.asarray(sing, dtype=float)
    (ox, oy), (ux, uy) = ray if ray is not None else ((0.0, 0.0), (1.0, 0.0))
    n = max_steps + 2 if record else 1
    out_t = np.empty(n)
    out_x = np.empty(n)
    out_y = np.empty(n)
    ev = np.empty((max(max_events, 1), 3))
    status, n_rec, n_ev, t, x, y = _run(
        alpha, beta, -1.0 if backward else 1.0, float(start[0]), float(start[1]),
        float(t_max), float(tol), float(tol), float(r_escape), sing,
        float(ox), float(oy), float(ux), float(uy), int(max_events), int(max_steps), bool(record),
        out_t, out_x, out_y, ev, _A, _B, _C, _E, _P,
    )
    return status, out_t[:n_rec], out_x[:n_rec], out_y[:n_rec], ev[:n_ev], (t, x, y)


def integrate(sys: LienardSystem, start, t_max: float, tol: float = DEFAULT_TOL,
              r_escape: float | None = None, singular_points=None, backward: bool = False,
              max_steps: int = 200_000) -> Trajectory:
    """Integrate from ``start`` for ``t_max`` time units (backward if asked).

    Stops early on escape past ``r_escape`` or on reaching one of the
    ``singular_points`` abscissae (all finite singularities lie on ``y = 0``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if r_escape is not None and r_escape <= math.hypot(*start):
        raise ValueError("r_escape must exceed the distance of the start point from the origin")
    status, t, x, y, _, last = _call(sys, start, t_max, tol, r_escape, singular_points,
                                     None, 0, max_steps, True, backward)
    if status == STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", last)
    return Trajectory(t, x, y, TERMINAL_NAMES[status])


def crossings(sys: LienardSystem, start, ray, count: int, tol: float = DEFAULT_TOL,
              t_max: float = 1e4, r_escape: float | None = None, singular_points=None,
              max_steps: int = 2_000_000) -> list[RayEvent]:
    """Same-sense (clockwise) crossings of ``ray = (origin, unit direction)``.

    Returns up to ``count`` events; fewer if the orbit escapes, converges or
    runs out of time.
    """
    (_, _), (ux, uy) = ray
    if abs(math.hypot(ux, uy) - 1.0) > 1e-12:
        raise ValueError("ray direction must be a unit vector")
    status, _, _, _, ev, last = _call(sys, start, t_max, tol, r_escape, singular_points,
                                      ray, count, max_steps, False, False)
    if status == STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", last)
    return [RayEvent(float(t), float(r), int(w)) for t, r, w in ev]


def first_return(sys: LienardSystem, anchor_x: float, r: float, tol: float = DEFAULT_TOL,
                 t_max: float = 1e3, r_escape: float | None = None, singular_points=None,
                 max_steps: int = 2_000_000) -> tuple[str, float, int]:
    """Follow the orbit from ``(anchor_x + r, 0)`` to its next clockwise crossing
    of the ray ``y = 0, x > anchor_x``.

    Returns ``(terminal, return_radius, winding)``; the radius is NaN unless a
    crossing happened.
    """
    ray = ((anchor_x, 0.0), (1.0, 0.0))
    status, _, _, _, ev, _ = _call(sys, (anchor_x + r, 0.0), t_max, tol, r_escape, singular_points,
                                   ray, 1, max_steps, False, False)
    if len(ev):
        return "event-count-reached", float(ev[0, 1]), int(ev[0, 2])
    return TERMINAL_NAMES[status], math.nan, 0
