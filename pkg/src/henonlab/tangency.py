"""Split function theta/H, the tangency curve h(b), detection and velocity gaps.

theta_{a,b}(t) = a - b*t + zeta(t)^2 - eta(zeta(t)) is the straightened height
of the unstable fold image over the stable graph; H(a, b) is its interior
maximum and h(b) the Newton-continued root of H(., b).  At b = 0 both eta and
zeta have closed forms (constant graph, parabola), so that branch is exact.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from . import core, manifold
from .core import Params, PlanePoint
from .errors import (
    FrameUnavailable,
    NewtonDiverged,
    NoInteriorMax,
    NotGraphLike,
)

DELTA_DEFAULT = 0.2
# Empirical window in which the theta/H machinery is validated.
VALID_B_MAX = 0.08
VALID_A_RANGE = (-2.15, -1.85)


class TangencyKind(enum.Enum):
    HOMOCLINIC = "homoclinic"
    HETEROCLINIC = "heteroclinic"


@dataclass(frozen=True)
class ThetaProfile:
    ts: np.ndarray
    values: np.ndarray
    t_star: float
    theta_star: float
    second_deriv: float
    tangency_point: PlanePoint  # phi(t*, zeta(t*)), the fold point on l^1
    fold_point: PlanePoint  # phi(t_v, zeta(t_v)) with zeta'(t_v) = 0


@dataclass(frozen=True)
class TangencyRecord:
    params: Params
    point: PlanePoint
    t_star: float
    second_deriv: float
    unfolding_speed: float
    kind: TangencyKind
    residual: float


@dataclass(frozen=True)
class VelocityGapReport:
    a_bar: float
    slope_stable: float
    slope_unstable: float

    @property
    def gap(self) -> float:
        return self.slope_stable - self.slope_unstable


def _theta_b0(a: float, delta: float, n_grid: int) -> ThetaProfile:
    # eta is the constant y_{a,0} and zeta(t) = t^2 + a, exactly.
    y0 = core.plus_saddle(Params(a, 0.0)).point.y
    ts = np.linspace(-delta, delta, n_grid)
    zeta = ts * ts + a
    values = a + zeta * zeta - y0
    # theta' = 4t(t^2 + a); the only interior critical point near 0 is t = 0.
    t_star = 0.0
    theta_star = a + a * a - y0
    second = 4.0 * a
    q = core.apply(Params(a, 0.0), PlanePoint(t_star, t_star * t_star + a))
    return ThetaProfile(ts, values, t_star, theta_star, second, q, q)


@lru_cache(maxsize=512)
def _theta_cached(a: float, b: float, delta: float, n_grid: int) -> ThetaProfile:
    if b == 0.0:
        return _theta_b0(a, delta, n_grid)

    p = Params(a, b)
    eta = manifold.extract_stable_graph(p)
    saddle = core.plus_saddle(p)
    chart = manifold.local_manifold_chart(p, saddle, manifold.ChartKind.UNSTABLE)
    margin = 0.1 * delta
    arc = manifold.unstable_graph_over_strip(
        p, chart, -delta - margin, delta + margin, a, 0.6
    )
    zeta = CubicSpline(arc.nodes[:, 0], arc.nodes[:, 1])

    ts = np.linspace(-delta, delta, n_grid)
    zs = zeta(ts)
    values = a - b * ts + zs * zs - eta(zs)

    def dtheta(t):
        z = zeta(t)
        return -b + zeta(t, 1) * (2.0 * z - eta.deriv(z, 1))

    def ddtheta(t):
        z = zeta(t)
        z1 = zeta(t, 1)
        return zeta(t, 2) * (2.0 * z - eta.deriv(z, 1)) + z1 * z1 * (
            2.0 - eta.deriv(z, 2)
        )

    i0 = int(np.argmax(values))
    if i0 == 0 or i0 == n_grid - 1:
        raise NoInteriorMax(f"theta maximum on the window boundary at (a, b) = ({a}, {b})")
    t = float(ts[i0])
    for _ in range(60):
        d1 = dtheta(t)
        d2 = ddtheta(t)
        if d2 >= 0.0:
            raise NoInteriorMax("theta profile is not concave at its critical point")
        step = d1 / d2
        t -= step
        if not (-delta < t < delta):
            raise NoInteriorMax("Newton polish left the theta window")
        if abs(step) < 1e-14:
            break
    z_star = float(zeta(t))
    theta_star = float(a - b * t + z_star * z_star - eta(np.array([z_star]))[0])
    q = core.apply(p, PlanePoint(t, z_star))

    # Fold of l^1: zeta'(t_v) = 0, located by Newton on zeta'.
    tv = 0.0
    for _ in range(60):
        step = zeta(tv, 1) / zeta(tv, 2)
        tv -= step
        if abs(step) < 1e-14:
            break
    fold = core.apply(p, PlanePoint(float(tv), float(zeta(tv))))
    return ThetaProfile(ts, values, float(t), theta_star, float(ddtheta(t)), q, fold)


def theta_profile(p: Params, delta: float = DELTA_DEFAULT, n_grid: int = 513) -> ThetaProfile:
    """Dense theta evaluation with a Newton-polished interior maximum."""
    return _theta_cached(p.a, p.b, delta, n_grid)


def split_function_H(p: Params, delta: float = DELTA_DEFAULT) -> float:
    """H(a, b) = max_t theta_{a,b}(t); equals a^2 + a - (1+sqrt(1-4a))/2 at b = 0."""
    return theta_profile(p, delta).theta_star


def h_closed_form_b0(a: float) -> float:
    """Closed form of H(a, 0)."""
    return a * a + a - (1.0 + math.sqrt(1.0 - 4.0 * a)) / 2.0


def dH_da(p: Params, da: float = 1e-3, delta: float = DELTA_DEFAULT) -> float:
    """Central-difference a-derivative of H at fixed b."""
    return (
        split_function_H(Params(p.a + da, p.b), delta)
        - split_function_H(Params(p.a - da, p.b), delta)
    ) / (2.0 * da)


def dH_db(p: Params, db: float, delta: float = DELTA_DEFAULT) -> float:
    """Central-difference b-derivative of H at fixed a."""
    return (
        split_function_H(Params(p.a, p.b + db), delta)
        - split_function_H(Params(p.a, p.b - db), delta)
    ) / (2.0 * db)


def solve_h(
    b: float,
    a_seed: float,
    tol: float = 1e-12,
    *,
    max_iter: int = 50,
    delta: float = DELTA_DEFAULT,
) -> float:
    """Newton (secant-updated) solve of H(a, b) = 0 in a, with bisection fallback."""

    def f(a: float) -> float:
        return split_function_H(Params(a, b), delta)

    a0 = a_seed
    f0 = f(a0)
    if abs(f0) <= tol:
        return a0
    da = 1e-4
    slope = (f(a0 + da) - f(a0 - da)) / (2.0 * da)
    bracket: list[tuple[float, float]] = [(a0, f0)]
    a1 = a0
    for _ in range(max_iter):
        if slope == 0.0:
            break
        a1 = a0 - f0 / slope
        lo = min(x for x, _ in bracket) - 0.2
        hi = max(x for x, _ in bracket) + 0.2
        a1 = min(max(a1, lo), hi)
        f1 = f(a1)
        bracket.append((a1, f1))
        if abs(f1) <= tol:
            return a1
        if a1 != a0:
            slope = (f1 - f0) / (a1 - a0)
        a0, f0 = a1, f1
    # Bisection fallback over any recorded sign change.
    pts = sorted(bracket)
    for (xa, fa), (xb, fb) in zip(pts, pts[1:]):
        if fa == 0.0:
            return xa
        if fa * fb < 0.0:
            for _ in range(200):
                xm = 0.5 * (xa + xb)
                fm = f(xm)
                if abs(fm) <= tol:
                    return xm
                if fa * fm < 0.0:
                    xb, fb = xm, fm
                else:
                    xa, fa = xm, fm
    raise NewtonDiverged(f"H-solve failed at b = {b}", last_iterate=a1)


@dataclass(frozen=True)
class TangencyCurvePoint:
    record: TangencyRecord
    dh_db_fd: float | None
    dh_db_quotient: float | None


def solve_tangency_curve(
    b_values: list[float],
    a_seed: float = -2.0,
    tol: float = 1e-12,
    *,
    delta: float = DELTA_DEFAULT,
    with_slope_check: bool = True,
) -> list[TangencyCurvePoint]:
    """Continuation of h(b): per-b Newton on H with the dh/db cross-check.

    Failures are recorded per b (as None entries in a parallel list is avoided:
    failed solves raise only if every b fails); each success carries the
    finite-difference dh/db against the implicit-function quotient
    -(dH/db)/(dH/da).
    """
    out: list[TangencyCurvePoint] = []
    seed = a_seed
    failures: list[tuple[float, Exception]] = []
    for b in b_values:
        try:
            a_root = solve_h(b, seed, tol, delta=delta)
            seed = a_root
            prof = theta_profile(Params(a_root, b), delta)
            speed = dH_da(Params(a_root, b), delta=delta)
            rec = TangencyRecord(
                Params(a_root, b),
                prof.tangency_point,
                prof.t_star,
                prof.second_deriv,
                speed,
                TangencyKind.HOMOCLINIC,
                abs(split_function_H(Params(a_root, b), delta)),
            )
            fd = quot = None
            if with_slope_check:
                db = max(abs(b) / 10.0, 1e-3)
                h_plus = solve_h(b + db, a_root, tol, delta=delta)
                h_minus = solve_h(b - db, a_root, tol, delta=delta)
                fd = (h_plus - h_minus) / (2.0 * db)
                quot = -dH_db(Params(a_root, b), db, delta) / speed
            out.append(TangencyCurvePoint(rec, fd, quot))
        except (NewtonDiverged, NoInteriorMax, NotGraphLike) as exc:  # per-b failure
            failures.append((b, exc))
    if not out and failures:
        raise NewtonDiverged(f"every b failed; first: {failures[0][1]}")
    return out


def records_to_json(points: list[TangencyCurvePoint]) -> str:
    rows = []
    for tp in points:
        r = tp.record
        rows.append(
            {
                "a": r.params.a,
                "b": r.params.b,
                "x": r.point.x,
                "y": r.point.y,
                "t_star": r.t_star,
                "second_deriv": r.second_deriv,
                "unfolding_speed": r.unfolding_speed,
                "kind": r.kind.value,
                "residual": r.residual,
            }
        )
    return json.dumps(rows, indent=1)


@dataclass(frozen=True)
class TangencyProbe:
    point: PlanePoint
    normal_gap: float
    relative_curvature: float
    is_tangency: bool


def _project_to_polyline(nodes: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Arclength abscissa and signed normal offset of pts relative to a polyline."""
    seg_a = nodes[:-1]
    seg_d = nodes[1:] - nodes[:-1]
    seg_len = np.linalg.norm(seg_d, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    us = np.empty(len(pts))
    gs = np.empty(len(pts))
    for i, q in enumerate(pts):
        w = q - seg_a
        t = np.clip(
            (w[:, 0] * seg_d[:, 0] + w[:, 1] * seg_d[:, 1]) / (seg_len**2 + 1e-300),
            0.0,
            1.0,
        )
        foot = seg_a + t[:, None] * seg_d
        d2 = np.sum((q - foot) ** 2, axis=1)
        j = int(np.argmin(d2))
        us[i] = cum[j] + t[j] * seg_len[j]
        off = q - foot[j]
        tang = seg_d[j] / seg_len[j]
        gs[i] = tang[0] * off[1] - tang[1] * off[0]
    return us, gs


def detect_quadratic_tangency(
    c1: manifold.CurveSegment,
    c2: manifold.CurveSegment,
    transversal: tuple[PlanePoint, PlanePoint],
    *,
    tol: float = 1e-6,
    curvature_floor: float = 0.05,
) -> TangencyProbe | None:
    """Fit the local tangency model (gap and relative curvature) of c2 over c1.

    c2 is projected into graph coordinates over c1 inside a window around the
    transversal; the model y = alpha*u^2 + gamma is fitted at the interior
    extremum of the offset.  A tangency is flagged when |gamma| <= tol and
    |alpha| >= curvature_floor.  Returns None when no interior extremum exists.
    """
    q0 = transversal[0].as_array()
    q1 = transversal[1].as_array()
    tube = np.linalg.norm(q1 - q0)

    def crossings(curve: manifold.CurveSegment) -> int:
        d = q1 - q0
        n = np.array([-d[1], d[0]])
        side = (curve.nodes - q0) @ n
        t_along = (curve.nodes - q0) @ d / (d @ d)
        near = (t_along > -0.5) & (t_along < 1.5)
        s = np.sign(side)
        flips = (s[:-1] * s[1:] < 0) & near[:-1] & near[1:]
        return int(np.count_nonzero(flips))

    for curve in (c1, c2):
        if crossings(curve) != 1:
            raise ValueError("each curve must cross the transversal exactly once")

    mid = 0.5 * (q0 + q1)
    sel = np.linalg.norm(c2.nodes - mid, axis=1) <= tube
    if np.count_nonzero(sel) < 7:
        return None
    window = c2.nodes[sel]
    us, gs = _project_to_polyline(c1.nodes, window)
    du = np.diff(us)
    if not (np.all(du > 0) or np.all(du < 0)):
        raise NotGraphLike("c2 folds over c1 inside the window")

    i0 = int(np.argmin(np.abs(gs)))
    lo = max(0, i0 - max(5, len(us) // 6))
    hi = min(len(us), i0 + max(5, len(us) // 6) + 1)
    coeff = np.polyfit(us[lo:hi], gs[lo:hi], 2)
    alpha = coeff[0]
    if alpha == 0.0:
        return None
    u_vertex = -coeff[1] / (2.0 * alpha)
    if not (us.min() < u_vertex < us.max()):
        return None
    gamma = float(np.polyval(coeff, u_vertex))
    xy = np.array(
        [
            np.interp(u_vertex, us[np.argsort(us)], window[np.argsort(us), 0]),
            np.interp(u_vertex, us[np.argsort(us)], window[np.argsort(us), 1]),
        ]
    )
    return TangencyProbe(
        PlanePoint.from_array(xy),
        gamma,
        float(alpha),
        bool(abs(gamma) <= tol and abs(alpha) >= curvature_floor),
    )


def unfolding_speed(record: TangencyRecord, da: float = 1e-3) -> float:
    """Central-difference gap derivative with respect to a at the record."""
    return dH_da(record.params, da)


def leaf_velocity_gap(
    b: float,
    n_proxy,
    a_bar_values: list[float],
    *,
    da_bar: float = 0.01,
) -> list[VelocityGapReport]:
    """Stable/unstable leaf-height velocities on the transversal at x_bar = -2.

    ``n_proxy = "limit"`` evaluates the closed forms of the limit family
    (slope_stable = -1/sqrt(1-4a), slope_unstable = 2a+1); otherwise
    ``n_proxy`` must be a renormalization frame and the slopes are measured by
    finite differences of the renormalized saddle's stable line and unstable
    fold endpoint.
    """
    if isinstance(n_proxy, str):
        if n_proxy != "limit":
            raise FrameUnavailable(f"unknown proxy mode {n_proxy!r}")
        out = []
        for ab in a_bar_values:
            if 1.0 - 4.0 * ab <= 0.0:
                raise FrameUnavailable("limit family has no saddle for a_bar >= 1/4")
            out.append(
                VelocityGapReport(ab, -1.0 / math.sqrt(1.0 - 4.0 * ab), 2.0 * ab + 1.0)
            )
        return out

    from . import renorm  # runtime import; renorm depends on this module

    frame = n_proxy
    if frame is None:
        raise FrameUnavailable("no renormalization frame supplied")
    out = []
    for ab in a_bar_values:
        ys_f = []
        ys_g = []
        for a_shift in (ab - da_bar, ab + da_bar):
            stable_y, fold_y = renorm.leaf_heights(frame, a_shift, xi_x=-2.0)
            ys_f.append(stable_y)
            ys_g.append(fold_y)
        slope_f = (ys_f[1] - ys_f[0]) / (2.0 * da_bar)
        slope_g = (ys_g[1] - ys_g[0]) / (2.0 * da_bar)
        out.append(VelocityGapReport(ab, slope_f, slope_g))
    return out
