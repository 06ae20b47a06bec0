"""Invariant manifolds of the plus saddle: local charts, global arcs, stable graphs.

Local manifolds are polynomial parametrizations P solving the conjugacy
equation phi(P(s)) = P(mu*s) order by order; global arcs evaluate
phi^k(P(s/mu^k)) (forward for unstable, backward for stable) on an adaptively
refined parameter grid.  The stable manifold near (a, b) ~ (-2, 0) is fitted
as a graph y = eta(x) over |x| <= 5/2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import core
from .core import Params, PlanePoint, SaddleData
from .errors import BlowUp, Degenerate, NotAGraph, OutOfRange, SmallDivisor

# Resampling contract for grown arcs (plane units); all overridable per call.
H_MIN_DEFAULT = 1e-5
H_MAX_DEFAULT = 1e-3
ESCAPE_RADIUS_DEFAULT = 10.0
CHART_RESIDUAL_TOL = 1e-9

# Default trim box around the fold region near (-2, 2).
TRIM_BOX_DEFAULT = (-2.3, -1.7, 1.7, 2.3)

# Parameter window in which the stable arc is grown and fitted as a graph.
STABLE_GRAPH_A_RANGE = (-2.6, -1.4)
STABLE_GRAPH_B_MAX = 0.25
GRAPH_SPAN = 2.5


class ChartKind(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class LocalChart:
    center: PlanePoint
    coeffs: np.ndarray  # (degree+1, 2); row k = (x_k, y_k) with y_k = x_k * mu^k
    kind: ChartKind
    multiplier: float
    domain_radius: float

    def eval(self, s) -> np.ndarray:
        """Evaluate P(s) for scalar or array s; returns (..., 2)."""
        s = np.asarray(s, dtype=float)
        powers = s[..., None] ** np.arange(self.coeffs.shape[0])
        return powers @ self.coeffs

    def residual(self, p: Params, radius: float, samples: int = 64) -> float:
        """sup |phi(P(s)) - P(mu s)| over [-radius, radius]."""
        s = np.linspace(-radius, radius, samples)
        lhs = core.apply_array(p, self.eval(s))
        rhs = self.eval(self.multiplier * s)
        return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class CurveSegment:
    """Oriented polyline with per-node tangents, curvatures and arclength."""

    nodes: np.ndarray  # (n, 2)
    tangents: np.ndarray = field(default=None)  # type: ignore[assignment]
    curvatures: np.ndarray = field(default=None)  # type: ignore[assignment]
    arclength: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if self.arclength is None:
            chords = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
            object.__setattr__(
                self, "arclength", np.concatenate([[0.0], np.cumsum(chords)])
            )
        if self.tangents is None:
            object.__setattr__(self, "tangents", _node_tangents(nodes))
        if self.curvatures is None:
            object.__setattr__(self, "curvatures", _node_curvatures(nodes))

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def to_csv(self, path) -> None:
        header = "s,x,y,tx,ty,kappa"
        data = np.column_stack(
            [self.arclength, self.nodes, self.tangents, self.curvatures]
        )
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def _node_tangents(nodes: np.ndarray) -> np.ndarray:
    n = nodes.shape[0]
    t = np.empty_like(nodes)
    if n == 1:
        t[:] = (1.0, 0.0)
        return t
    t[1:-1] = nodes[2:] - nodes[:-2]
    t[0] = nodes[1] - nodes[0]
    t[-1] = nodes[-1] - nodes[-2]
    norms = np.linalg.norm(t, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return t / norms


def _node_curvatures(nodes: np.ndarray) -> np.ndarray:
    """Signed Menger curvature at interior nodes (endpoints copy neighbours)."""
    n = nodes.shape[0]
    k = np.zeros(n)
    if n < 3:
        return k
    a = nodes[:-2]
    b = nodes[1:-1]
    c = nodes[2:]
    ab = b - a
    bc = c - b
    ac = c - a
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    denom = (
        np.linalg.norm(ab, axis=1)
        * np.linalg.norm(bc, axis=1)
        * np.linalg.norm(ac, axis=1)
    )
    good = denom > 0.0
    k[1:-1][good] = 2.0 * cross[good] / denom[good]
    if n >= 3:
        k[0] = k[1]
        k[-1] = k[-2]
    return k


def local_manifold_chart(
    p: Params,
    s: SaddleData,
    kind: ChartKind,
    degree: int = 12,
    *,
    first_coeff: float = 0.5,
    residual_tol: float = CHART_RESIDUAL_TOL,
) -> LocalChart:
    """Polynomial chart solving phi(P(s)) = P(mu s) through ``degree``.

    The stable chart does not exist at b = 0 (lam = 0); a resonance
    mu^k in {lam, sigma} raises SmallDivisor.
    """
    if kind is ChartKind.STABLE:
        mu = s.lam
        if p.b == 0.0 or mu == 0.0:
            raise Degenerate("stable chart degenerates at b = 0 (lam = 0)")
        if not abs(mu) < 1.0:
            raise Degenerate(f"|lam| = {abs(mu)} is not contracting")
    else:
        mu = s.sigma
        if not abs(mu) > 1.0:
            raise Degenerate(f"|sigma| = {abs(mu)} is not expanding")

    y0 = s.point.y
    x = np.zeros(degree + 1)
    x[0] = y0
    x[1] = first_coeff
    mu_pows = mu ** np.arange(0, 2 * degree + 2)
    for k in range(2, degree + 1):
        q = float(np.dot(x[1:k], x[k - 1 : 0 : -1]))
        denom = mu_pows[2 * k] - 2.0 * y0 * mu_pows[k] + p.b
        if abs(denom) < 1e-9 * max(1.0, abs(mu_pows[2 * k])):
            raise SmallDivisor(f"resonance chi(mu^{k}) ~ 0 at order {k}")
        x[k] = mu_pows[k] * q / denom

    coeffs = np.column_stack([x, x * mu_pows[: degree + 1]])
    chart = LocalChart(s.point, coeffs, kind, mu, 0.0)

    radius = 2.0
    while radius > 1e-6:
        if chart.residual(p, radius) <= residual_tol:
            break
        radius *= 0.85
    else:
        raise Degenerate("chart domain collapsed below 1e-6")
    return LocalChart(s.point, coeffs, kind, mu, radius)


class _GlobalArc:
    """Evaluates the globalized chart image phi^k(P(s * mu^-k))."""

    def __init__(self, p: Params, chart: LocalChart, max_steps: int):
        self.p = p
        self.chart = chart
        self.max_steps = max_steps
        self.forward = chart.kind is ChartKind.UNSTABLE
        self.abs_mu = abs(chart.multiplier)

    def steps_for(self, s: np.ndarray) -> np.ndarray:
        r = self.chart.domain_radius
        mag = np.abs(s)
        with np.errstate(divide="ignore"):
            if self.forward:
                k = np.ceil(np.log(mag / r) / math.log(self.abs_mu))
            else:
                k = np.ceil(np.log(mag / r) / -math.log(self.abs_mu))
        k = np.where(mag <= r, 0, k)
        return np.clip(k, 0, self.max_steps).astype(int)

    def eval(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape + (2,))
        ks = self.steps_for(s)
        mu = self.chart.multiplier
        for k in np.unique(ks):
            sel = ks == k
            u = s[sel] * mu ** (-float(k)) if self.forward else s[sel] * mu ** float(k)
            pts = self.chart.eval(u)
            for _ in range(int(k)):
                pts = (
                    core.apply_array(self.p, pts)
                    if self.forward
                    else core.apply_inverse_array(self.p, pts)
                )
            out[sel] = pts
        return out


def _in_box(pts: np.ndarray, box: tuple[float, float, float, float]) -> np.ndarray:
    x_lo, x_hi, y_lo, y_hi = box
    with np.errstate(invalid="ignore"):
        return (
            np.isfinite(pts).all(axis=1)
            & (pts[:, 0] >= x_lo)
            & (pts[:, 0] <= x_hi)
            & (pts[:, 1] >= y_lo)
            & (pts[:, 1] <= y_hi)
        )


def _adaptive_sample(
    arc: _GlobalArc,
    s_lo: float,
    s_hi: float,
    h_max: float,
    escape_radius: float,
    refine_box: tuple[float, float, float, float] | None = None,
    *,
    h_coarse: float = 0.02,
    initial: int = 1024,
    max_nodes: int = 400_000,
    max_rounds: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Refine an s-grid until the arc is resolved.

    Two tiers: everywhere inside the escape region the chord length is driven
    below ``h_coarse`` (so no pass through the refine box is skipped), and
    inside ``refine_box`` (plus nothing else) below ``h_max``.
    """
    ball = (-escape_radius, escape_radius, -escape_radius, escape_radius)
    if refine_box is None:
        refine_box = ball
    s = np.linspace(s_lo, s_hi, initial)
    pts = arc.eval(s)
    s_eps = (s_hi - s_lo) * 1e-14 + 1e-300
    for _ in range(max_rounds):
        if len(s) >= max_nodes:
            break
        inside = _in_box(pts, ball)
        fine = _in_box(pts, refine_box)
        with np.errstate(over="ignore", invalid="ignore"):
            gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        gaps = np.nan_to_num(gaps, nan=np.inf, posinf=np.inf)
        pair_inside = inside[:-1] | inside[1:]
        pair_fine = fine[:-1] | fine[1:]
        need = pair_inside & (np.diff(s) > s_eps) & (
            (gaps > h_coarse) | (pair_fine & (gaps > h_max))
        )
        idx = np.flatnonzero(need)
        if idx.size == 0:
            break
        mids = 0.5 * (s[idx] + s[idx + 1])
        mid_pts = arc.eval(mids)
        order = np.argsort(np.concatenate([s, mids]))
        s = np.concatenate([s, mids])[order]
        pts = np.concatenate([pts, mid_pts])[order]
    inside = _in_box(pts, ball)
    return s[inside], pts[inside]


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal index runs [i, j) where mask is True."""
    out = []
    i = None
    for j, m in enumerate(mask):
        if m and i is None:
            i = j
        elif not m and i is not None:
            out.append((i, j))
            i = None
    if i is not None:
        out.append((i, len(mask)))
    return out


def _merge_close_nodes(pts: np.ndarray, h_min: float) -> np.ndarray:
    if len(pts) < 3:
        return pts
    keep = [0]
    last = pts[0]
    for i in range(1, len(pts) - 1):
        if np.linalg.norm(pts[i] - last) >= h_min:
            keep.append(i)
            last = pts[i]
    keep.append(len(pts) - 1)
    return pts[keep]


def grow_unstable(
    p: Params,
    chart: LocalChart,
    iterations: int,
    trim: tuple[float, float, float, float] = TRIM_BOX_DEFAULT,
    *,
    h_min: float = H_MIN_DEFAULT,
    h_max: float = H_MAX_DEFAULT,
    escape_radius: float = ESCAPE_RADIUS_DEFAULT,
) -> CurveSegment:
    """Grow the unstable arc through ``iterations`` images of the fundamental
    domain [r/sigma, r] (both branches), clipped to the ``trim`` rectangle.

    Nodes beyond the escape radius are discarded; the longest arc component
    inside ``trim`` is returned.  BlowUp is raised when nothing survives.
    """
    if chart.kind is not ChartKind.UNSTABLE:
        raise ValueError("grow_unstable needs an unstable chart")
    arc = _GlobalArc(p, chart, iterations)
    s_max = chart.domain_radius * abs(chart.multiplier) ** iterations
    m = 0.1
    refine = (trim[0] - m, trim[1] + m, trim[2] - m, trim[3] + m)
    s, pts = _adaptive_sample(arc, -s_max, s_max, h_max, escape_radius, refine)
    if len(pts) == 0:
        raise BlowUp("every node left the escape radius")
    x_lo, x_hi, y_lo, y_hi = trim
    mask = (
        (pts[:, 0] >= x_lo)
        & (pts[:, 0] <= x_hi)
        & (pts[:, 1] >= y_lo)
        & (pts[:, 1] <= y_hi)
    )
    runs = _runs(mask)
    if not runs:
        raise BlowUp("no arc nodes inside the trim rectangle")
    best = max(runs, key=lambda ij: _run_length(pts, ij))
    nodes = _merge_close_nodes(pts[best[0] : best[1]], h_min)
    return CurveSegment(nodes)


def _run_length(pts: np.ndarray, ij: tuple[int, int]) -> float:
    i, j = ij
    if j - i < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts[i:j], axis=0), axis=1)))


def unstable_graph_over_strip(
    p: Params,
    chart: LocalChart,
    x_lo: float,
    x_hi: float,
    y_center: float,
    y_halfwidth: float,
    *,
    max_iterations: int = 12,
    h_max: float = H_MAX_DEFAULT,
    escape_radius: float = ESCAPE_RADIUS_DEFAULT,
) -> CurveSegment:
    """First pass of the unstable arc crossing the vertical strip [x_lo, x_hi]
    near y_center as a graph over x.

    Growth stops at the smallest iteration count producing a monotone-in-x
    component spanning the strip; this isolates the near-vertex arc before
    later folds re-enter the strip.
    """
    pad = 0.05 * (x_hi - x_lo)
    refine = (x_lo - 2 * pad, x_hi + 2 * pad, y_center - y_halfwidth, y_center + y_halfwidth)
    for its in range(1, max_iterations + 1):
        arc = _GlobalArc(p, chart, its)
        s_max = chart.domain_radius * abs(chart.multiplier) ** its
        _, pts = _adaptive_sample(arc, -s_max, s_max, h_max, escape_radius, refine)
        if len(pts) == 0:
            continue
        mask = (
            (pts[:, 0] >= x_lo - pad)
            & (pts[:, 0] <= x_hi + pad)
            & (np.abs(pts[:, 1] - y_center) <= y_halfwidth)
        )
        for i, j in _runs(mask):
            seg = pts[i:j]
            if len(seg) < 8:
                continue
            dx = np.diff(seg[:, 0])
            if not (np.all(dx > 0) or np.all(dx < 0)):
                continue
            if min(seg[0, 0], seg[-1, 0]) <= x_lo and max(seg[0, 0], seg[-1, 0]) >= x_hi:
                if seg[0, 0] > seg[-1, 0]:
                    seg = seg[::-1]
                return CurveSegment(seg)
    raise NotAGraph("unstable arc never crossed the strip as a graph")


@dataclass(frozen=True)
class GraphFunction:
    """The stable segment as a graph y = eta(x) over |x| <= 5/2."""

    xs: np.ndarray
    ys: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    spline: CubicSpline | None = None

    def __call__(self, x):
        if self.spline is None:
            return np.full_like(np.asarray(x, dtype=float), self.ys[0])
        return self.spline(x)

    def deriv(self, x, order: int = 1):
        if self.spline is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.spline(x, nu=order)


def extract_stable_graph(
    p: Params,
    *,
    n_grid: int = 1001,
    span: float = GRAPH_SPAN,
    h_max: float = 5e-4,
    degree: int = 14,
) -> GraphFunction:
    """Stable manifold of the plus saddle fitted as a graph over [-span, span].

    At b = 0 the graph is exactly the constant y_{a,0}; otherwise the local
    chart is grown by backward iteration until the arc spans the window.
    """
    if not (STABLE_GRAPH_A_RANGE[0] <= p.a <= STABLE_GRAPH_A_RANGE[1]):
        raise Degenerate(f"a = {p.a} outside the validated stable-graph window")
    if abs(p.b) > STABLE_GRAPH_B_MAX:
        raise Degenerate(f"|b| = {abs(p.b)} outside the validated stable-graph window")

    xs = np.linspace(-span, span, n_grid)
    saddle = core.plus_saddle(p)
    if p.b == 0.0:
        y0 = saddle.point.y
        return GraphFunction(xs, np.full(n_grid, y0), np.zeros(n_grid), np.zeros(n_grid))

    chart = local_manifold_chart(p, saddle, ChartKind.STABLE, degree=degree)
    abs_mu = abs(chart.multiplier)
    pad = 0.1
    y0 = saddle.point.y
    refine = (-span - 2 * pad, span + 2 * pad, y0 - 1.0, y0 + 1.0)
    for its in range(1, 12):
        arc = _GlobalArc(p, chart, its)
        s_max = chart.domain_radius / abs_mu**its
        s, pts = _adaptive_sample(arc, -s_max, s_max, h_max, ESCAPE_RADIUS_DEFAULT, refine)
        if len(pts) < 16:
            continue
        mask = np.abs(pts[:, 1] - saddle.point.y) <= 1.0
        runs = _runs(mask)
        if not runs:
            continue
        i, j = max(runs, key=lambda ij: _run_length(pts, ij))
        seg = pts[i:j]
        if seg[0, 0] > seg[-1, 0]:
            seg = seg[::-1]
        if seg[0, 0] <= -span - pad and seg[-1, 0] >= span + pad:
            dx = np.diff(seg[:, 0])
            window = (seg[:-1, 0] > -span - pad) & (seg[:-1, 0] < span + pad)
            if np.any(dx[window] <= 0.0):
                raise NotAGraph("stable arc folds inside the graph window")
            keep = np.concatenate([[True], dx > 0.0])
            seg = seg[keep]
            spline = CubicSpline(seg[:, 0], seg[:, 1])
            return GraphFunction(xs, spline(xs), spline(xs, 1), spline(xs, 2), spline)
    raise NotAGraph("stable arc never spanned the graph window")


def curve_derivatives(
    c: CurveSegment, at_arclength: float, *, window: float | None = None
) -> tuple[np.ndarray, float]:
    """Tangent and signed curvature from a windowed least-squares quadratic fit."""
    s = c.arclength
    if not (s[0] <= at_arclength <= s[-1]):
        raise OutOfRange(f"arclength {at_arclength} outside [0, {s[-1]}]")
    if window is None:
        spacing = c.length / max(len(c) - 1, 1)
        window = max(3.0 * spacing, 1.5e-3)
    sel = np.abs(s - at_arclength) <= window
    if np.count_nonzero(sel) < 6:
        order = np.argsort(np.abs(s - at_arclength))
        sel = np.zeros(len(s), dtype=bool)
        sel[order[:6]] = True
    t = s[sel] - at_arclength
    basis = np.column_stack([np.ones_like(t), t, t * t])
    cx, *_ = np.linalg.lstsq(basis, c.nodes[sel, 0], rcond=None)
    cy, *_ = np.linalg.lstsq(basis, c.nodes[sel, 1], rcond=None)
    dx, dy = cx[1], cy[1]
    ddx, ddy = 2.0 * cx[2], 2.0 * cy[2]
    speed = math.hypot(dx, dy)
    tangent = np.array([dx, dy]) / speed
    curvature = (dx * ddy - dy * ddx) / speed**3
    return tangent, float(curvature)
