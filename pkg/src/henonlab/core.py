"""Closed-form kernel for the Henon family phi_{a,b}(x, y) = (y, a - b*x + y^2).

Everything here is exact algebra: the map, its inverse, the Jacobian,
fixed points with eigendata, the dissipative-saddle predicate, and the
conjugacy from the classical family f_{a,b}(x, y) = (1 - a*x^2 + y, b*x).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConjugacy, NonInvertible, NoRealFixedPoints


class RootSign(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class Params:
    """Parameter pair (a, b); a unfolds tangencies, b is the Jacobian determinant."""

    a: float
    b: float


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @staticmethod
    def from_array(v) -> "PlanePoint":
        return PlanePoint(float(v[0]), float(v[1]))


@dataclass(frozen=True)
class SaddleData:
    """A fixed point with its eigendata.

    ``lam`` is the eigenvalue of smaller modulus (contracting for a saddle),
    ``sigma`` the one of larger modulus.  Eigenvectors are unit vectors in
    the (1, eigenvalue) direction forced by the Jacobian structure.
    """

    point: PlanePoint
    lam: float
    sigma: float
    v_s: np.ndarray
    v_u: np.ndarray
    sign: RootSign


def apply(p: Params, z: PlanePoint) -> PlanePoint:
    """One forward step of the map."""
    return PlanePoint(z.y, p.a - p.b * z.x + z.y * z.y)


def apply_inverse(p: Params, z: PlanePoint) -> PlanePoint:
    """One backward step; requires b != 0."""
    if p.b == 0.0:
        raise NonInvertible("b = 0: the map collapses the plane onto a parabola")
    return PlanePoint((p.a + z.x * z.x - z.y) / p.b, z.x)


def apply_array(p: Params, xy: np.ndarray) -> np.ndarray:
    """Vectorized forward step on an (..., 2) array of points."""
    out = np.empty_like(xy, dtype=float)
    out[..., 0] = xy[..., 1]
    out[..., 1] = p.a - p.b * xy[..., 0] + xy[..., 1] ** 2
    return out


def apply_inverse_array(p: Params, xy: np.ndarray) -> np.ndarray:
    """Vectorized backward step on an (..., 2) array of points."""
    if p.b == 0.0:
        raise NonInvertible("b = 0: the map collapses the plane onto a parabola")
    out = np.empty_like(xy, dtype=float)
    out[..., 0] = (p.a + xy[..., 0] ** 2 - xy[..., 1]) / p.b
    out[..., 1] = xy[..., 0]
    return out


def iterate(p: Params, z: PlanePoint, n: int) -> PlanePoint:
    """n-fold composition; negative n iterates the inverse."""
    pt = z
    if n >= 0:
        for _ in range(n):
            pt = apply(p, pt)
    else:
        for _ in range(-n):
            pt = apply_inverse(p, pt)
    return pt


def jacobian(p: Params, z: PlanePoint) -> np.ndarray:
    """Differential [[0, 1], [-b, 2y]]; its determinant is identically b."""
    return np.array([[0.0, 1.0], [-p.b, 2.0 * z.y]])


def _eigendata(p: Params, y: float, sign: RootSign) -> SaddleData:
    # Roots of t^2 - 2yt + b; ordered by modulus so lam is the contracting one.
    disc = y * y - p.b
    if disc >= 0.0:
        s = math.sqrt(disc)
        t1, t2 = y - s, y + s
    else:
        # Complex pair; store the real part twice so downstream predicates fail
        # cleanly (such a point is never a saddle).
        t1 = t2 = y
    if abs(t1) > abs(t2):
        t1, t2 = t2, t1
    v1 = np.array([1.0, t1]) / math.hypot(1.0, t1)
    v2 = np.array([1.0, t2]) / math.hypot(1.0, t2)
    return SaddleData(PlanePoint(y, y), t1, t2, v1, v2, sign)


def fixed_points(p: Params) -> tuple[SaddleData, SaddleData]:
    """Both fixed points (y^+/-, y^+/-) with y^+/- = (1+b +/- sqrt((1+b)^2-4a))/2.

    Returns (plus, minus); raises NoRealFixedPoints when the discriminant
    is negative.
    """
    disc = (1.0 + p.b) ** 2 - 4.0 * p.a
    if disc < 0.0:
        raise NoRealFixedPoints(f"(1+b)^2 - 4a = {disc} < 0 at (a, b) = ({p.a}, {p.b})")
    s = math.sqrt(disc)
    y_plus = (1.0 + p.b + s) / 2.0
    y_minus = (1.0 + p.b - s) / 2.0
    return _eigendata(p, y_plus, RootSign.PLUS), _eigendata(p, y_minus, RootSign.MINUS)


def plus_saddle(p: Params) -> SaddleData:
    """The plus-root fixed point used by every downstream module."""
    return fixed_points(p)[0]


def is_dissipative_saddle(s: SaddleData) -> bool:
    """True iff 0 < |lam| < 1 < sigma and |lam|*sigma < 1."""
    al = abs(s.lam)
    return 0.0 < al < 1.0 < s.sigma and al * s.sigma < 1.0


def conjugate_from_original(
    a_orig: float, b_orig: float, z: PlanePoint
) -> tuple[Params, PlanePoint]:
    """Carry classical-family data (f_{a,b}, a point z) into phi coordinates.

    The parameters map as (a, b) -> (-a, -b) and the point through
    (x, y) -> (-a*y/b, -a*x), so that transform(f(z)) = phi(transform(z)).
    """
    if a_orig == 0.0 or b_orig == 0.0:
        raise DegenerateConjugacy("coordinate change undefined for a = 0 or b = 0")
    params = Params(-a_orig, -b_orig)
    image = PlanePoint(-a_orig * z.y / b_orig, -a_orig * z.x)
    return params, image


def classical_apply(a_orig: float, b_orig: float, z: PlanePoint) -> PlanePoint:
    """One step of the classical family f_{a,b}(x, y) = (1 - a*x^2 + y, b*x)."""
    return PlanePoint(1.0 - a_orig * z.x * z.x + z.y, b_orig * z.x)
