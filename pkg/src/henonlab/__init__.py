"""henonlab: numerical laboratory for the Henon family phi_{a,b}(x,y) = (y, a - bx + y^2)."""

__version__ = "0.1.0"

from .core import Params, PlanePoint, SaddleData  # noqa: F401
