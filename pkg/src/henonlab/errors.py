"""Exception hierarchy shared by all henonlab modules."""


class HenonLabError(Exception):
    """Base class for all domain errors raised by this package."""


class NonInvertible(HenonLabError):
    """The map cannot be inverted (b = 0)."""


class NoRealFixedPoints(HenonLabError):
    """The discriminant (1+b)^2 - 4a is negative."""


class DegenerateConjugacy(HenonLabError):
    """The coordinate change to the classical family is undefined (a or b zero)."""


class Degenerate(HenonLabError):
    """A manifold chart does not exist in this parameter regime."""


class SmallDivisor(HenonLabError):
    """A resonance mu^k ~ eigenvalue makes the chart recurrence singular."""


class BlowUp(HenonLabError):
    """Every node of a grown arc left the escape region."""


class NotAGraph(HenonLabError):
    """A manifold arc folds where a graph representation was required."""


class OutOfRange(HenonLabError):
    """Arclength query outside the segment's parameter range."""


class NoInteriorMax(HenonLabError):
    """The split-function profile has its maximum on the window boundary."""


class NewtonDiverged(HenonLabError):
    """Newton iteration failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate: float | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NotGraphLike(HenonLabError):
    """A curve folds inside the tangency-detection window."""


class NoReturn(HenonLabError):
    """No admissible even return time produced two crossing pieces."""


class TangencyInside(HenonLabError):
    """Return pieces cannot be separated from the tangency point."""


class ResolutionExhausted(HenonLabError):
    """Cantor-slice refinement hit the minimum representable interval width."""


class LevelTooCoarse(HenonLabError):
    """The geometric gap-lemma test is ambiguous at the available level."""


class NoRealFixedPoint(HenonLabError):
    """The limit family has no real fixed point (a_bar > 1/4)."""


class ReturnNotFound(HenonLabError):
    """No single-round periodic orbit exists at the requested return time."""


class IllConditioned(HenonLabError):
    """An affine frame fit is degenerate at this scale."""


class EscapedBox(HenonLabError):
    """An intermediate orbit left the validity region of a renormalization frame."""


class FrameUnavailable(HenonLabError):
    """Finite-n leaf measurement requested without a usable frame."""


class ConfigError(HenonLabError):
    """A run configuration file is malformed or violates its schema."""
