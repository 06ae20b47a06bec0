"""Thickness of Cantor sets given as finite interval lists, and the Gap Lemma test.

A level-k approximation is a sorted list of disjoint closed intervals.  Gaps
are the bounded complementary components inside the hull; the bridge at a gap
boundary point is the maximal interval on the far side of that point avoiding
every gap at least as long as the one in question (equal lengths block).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import LevelTooCoarse


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, pairwise-disjoint closed intervals [l_i, r_i] on the line."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev_r = None
        for l, r in self.intervals:
            if r < l:
                raise ValueError(f"interval [{l}, {r}] is reversed")
            if prev_r is not None and l <= prev_r:
                raise ValueError("intervals overlap or are unsorted")
            prev_r = r

    @staticmethod
    def from_pairs(pairs: Sequence[Sequence[float]]) -> "IntervalSet":
        ordered = sorted((p[0], p[1]) for p in pairs)
        return IntervalSet(tuple(ordered))

    @property
    def hull(self) -> tuple[float, float]:
        return (self.intervals[0][0], self.intervals[-1][1])

    def gaps(self) -> list[tuple[float, float]]:
        """Bounded complementary components (never touch the hull boundary)."""
        out = []
        for (l1, r1), (l2, r2) in zip(self.intervals, self.intervals[1:]):
            out.append((r1, l2))
        return out

    def to_json(self) -> str:
        return json.dumps([[l, r] for l, r in self.intervals])

    @staticmethod
    def from_json(text: str) -> "IntervalSet":
        return IntervalSet.from_pairs(json.loads(text))

    def affine(self, alpha: float, beta: float) -> "IntervalSet":
        pairs = [(alpha * l + beta, alpha * r + beta) for l, r in self.intervals]
        if alpha < 0:
            pairs = [(r, l) for l, r in pairs]
        return IntervalSet.from_pairs(pairs)


@dataclass(frozen=True)
class Witness:
    gap: tuple[float, float]
    point: float
    bridge: tuple[float, float]
    ratio: float


@dataclass(frozen=True)
class ThicknessReport:
    tau: float
    witnesses: tuple[Witness, ...]
    min_witness: int  # -1 when there are no gaps (tau = +inf)


def thickness(k: IntervalSet) -> ThicknessReport:
    """Exact thickness of a finite interval set.

    With fewer than two intervals there are no gaps and tau is +inf.
    """
    gaps = k.gaps()
    if not gaps:
        return ThicknessReport(math.inf, (), -1)

    hull_l, hull_r = k.hull
    witnesses: list[Witness] = []
    for gi, (gl, gr) in enumerate(gaps):
        glen = gr - gl
        # Bridge at the left boundary point (gl): extend leftward until a gap
        # of length >= glen or the hull end.
        stop = hull_l
        for hl, hr in reversed(gaps[:gi]):
            if (hr - hl) >= glen:
                stop = hr
                break
        witnesses.append(Witness((gl, gr), gl, (stop, gl), (gl - stop) / glen))
        # Bridge at the right boundary point (gr): extend rightward.
        stop = hull_r
        for hl, hr in gaps[gi + 1 :]:
            if (hr - hl) >= glen:
                stop = hl
                break
        witnesses.append(Witness((gl, gr), gr, (gr, stop), (stop - gr) / glen))

    ratios = [w.ratio for w in witnesses]
    idx = min(range(len(ratios)), key=lambda i: ratios[i])
    return ThicknessReport(ratios[idx], tuple(witnesses), idx)


class ThicknessProduct(enum.Enum):
    PRODUCT_EXCEEDS_ONE = "ProductExceedsOne"
    PRODUCT_AT_MOST_ONE = "ProductAtMostOne"


class GapOutcome(enum.Enum):
    K1_IN_GAP_OF_K2 = "K1InGapOfK2"
    K2_IN_GAP_OF_K1 = "K2InGapOfK1"
    NONEMPTY_INTERSECTION = "NonemptyIntersection"
    UNDETERMINED = "Undetermined"


def _sets_intersect(k1: IntervalSet, k2: IntervalSet) -> bool:
    i = j = 0
    a, b = k1.intervals, k2.intervals
    while i < len(a) and j < len(b):
        l = max(a[i][0], b[j][0])
        r = min(a[i][1], b[j][1])
        if l <= r:
            return True
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return False


def _hull_in_gap(inner: IntervalSet, outer: IntervalSet) -> bool:
    hl, hr = inner.hull
    return any(gl < hl and hr < gr for gl, gr in outer.gaps())


def gap_lemma_predicate(
    k1: IntervalSet, k2: IntervalSet
) -> tuple[ThicknessProduct, GapOutcome]:
    """Classify a pair of interval sets against the Gap Lemma.

    The first component reports whether tau(K1)*tau(K2) > 1; the second is a
    direct geometric test at the available level.  When the product exceeds
    one and the hulls are linked, the lemma forces a nonempty intersection;
    a contradicting geometric answer raises LevelTooCoarse.
    """
    t1 = thickness(k1).tau
    t2 = thickness(k2).tau
    product = (
        ThicknessProduct.PRODUCT_EXCEEDS_ONE
        if t1 * t2 > 1.0
        else ThicknessProduct.PRODUCT_AT_MOST_ONE
    )

    if _sets_intersect(k1, k2):
        outcome = GapOutcome.NONEMPTY_INTERSECTION
    elif _hull_in_gap(k1, k2):
        outcome = GapOutcome.K1_IN_GAP_OF_K2
    elif _hull_in_gap(k2, k1):
        outcome = GapOutcome.K2_IN_GAP_OF_K1
    else:
        outcome = GapOutcome.UNDETERMINED

    if product is ThicknessProduct.PRODUCT_EXCEEDS_ONE:
        h1, h2 = k1.hull, k2.hull
        hulls_overlap = max(h1[0], h2[0]) <= min(h1[1], h2[1])
        linked = (
            hulls_overlap
            and not _hull_in_gap(k1, k2)
            and not _hull_in_gap(k2, k1)
        )
        if linked and outcome is GapOutcome.UNDETERMINED:
            raise LevelTooCoarse(
                "thick linked pair shows no intersection at this level"
            )
    return product, outcome


def middle_alpha_set(alpha: float, level: int, scale: float = 1.0, shift: float = 0.0) -> IntervalSet:
    """Level-k approximation of the middle-alpha Cantor construction on [0, 1].

    alpha = 1/3 gives the ternary set (tau = 1), alpha = 1/5 the middle-fifth
    set (tau = 2).
    """
    intervals = [(0.0, 1.0)]
    keep = (1.0 - alpha) / 2.0
    for _ in range(level):
        nxt = []
        for l, r in intervals:
            w = r - l
            nxt.append((l, l + keep * w))
            nxt.append((r - keep * w, r))
        intervals = nxt
    return IntervalSet.from_pairs(
        [(scale * l + shift, scale * r + shift) for l, r in intervals]
    )


def middle_third_integer_set(level: int) -> IntervalSet:
    """Ternary construction with integer endpoints (scale 3^level), exact in floats."""
    intervals = [(0, 3**level)]
    for k in range(level):
        third = 3 ** (level - k - 1)
        intervals = [
            piece
            for l, r in intervals
            for piece in ((l, l + third), (r - third, r))
        ]
    return IntervalSet.from_pairs([(float(l), float(r)) for l, r in intervals])


def middle_fifth_integer_set(level: int) -> IntervalSet:
    """Middle-fifth construction with integer endpoints (scale 5^level)."""
    intervals = [(0, 5**level)]
    for k in range(level):
        fifth = 5 ** (level - k - 1)
        intervals = [
            piece
            for l, r in intervals
            for piece in ((l, l + 2 * fifth), (r - 2 * fifth, r))
        ]
    return IntervalSet.from_pairs([(float(l), float(r)) for l, r in intervals])
