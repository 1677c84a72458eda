"""Planar primitives for two-walker crossing probabilities.

Scalar helpers work on the small value types below; the ``*_array`` variants
take numpy arrays and are what the Monte Carlo and quadrature code call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ORIENT_TOL = 1e-12
CLAMP_SLACK = 1e-9
BRANCH_SLACK = 1e-12


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


# Same shape, different frame: V1W1 on the x-axis, centred at the origin.
CanonicalFramePoint = PlanarPoint


@dataclass(frozen=True)
class PlanarSegment:
    start: PlanarPoint
    end: PlanarPoint


@dataclass(frozen=True)
class StepParams:
    d1: float
    d2: float

    def __post_init__(self) -> None:
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError(f"step lengths must be positive, got d1={self.d1}, d2={self.d2}")


def _clamp_unit(value, slack: float = CLAMP_SLACK):
    """Clamp into [-1, 1]; anything further out than ``slack`` is a caller bug."""
    arr = np.asarray(value, dtype=float)
    if np.any(np.abs(arr) > 1.0 + slack):
        raise ValueError(f"argument outside [-1, 1] beyond slack: {arr[np.abs(arr) > 1.0 + slack].ravel()[:3]}")
    return np.clip(arr, -1.0, 1.0)


def planar_endpoint(v: PlanarPoint, d: float, alpha: float) -> PlanarPoint:
    return PlanarPoint(v.x + d * math.cos(alpha), v.y + d * math.sin(alpha))


def planar_endpoint_array(x, y, d, alpha):
    return x + d * np.cos(alpha), y + d * np.sin(alpha)


def segments_intersect_array(ax, ay, bx, by, cx, cy, dx, dy):
    """Vectorised closed-segment test for AB against CD.

    Endpoint contact and collinear overlap count as intersecting.
    """
    ax, ay, bx, by, cx, cy, dx, dy = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (ax, ay, bx, by, cx, cy, dx, dy))
    )

    def orient(px, py, qx, qy, rx, ry):
        o = (qx - px) * (ry - py) - (qy - py) * (rx - px)
        return np.where(np.abs(o) <= ORIENT_TOL, 0.0, np.sign(o))

    def on_box(px, py, qx, qy, rx, ry):
        # r collinear with pq: is it inside pq's bounding box?
        return (
            (np.minimum(px, qx) - ORIENT_TOL <= rx)
            & (rx <= np.maximum(px, qx) + ORIENT_TOL)
            & (np.minimum(py, qy) - ORIENT_TOL <= ry)
            & (ry <= np.maximum(py, qy) + ORIENT_TOL)
        )

    o1 = orient(ax, ay, bx, by, cx, cy)
    o2 = orient(ax, ay, bx, by, dx, dy)
    o3 = orient(cx, cy, dx, dy, ax, ay)
    o4 = orient(cx, cy, dx, dy, bx, by)

    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    touching = (
        ((o1 == 0) & on_box(ax, ay, bx, by, cx, cy))
        | ((o2 == 0) & on_box(ax, ay, bx, by, dx, dy))
        | ((o3 == 0) & on_box(cx, cy, dx, dy, ax, ay))
        | ((o4 == 0) & on_box(cx, cy, dx, dy, bx, by))
    )
    return proper | touching


def segments_intersect(s1: PlanarSegment, s2: PlanarSegment) -> bool:
    return bool(
        segments_intersect_array(
            s1.start.x, s1.start.y, s1.end.x, s1.end.y,
            s2.start.x, s2.start.y, s2.end.x, s2.end.y,
        )
    )


def distance_to_canonical_segment(x, y, d1):
    """Distance from (x, y) to the segment [(-d1/2, 0), (d1/2, 0)]."""
    excess = np.maximum(np.abs(np.asarray(x, dtype=float)) - d1 / 2.0, 0.0)
    return np.hypot(excess, y)


def in_feasible_domain(v2: CanonicalFramePoint, p: StepParams) -> bool:
    return bool(distance_to_canonical_segment(v2.x, v2.y, p.d1) <= p.d2)


def f_p_branches(x, y, d1: float, d2: float):
    """The three closed-form candidates (neither circle, both circles, one circle).

    Each is evaluated everywhere; :func:`f_p_array` picks one per point.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = d1 / 2.0
    ay = np.abs(y)
    isosceles = np.arccos(_clamp_unit(ay / d2))
    # atan2(a, |y|) == arctan(a/|y|) for y != 0 and gives the one-sided limit at y == 0
    f1 = isosceles / math.pi
    f2 = (np.arctan2(x + half, ay) - np.arctan2(x - half, ay)) / (2.0 * math.pi)
    # the one-circle formula is written for W1's circle; |x| mirrors it onto V1's
    f3 = (isosceles - np.arctan2(np.abs(x) - half, ay)) / (2.0 * math.pi)
    return f1, f2, f3


def f_p_array(x, y, d1: float, d2: float):
    """Probability that the second step crosses V1W1, given V2=(x, y) in the canonical frame.

    Dispatches on membership of V2 in the radius-d2 circles around V1=(-d1/2, 0)
    and W1=(d1/2, 0). Points outside the feasible domain raise ``ValueError``.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(distance_to_canonical_segment(x, y, d1) > d2 * (1.0 + CLAMP_SLACK)):
        raise ValueError("point outside the feasible domain")
    half = d1 / 2.0
    in_left = np.hypot(x + half, y) < d2 - BRANCH_SLACK
    in_right = np.hypot(x - half, y) < d2 - BRANCH_SLACK
    f1, f2, f3 = f_p_branches(x, y, d1, d2)
    return np.where(in_left & in_right, f2, np.where(in_left ^ in_right, f3, f1))


def f_p_conditional(v2: CanonicalFramePoint, p: StepParams) -> float:
    return float(f_p_array(v2.x, v2.y, p.d1, p.d2))


def h_of_y(y: float, p: StepParams) -> float:
    """Closed form of the x-integral of the conditional crossing probability at height y."""
    if abs(y) > p.d2:
        raise ValueError(f"|y|={abs(y)} exceeds d2={p.d2}")
    return p.d1 * math.acos(min(abs(y) / p.d2, 1.0)) / math.pi


def integral_Ip(p: StepParams) -> float:
    return 2.0 * p.d1 * p.d2 / math.pi
