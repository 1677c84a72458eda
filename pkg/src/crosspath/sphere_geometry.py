"""Spherical primitives: coordinates, geodesic steps, and arc crossings.

Points are ``(rho, theta, phi)`` with ``theta`` azimuthal and ``phi`` zenithal.
The conditional crossing probability is evaluated in the frame where the first
arc sits on the equator, centred on ``(rho, 0, pi/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CLAMP_SLACK = 1e-9
COPLANAR_TOL = 1e-12
ARC_TOL = 1e-12
BRANCH_SLACK = 1e-12


@dataclass(frozen=True)
class SphericalPoint:
    rho: float
    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not (-CLAMP_SLACK <= self.phi <= math.pi + CLAMP_SLACK):
            raise ValueError(f"phi={self.phi} outside [0, pi]")


@dataclass(frozen=True)
class CartesianVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "CartesianVector":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class GeodesicArc:
    start: SphericalPoint
    end: SphericalPoint


@dataclass(frozen=True)
class SphereStepParams:
    d1: float
    d2: float
    rho: float

    def __post_init__(self) -> None:
        if not (self.d1 > 0 and self.d2 > 0 and self.rho > 0):
            raise ValueError(f"d1, d2, rho must be positive: {self}")
        if not self.d2 / self.rho < math.pi / 2:
            raise ValueError(f"d2/rho={self.d2 / self.rho} must be < pi/2")
        if not self.d1 / (2 * self.rho) + self.d2 / self.rho < math.pi:
            raise ValueError("d1/(2 rho) + d2/rho must be < pi (feasible domain wraps around)")

    @property
    def half_arc(self) -> float:
        """Angular half-length of the first arc."""
        return self.d1 / (2.0 * self.rho)

    @property
    def reach(self) -> float:
        """Angular step length of the second walker."""
        return self.d2 / self.rho


def _clamp(value):
    arr = np.asarray(value, dtype=float)
    bad = np.abs(arr) > 1.0 + CLAMP_SLACK
    if np.any(bad):
        raise ValueError(f"argument outside [-1, 1] beyond slack: {arr[bad].ravel()[:3]}")
    return np.clip(arr, -1.0, 1.0)


# ---------------------------------------------------------------- coordinates

def cart_array(rho, theta, phi):
    """Stacked Cartesian coordinates, last axis of length 3."""
    sp = np.sin(phi)
    return np.stack(
        np.broadcast_arrays(rho * np.cos(theta) * sp, rho * np.sin(theta) * sp, rho * np.cos(phi)),
        axis=-1,
    )


def sph_array(v):
    """Inverse of :func:`cart_array`: returns ``(rho, theta, phi)`` arrays.

    ``theta`` lies in [-pi/2, 3pi/2), the range of the arcsin branch formula;
    computing it through atan2 avoids arcsin's loss of precision near |y/r| = 1.
    At the poles theta is 0.
    """
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rxy = np.hypot(x, y)
    rho = np.sqrt(rxy * rxy + z * z)
    if np.any(rho == 0):
        raise ValueError("zero vector has no spherical coordinates")
    theta = np.arctan2(y, x)
    theta = np.where(theta < -math.pi / 2, theta + 2 * math.pi, theta)
    theta = np.where(rxy == 0, 0.0, theta)
    phi = np.arctan2(rxy, z)
    return rho, theta, phi


def cart(p: SphericalPoint) -> CartesianVector:
    sp = math.sin(p.phi)
    return CartesianVector(
        p.rho * math.cos(p.theta) * sp, p.rho * math.sin(p.theta) * sp, p.rho * math.cos(p.phi)
    )


def sph(v: CartesianVector) -> SphericalPoint:
    rho, theta, phi = sph_array(v.as_array())
    return SphericalPoint(float(rho), float(theta), float(phi))


# ---------------------------------------------------------------- distances and steps

def geodesic_distance(p1: SphericalPoint, p2: SphericalPoint) -> float:
    if not math.isclose(p1.rho, p2.rho, rel_tol=1e-12):
        raise ValueError(f"points on different spheres: rho={p1.rho} vs {p2.rho}")
    c = (
        math.sin(p1.phi) * math.sin(p2.phi)
        * (math.cos(p1.theta) * math.cos(p2.theta) + math.sin(p1.theta) * math.sin(p2.theta))
        + math.cos(p1.phi) * math.cos(p2.phi)
    )
    return p1.rho * math.acos(float(_clamp(c)))


def _pivot_zenith(phi, angle):
    # move down the meridian unless that would pass the south pole
    return np.where(phi < math.pi - angle, phi + angle, phi - angle)


def rodrigues_endpoint_array(rho, theta, phi, d, alpha):
    """Cartesian endpoints at geodesic distance ``d`` from ``(rho, theta, phi)``.

    A pivot point Q on the same meridian is rotated by ``alpha`` about the
    axis through the start point with ``I + A sin(alpha) + A^2 (1 - cos(alpha))``.
    """
    q = cart_array(rho, theta, _pivot_zenith(phi, d / rho))
    u = cart_array(1.0, theta, phi)
    sa = np.sin(alpha)[..., None]
    ca = np.cos(alpha)[..., None]
    u_x_q = _cross(u, q)
    # A q = u x q and A^2 q = u (u.q) - q
    a2q = u * _dot(u, q)[..., None] - q
    return q + u_x_q * sa + a2q * (1.0 - ca)


def rodrigues_step(theta: float, phi: float, angle: float, alpha: float) -> tuple[float, float, float]:
    """Scalar unit-sphere version of :func:`rodrigues_endpoint_array` (``angle = d / rho``)."""
    z = phi + angle if phi < math.pi - angle else phi - angle
    st, ct = math.sin(theta), math.cos(theta)
    sp = math.sin(phi)
    ux, uy, uz = ct * sp, st * sp, math.cos(phi)
    sz = math.sin(z)
    qx, qy, qz = ct * sz, st * sz, math.cos(z)
    sa, ca = math.sin(alpha), math.cos(alpha)
    dot = ux * qx + uy * qy + uz * qz
    cx = uy * qz - uz * qy
    cy = uz * qx - ux * qz
    cz = ux * qy - uy * qx
    k = 1.0 - ca
    return (
        qx + cx * sa + (ux * dot - qx) * k,
        qy + cy * sa + (uy * dot - qy) * k,
        qz + cz * sa + (uz * dot - qz) * k,
    )


def sph_angles(x: float, y: float, z: float) -> tuple[float, float]:
    """Scalar ``(theta, phi)`` with the same conventions as :func:`sph_array`."""
    rxy = math.hypot(x, y)
    if rxy == 0.0:
        return 0.0, (0.0 if z > 0 else math.pi)
    theta = math.atan2(y, x)
    if theta < -math.pi / 2:
        theta += 2 * math.pi
    return theta, math.atan2(rxy, z)


def rodrigues_endpoint(v: SphericalPoint, d: float, alpha: float) -> SphericalPoint:
    if not 0 < d < math.pi * v.rho:
        raise ValueError(f"step length {d} outside (0, pi*rho)")
    theta, phi = sph_angles(*rodrigues_step(v.theta, v.phi, d / v.rho, alpha))
    return SphericalPoint(v.rho, theta, phi)


def tangent_toward(x: CartesianVector, y: CartesianVector) -> CartesianVector:
    xa, ya = x.as_array(), y.as_array()
    t = ya - (xa @ ya) / (xa @ xa) * xa
    n = np.linalg.norm(t)
    if n <= 1e-12 * np.linalg.norm(ya):
        raise ValueError("tangent undefined for parallel or antiparallel vectors")
    return CartesianVector.from_array(t / n)


# ---------------------------------------------------------------- canonical frame

def _canonical_pieces(theta2, phi2, p: SphereStepParams):
    """Membership flags and the equator half-window for V2 in the canonical frame."""
    a, b = p.half_arc, p.reach
    theta2 = np.asarray(theta2, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    sp = np.sin(phi2)
    cos_b = math.cos(b)
    # cos of angular distance to W1 at (a, pi/2) and V1 at (-a, pi/2)
    to_w1 = np.arccos(_clamp(sp * np.cos(theta2 - a)))
    to_v1 = np.arccos(_clamp(sp * np.cos(theta2 + a)))
    in_right = to_w1 < b - BRANCH_SLACK
    in_left = to_v1 < b - BRANCH_SLACK
    ratio = np.divide(cos_b, sp, out=np.full_like(sp, np.inf), where=sp > 0)
    return in_right, in_left, ratio


def _half_window(ratio):
    return np.arccos(_clamp(ratio))


def canonical_arc_distance(theta2, phi2, p: SphereStepParams):
    """Angular distance from V2 to the canonical arc V1W1."""
    a = p.half_arc
    theta2 = np.asarray(theta2, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    sp = np.sin(phi2)
    off_band = np.abs(math.pi / 2 - phi2)
    to_w1 = np.arccos(np.clip(sp * np.cos(theta2 - a), -1, 1))
    to_v1 = np.arccos(np.clip(sp * np.cos(theta2 + a), -1, 1))
    return np.where(np.abs(theta2) <= a, off_band, np.minimum(to_w1, to_v1))


def h_points_array(theta2, phi2, p: SphereStepParams):
    """Cartesian (h_r, h_l) for V2 in the canonical frame."""
    a = p.half_arc
    in_right, in_left, ratio = _canonical_pieces(theta2, phi2, p)
    if np.any(~in_right & ~in_left & (ratio > 1.0 + CLAMP_SLACK)):
        raise ValueError("V2 too far from the equator for the equator window")
    w = _half_window(np.where(in_right & in_left, 0.0, np.minimum(ratio, 1.0)))
    theta2 = np.asarray(theta2, dtype=float)
    th_r = np.where(in_right, a, theta2 + w)
    th_l = np.where(in_left, -a, theta2 - w)
    eq = math.pi / 2
    return cart_array(p.rho, th_r, eq), cart_array(p.rho, th_l, eq)


def h_right(v2: SphericalPoint, p: SphereStepParams) -> CartesianVector:
    hr, _ = h_points_array(v2.theta, v2.phi, p)
    return CartesianVector.from_array(hr)


def h_left(v2: SphericalPoint, p: SphereStepParams) -> CartesianVector:
    _, hl = h_points_array(v2.theta, v2.phi, p)
    return CartesianVector.from_array(hl)


def _unit_tangents(x, h):
    t = h - np.sum(x * h, axis=-1, keepdims=True) * x
    n = np.linalg.norm(t, axis=-1, keepdims=True)
    return t, n


def f_s_array(theta2, phi2, p: SphereStepParams):
    """Crossing probability for the second arc given V2 in the canonical frame.

    Points outside the feasible domain raise ``ValueError``. On the closed
    equatorial arc itself (where a tangent degenerates) the two-sided limit
    1/2 is returned; on the outer boundary the window closes and 0 is returned.
    """
    theta2 = np.asarray(theta2, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    theta2, phi2 = np.broadcast_arrays(theta2, phi2)
    if np.any(canonical_arc_distance(theta2, phi2, p) > p.reach * (1 + CLAMP_SLACK)):
        raise ValueError("point outside the feasible domain")

    in_right, in_left, ratio = _canonical_pieces(theta2, phi2, p)
    closed = ~in_right & ~in_left & (ratio >= 1.0)
    safe_ratio = np.where(closed, 0.0, np.minimum(ratio, 1.0))
    w = _half_window(safe_ratio)
    a = p.half_arc
    eq = math.pi / 2
    hr = cart_array(1.0, np.where(in_right, a, theta2 + w), eq)
    hl = cart_array(1.0, np.where(in_left, -a, theta2 - w), eq)
    x = cart_array(1.0, theta2, phi2)

    tr, nr = _unit_tangents(x, hr)
    tl, nl = _unit_tangents(x, hl)
    degenerate = (nr[..., 0] <= 1e-15) | (nl[..., 0] <= 1e-15)
    nr = np.where(nr > 0, nr, 1.0)
    nl = np.where(nl > 0, nl, 1.0)
    cosb = np.sum(tr / nr * tl / nl, axis=-1)
    beta = np.arccos(_clamp(cosb))
    out = beta / (2 * math.pi)
    out = np.where(degenerate, 0.5, out)
    return np.where(closed, 0.0, out)


def f_s_conditional(v2: SphericalPoint, p: SphereStepParams) -> float:
    return float(f_s_array(v2.theta, v2.phi, p))


# ---------------------------------------------------------------- arc intersection

def _cross(u, v):
    ux, uy, uz = u[..., 0], u[..., 1], u[..., 2]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    return np.stack((uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx), axis=-1)


def _dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _within(a, b, n, q, tol):
    """q on the great circle with normal n: is it on the minor arc a->b?"""
    s1 = _dot(_cross(a, q), n)
    s2 = _dot(_cross(q, b), n)
    return (s1 >= -tol) & (s2 >= -tol)


def arcs_intersect_array(a, b, c, d):
    """Vectorised minor-arc test for arcs AB and CD given as Cartesian vectors."""
    a, b, c, d = (_unit(np.asarray(v, dtype=float)) for v in (a, b, c, d))
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    n1 = _cross(a, b)
    n2 = _cross(c, d)
    l1 = np.linalg.norm(n1, axis=-1, keepdims=True)
    l2 = np.linalg.norm(n2, axis=-1, keepdims=True)
    if np.any(l1 == 0) or np.any(l2 == 0):
        raise ValueError("degenerate arc (coincident or antipodal endpoints)")
    n1 = n1 / l1
    n2 = n2 / l2
    line = _cross(n1, n2)
    ll = np.linalg.norm(line, axis=-1, keepdims=True)
    coplanar = ll[..., 0] <= COPLANAR_TOL

    p = line / np.where(ll > 0, ll, 1.0)
    hit = np.zeros(coplanar.shape, dtype=bool)
    for cand in (p, -p):
        hit |= _within(a, b, n1, cand, ARC_TOL) & _within(c, d, n2, cand, ARC_TOL)

    overlap = (
        _within(a, b, n1, c, ARC_TOL) | _within(a, b, n1, d, ARC_TOL)
        | _within(c, d, n2, a, ARC_TOL) | _within(c, d, n2, b, ARC_TOL)
    )
    # a true overlap also needs the endpoints to sit on the shared circle
    on_circle = np.abs(_dot(c, n1)) <= 1e-9
    return np.where(coplanar, overlap & on_circle, hit)


def arcs_intersect(a1: GeodesicArc, a2: GeodesicArc) -> bool:
    pts = [cart(q).as_array() for q in (a1.start, a1.end, a2.start, a2.end)]
    return bool(arcs_intersect_array(*pts))
