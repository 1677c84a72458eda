"""Nested adaptive quadrature for the feasible-domain integrals.

Both double integrals are computed as an outer adaptive integral of inner
adaptive integrals. Each 1D integral uses globally adaptive Gauss-Kronrod
7/15 panels, bisecting the panel with the largest |K15 - G7| until the
total estimate meets the tolerance. Inner integrals are split at the points
where the integrand switches formula branch, so every panel sees a smooth
function.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .plane_geometry import StepParams, f_p_array
from .sphere_geometry import SphereStepParams, f_s_array

ROUNDOFF_FLOOR = 50 * np.finfo(float).eps

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes, ascending
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureSpec:
    relative_tolerance: float = 1e-10
    max_subdivisions: int = 400
    rule: str = "adaptive-composite"

    def __post_init__(self) -> None:
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")
        if self.rule != "adaptive-composite":
            raise ValueError(f"unsupported rule {self.rule!r}")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int

    def as_dict(self) -> dict:
        return {"value": self.value, "error_estimate": self.error_estimate, "evaluations": self.evaluations}


class QuadratureError(RuntimeError):
    """Raised when refinement runs out of subdivisions; ``result`` holds the best value."""

    def __init__(self, message: str, result: IntegralResult):
        super().__init__(message)
        self.result = result


@dataclass(order=True)
class _Panel:
    neg_err: float
    lo: float = field(compare=False)
    hi: float = field(compare=False)
    value: float = field(compare=False)
    err: float = field(compare=False)


def _gk15(f, lo: float, hi: float):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    k = half * float(fx @ _KW)
    g = half * float(fx @ _GW)
    return k, abs(k - g)


def adaptive_gk(f, breakpoints, epsrel: float, epsabs: float = 0.0, max_subdivisions: int = 400) -> IntegralResult:
    """Integrate a vectorised ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    Interior breakpoints seed the initial panels. The sum is taken in
    left-to-right panel order so results do not depend on refinement history.
    """
    pts = sorted(set(float(b) for b in breakpoints))
    panels: list[_Panel] = []
    evals = 0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        v, e = _gk15(f, lo, hi)
        evals += 15
        panels.append(_Panel(-e, lo, hi, v, e))
    heapq.heapify(panels)

    def totals():
        ordered = sorted(panels, key=lambda q: q.lo)
        return math.fsum(q.value for q in ordered), math.fsum(q.err for q in ordered)

    total, err = totals()
    splits = 0
    # below ROUNDOFF_FLOOR * |total| the estimate is dominated by rounding, not truncation
    while err > max(epsabs, epsrel * abs(total), ROUNDOFF_FLOOR * abs(total)):
        if splits >= max_subdivisions:
            raise QuadratureError(
                f"no convergence after {max_subdivisions} subdivisions (estimate {err:.3g})",
                IntegralResult(total, err, evals),
            )
        worst = heapq.heappop(panels)
        mid = 0.5 * (worst.lo + worst.hi)
        if not worst.lo < mid < worst.hi:
            # panel at floating-point resolution; keep it and stop refining it
            raise QuadratureError("panel width reached machine resolution", IntegralResult(total, err, evals))
        for lo, hi in ((worst.lo, mid), (mid, worst.hi)):
            v, e = _gk15(f, lo, hi)
            evals += 15
            heapq.heappush(panels, _Panel(-e, lo, hi, v, e))
        splits += 1
        total, err = totals()
    return IntegralResult(total, err, evals)


def _nested(outer_points, inner, q: QuadratureSpec, inner_scale: float) -> IntegralResult:
    """Outer adaptive integral of ``inner(t) -> IntegralResult``."""
    inner_rel = q.relative_tolerance * 1e-2
    inner_abs = q.relative_tolerance * 1e-2 * inner_scale
    counts = {"evals": 0, "err": 0.0}

    def outer_f(ts):
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            r = inner(float(t), inner_rel, inner_abs, q.max_subdivisions)
            out[i] = r.value
            counts["evals"] += r.evaluations
            counts["err"] = max(counts["err"], r.error_estimate)
        return out

    res = adaptive_gk(outer_f, outer_points, q.relative_tolerance, 0.0, q.max_subdivisions)
    width = max(outer_points) - min(outer_points)
    return IntegralResult(res.value, res.error_estimate + counts["err"] * width, counts["evals"])


# ---------------------------------------------------------------- plane

def inner_Ip(y: float, p: StepParams, epsrel: float = 1e-12, epsabs: float = 0.0,
             max_subdivisions: int = 400) -> IntegralResult:
    """x-integral of the planar conditional probability across the feasible domain at height y."""
    half = p.d1 / 2.0
    s = math.sqrt(max(p.d2 * p.d2 - y * y, 0.0))
    lo, hi = -half - s, half + s
    cuts = [lo, hi] + [c for c in (-half + s, half - s) if lo < c < hi]
    return adaptive_gk(lambda x: f_p_array(x, y, p.d1, p.d2), cuts, epsrel, epsabs, max_subdivisions)


def integrate_Ip_numeric(p: StepParams, q: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    def inner(y, er, ea, ms):
        return inner_Ip(y, p, er, ea, ms)

    return _nested([-p.d2, 0.0, p.d2], inner, q, inner_scale=p.d1 + 2 * p.d2)


# ---------------------------------------------------------------- sphere

def _phi_on_circle(theta: float, centre: float, b: float) -> float | None:
    """Zenith where the meridian at ``theta`` meets the radius-b circle around (centre, pi/2)."""
    c = math.cos(theta - centre)
    if c <= 0:
        return None
    ratio = math.cos(b) / c
    if ratio >= 1.0:
        return None
    return math.asin(ratio)


def _inner_Is(theta: float, p: SphereStepParams, in_cap: bool, epsrel, epsabs, ms) -> IntegralResult:
    a, b = p.half_arc, p.reach
    top = math.pi / 2
    if in_cap:
        lo = _phi_on_circle(theta, a, b)
        if lo is None:
            return IntegralResult(0.0, 0.0, 0)
    else:
        lo = top - b
    cuts = [lo, top]
    for centre in (a, -a):
        c = _phi_on_circle(theta, centre, b)
        if c is not None and lo < c < top:
            cuts.append(c)

    def f(phi):
        return f_s_array(theta, phi, p) * np.sin(phi)

    return adaptive_gk(f, cuts, epsrel, epsabs, ms)


def integrate_Is(p: SphereStepParams, q: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Feasible-domain integral of the spherical conditional probability.

    Four times the upper-right quarter of the band plus four times the upper
    half of W1's cap, scaled by rho^2.
    """
    a, b = p.half_arc, p.reach

    def rect(theta, er, ea, ms):
        return _inner_Is(theta, p, False, er, ea, ms)

    def cap(theta, er, ea, ms):
        return _inner_Is(theta, p, True, er, ea, ms)

    # theta values where a circle boundary enters or leaves the inner range
    rect_pts = [0.0, a] + [t for t in (a - b, b - a) if 0 < t < a]
    cap_pts = [a, a + b] + [t for t in (b - a,) if a < t < a + b]
    r1 = _nested(rect_pts, rect, q, inner_scale=b)
    r2 = _nested(cap_pts, cap, q, inner_scale=b)
    scale = 4.0 * p.rho**2
    return IntegralResult(
        scale * (r1.value + r2.value),
        scale * (r1.error_estimate + r2.error_estimate),
        r1.evaluations + r2.evaluations,
    )


def prob_sphere_numeric(p: SphereStepParams, q: QuadratureSpec = QuadratureSpec()) -> float:
    return integrate_Is(p, q).value / (4.0 * math.pi * p.rho**2)


def table1_percent_error(p: SphereStepParams, q: QuadratureSpec = QuadratureSpec()) -> tuple[float, IntegralResult]:
    """``100 * (2 d1 d2 / pi / I_s - 1)`` with the integral it came from."""
    res = integrate_Is(p, q)
    return 100.0 * (2.0 * p.d1 * p.d2 / math.pi / res.value - 1.0), res
