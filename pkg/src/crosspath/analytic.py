"""Closed-form first-step crossing probabilities and their bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .plane_geometry import StepParams, integral_Ip
from .sphere_geometry import SphereStepParams


@dataclass(frozen=True)
class RegionModel:
    """A disk of radius ``size`` or a sphere of radius ``size``.

    ``reach`` is d1 + d2, the width of the disk's border band. Areas for other
    shapes can go straight into :func:`bounds_from_areas`.
    """

    kind: str
    size: float
    reach: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("disk", "sphere"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError(f"region radius must be positive, got {self.size}")
        if self.reach < 0:
            raise ValueError("reach must be non-negative")

    @classmethod
    def disk(cls, r: float, p: StepParams | None = None) -> "RegionModel":
        return cls("disk", r, p.d1 + p.d2 if p else 0.0)

    @classmethod
    def sphere(cls, rho: float) -> "RegionModel":
        return cls("sphere", rho)

    @property
    def area(self) -> float:
        if self.kind == "disk":
            return math.pi * self.size**2
        return 4.0 * math.pi * self.size**2

    @property
    def inner_area(self) -> float:
        if self.kind == "sphere":
            return self.area
        if self.size <= self.reach:
            return 0.0
        return math.pi * (self.size - self.reach) ** 2

    @property
    def border_area(self) -> float:
        return self.area - self.inner_area


@dataclass(frozen=True)
class ProbabilityBounds:
    p_lo: float
    p_hi: float
    p_star: float
    avmpe_percent: float
    degenerate: bool = False


def bounds_from_areas(area: float, inner_area: float, p: StepParams) -> ProbabilityBounds:
    if not (area > 0 and 0 <= inner_area <= area):
        raise ValueError(f"need 0 <= inner_area <= area, got {inner_area}, {area}")
    p_hi = 2.0 * p.d1 * p.d2 / (math.pi * area)
    p_lo = p_hi * inner_area / area
    p_star = p.d1 * p.d2 * (inner_area + area) / (math.pi * area**2)
    avmpe = 100.0 * (area - inner_area) / (area + inner_area)
    return ProbabilityBounds(p_lo, p_hi, p_star, avmpe, degenerate=inner_area == 0)


def bounds_plane(region: RegionModel, p: StepParams) -> ProbabilityBounds:
    """Lower/upper bounds, midpoint and worst-case percentage error on a disk.

    A disk no wider than d1 + d2 has no inner region; the bounds are then
    still valid but ``p_lo`` is 0 and ``degenerate`` is set.
    """
    if region.kind != "disk":
        raise ValueError("bounds_plane needs a disk region")
    region = RegionModel.disk(region.size, p)
    return bounds_from_areas(region.area, region.inner_area, p)


def avmpe_circle(r: float, p: StepParams) -> float:
    s = p.d1 + p.d2
    if r <= s:
        raise ValueError(f"radius {r} must exceed d1 + d2 = {s}")
    q = (1.0 - s / r) ** 2
    return 100.0 * (1.0 - q) / (1.0 + q)


def prob_sphere(rho: float, p: StepParams) -> float:
    SphereStepParams(p.d1, p.d2, rho)  # rejects wrap-around parameters
    return p.d1 * p.d2 / (2.0 * math.pi**2 * rho**2)


def first_step_reference(region: RegionModel, p: StepParams) -> ProbabilityBounds:
    """Bounds for either region; on the sphere all three probabilities coincide."""
    if region.kind == "disk":
        return bounds_plane(region, p)
    ps = prob_sphere(region.size, p)
    assert math.isclose(ps, integral_Ip(p) / region.area, rel_tol=1e-12)
    return ProbabilityBounds(ps, ps, ps, 0.0)
