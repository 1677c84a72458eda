import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crosspath.analytic import (
    RegionModel,
    avmpe_circle,
    bounds_from_areas,
    bounds_plane,
    prob_sphere,
)
from crosspath.plane_geometry import StepParams, integral_Ip

P = StepParams(1.0, 0.7)


def test_region_areas():
    disk = RegionModel.disk(10, P)
    assert disk.area == pytest.approx(100 * math.pi)
    assert disk.inner_area == pytest.approx(math.pi * 8.3**2)
    assert disk.border_area == pytest.approx(disk.area - disk.inner_area)
    sphere = RegionModel.sphere(10)
    assert sphere.area == pytest.approx(400 * math.pi)
    assert sphere.inner_area == sphere.area and sphere.border_area == 0


def test_region_rejects_bad_input():
    with pytest.raises(ValueError):
        RegionModel("square", 1.0)
    with pytest.raises(ValueError):
        RegionModel.disk(-1.0)


def test_disk_r10_constants():
    b = bounds_plane(RegionModel.disk(10), P)
    assert f"{b.p_lo:.4g}" == "0.0009772"
    assert f"{b.p_hi:.4g}" == "0.001418"
    assert f"{b.p_star:.4g}" == "0.001198"
    assert f"{b.avmpe_percent:.4g}" == "18.42"
    assert not b.degenerate


def test_small_disk_is_degenerate():
    b = bounds_plane(RegionModel.disk(1.5), P)
    assert b.p_lo == 0.0
    assert b.p_hi == pytest.approx(2 * 0.7 / (math.pi * math.pi * 2.25))
    assert b.avmpe_percent == 100.0
    assert b.degenerate


def test_bounds_plane_rejects_sphere():
    with pytest.raises(ValueError):
        bounds_plane(RegionModel.sphere(10), P)


def test_avmpe_circle():
    assert f"{avmpe_circle(10, P):.4g}" == "18.42"
    # (d1+d2)/r = 1 %
    small = avmpe_circle(170, P)
    assert small == pytest.approx(1.0, rel=0.02)
    assert avmpe_circle(1e9, StepParams(1e-6, 1e-6)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        avmpe_circle(1.7, P)


@given(
    r=st.floats(2.0, 1e4),
    d1=st.floats(0.01, 1.0),
    d2=st.floats(0.01, 0.99),
)
def test_bounds_invariants(r, d1, d2):
    p = StepParams(d1, d2)
    disk = RegionModel.disk(r, p)
    b = bounds_plane(disk, p)
    assert b.p_lo <= b.p_star <= b.p_hi
    assert b.p_star == pytest.approx((b.p_lo + b.p_hi) / 2, rel=1e-12)
    assert b.p_lo / b.p_hi == pytest.approx(disk.inner_area / disk.area, rel=1e-12)
    assert (b.p_hi - b.p_star) / b.p_star == pytest.approx(b.avmpe_percent / 100, rel=1e-9, abs=1e-12)
    assert avmpe_circle(r, p) == pytest.approx(b.avmpe_percent, abs=1e-12 * 100)


def test_bounds_from_areas_generic_shape():
    # a 20 x 20 square with a 1.7-wide border band
    b = bounds_from_areas(400.0, (20 - 3.4) ** 2, P)
    assert b.p_hi == pytest.approx(1.4 / (math.pi * 400))
    with pytest.raises(ValueError):
        bounds_from_areas(1.0, 2.0, P)


def test_prob_sphere():
    # d1 d2 / (2 pi^2 rho^2) = 3.546241e-4
    assert prob_sphere(10, P) == pytest.approx(3.5463e-4, rel=1e-4)
    assert prob_sphere(10, P) == pytest.approx(0.7 / (200 * math.pi**2), rel=1e-15)
    assert prob_sphere(20, P) == pytest.approx(prob_sphere(10, P) / 4, rel=1e-14)
    assert prob_sphere(10, StepParams(1e-9, 0.7)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        prob_sphere(0.4, P)


@given(rho=st.floats(1.0, 1e3), d1=st.floats(0.01, 1.0), d2=st.floats(0.01, 1.0))
def test_prob_sphere_consistent_with_plane_integral(rho, d1, d2):
    p = StepParams(d1, d2)
    assert prob_sphere(rho, p) * 4 * math.pi * rho**2 == pytest.approx(integral_Ip(p), rel=1e-12)
