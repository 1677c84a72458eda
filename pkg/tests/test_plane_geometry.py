import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosspath.plane_geometry import (
    PlanarPoint,
    PlanarSegment,
    StepParams,
    f_p_array,
    f_p_branches,
    f_p_conditional,
    h_of_y,
    in_feasible_domain,
    integral_Ip,
    planar_endpoint,
    segments_intersect,
    segments_intersect_array,
)
from crosspath.quadrature import inner_Ip

from oracles import binomial_sigma, inner_integral_scipy

P = PlanarPoint


def seg(ax, ay, bx, by):
    return PlanarSegment(P(ax, ay), P(bx, by))


@pytest.mark.parametrize(
    "v, d, alpha, expected",
    [
        ((0, 0), 1, 0, (1, 0)),
        ((0, 0), 1, math.pi / 2, (0, 1)),
        ((2, 3), 0.7, math.pi, (1.3, 3)),
    ],
)
def test_planar_endpoint(v, d, alpha, expected):
    w = planar_endpoint(P(*v), d, alpha)
    assert w.x == pytest.approx(expected[0], abs=1e-15)
    assert w.y == pytest.approx(expected[1], abs=1e-15)


def test_step_params_reject_nonpositive():
    with pytest.raises(ValueError):
        StepParams(0, 1)
    with pytest.raises(ValueError):
        StepParams(1, -0.5)


@pytest.mark.parametrize(
    "s1, s2, expected",
    [
        (seg(0, 0, 1, 0), seg(0.5, -1, 0.5, 1), True),
        (seg(0, 0, 1, 0), seg(0, 1, 1, 1), False),
        (seg(0, 0, 1, 0), seg(1, 0, 2, 1), True),
        (seg(0, 0, 2, 0), seg(1, 0, 3, 0), True),  # collinear overlap
        (seg(0, 0, 1, 0), seg(2, 0, 3, 0), False),  # collinear, disjoint
        (seg(0, 0, 1, 1), seg(0, 1, 0.4, 0.6), False),  # stops short
    ],
)
def test_segments_intersect_cases(s1, s2, expected):
    assert segments_intersect(s1, s2) is expected
    assert segments_intersect(s2, s1) is expected


def test_segments_intersect_symmetric_and_rigid_invariant():
    rng = np.random.default_rng(11)
    n = 10_000
    pts = rng.uniform(-1, 1, size=(n, 8))
    base = segments_intersect_array(*pts.T)
    swapped = segments_intersect_array(*pts[:, [4, 5, 6, 7, 0, 1, 2, 3]].T)
    assert np.array_equal(base, swapped)

    ang = rng.uniform(0, 2 * math.pi, n)
    shift = rng.uniform(-50, 50, size=(n, 2))
    c, s = np.cos(ang), np.sin(ang)
    moved = np.empty_like(pts)
    for i in range(0, 8, 2):
        x, y = pts[:, i], pts[:, i + 1]
        moved[:, i] = c * x - s * y + shift[:, 0]
        moved[:, i + 1] = s * x + c * y + shift[:, 1]
    assert np.array_equal(base, segments_intersect_array(*moved.T))
    assert 0.1 < base.mean() < 0.9


@pytest.mark.parametrize(
    "pt, expected",
    [((0, 0.7), True), (0.5 + 0.7 + 1e-9, False), ((0, 0), True)],
)
def test_in_feasible_domain(pt, expected):
    p = StepParams(1.0, 0.7)
    if not isinstance(pt, tuple):
        pt = (pt, 0.0)
    assert in_feasible_domain(P(*pt), p) is expected


def test_f_p_trivial_values():
    assert f_p_conditional(P(0, 0.7), StepParams(1, 0.7)) == pytest.approx(0.0, abs=1e-12)
    assert f_p_conditional(P(0, 0.35), StepParams(7, 0.7)) == pytest.approx(1 / 3, abs=1e-12)


def test_f_p_rejects_outside_domain():
    with pytest.raises(ValueError):
        f_p_conditional(P(3, 0), StepParams(1, 0.7))


def test_f_p_y_zero_limits():
    p = StepParams(1.0, 0.7)
    # on the segment itself the crossing window is a half turn
    for x in (-0.4, 0.0, 0.3):
        assert f_p_conditional(P(x, 0.0), p) == pytest.approx(0.5)
    # on the axis beyond W1 the window closes
    assert f_p_conditional(P(0.9, 0.0), p) == pytest.approx(0.0)


def mc_f_p(x, y, d1, d2, n, rng):
    alpha = rng.uniform(0, 2 * math.pi, n)
    hits = segments_intersect_array(
        -d1 / 2, 0.0, d1 / 2, 0.0, x, y, x + d2 * np.cos(alpha), y + d2 * np.sin(alpha)
    )
    return hits.mean()


def test_f_p_spec_point_against_monte_carlo():
    rng = np.random.default_rng(2)
    n = 1_000_000
    analytic = f_p_conditional(P(0, 0.3), StepParams(1, 0.7))
    # inside both circles: the segment subtends 2*atan(0.5/0.3)
    assert analytic == pytest.approx(math.atan(5 / 3) / math.pi, abs=1e-14)
    freq = mc_f_p(0, 0.3, 1.0, 0.7, n, rng)
    assert abs(freq - analytic) <= 3 * binomial_sigma(analytic, n)


def random_feasible_points(rng, n, d1, d2):
    out = []
    while len(out) < n:
        x = rng.uniform(-d1 / 2 - d2, d1 / 2 + d2)
        y = rng.uniform(-d2, d2)
        if in_feasible_domain(P(x, y), StepParams(d1, d2)):
            out.append((x, y))
    return np.array(out)


def test_f_p_monte_carlo_consistency():
    rng = np.random.default_rng(3)
    n = 100_000
    worst = 0.0
    for _ in range(100):
        d1 = rng.uniform(0.2, 3.0)
        d2 = rng.uniform(0.2, 3.0)
        (x, y), = random_feasible_points(rng, 1, d1, d2)
        f = f_p_conditional(P(x, y), StepParams(d1, d2))
        freq = mc_f_p(x, y, d1, d2, n, rng)
        z = abs(freq - f) / binomial_sigma(f, n)
        worst = max(worst, z)
    assert worst <= 4.0


@settings(max_examples=300, deadline=None)
@given(
    d1=st.floats(0.05, 10),
    d2=st.floats(0.05, 10),
    u=st.floats(-1, 1),
    v=st.floats(-1, 1),
)
def test_f_p_range(d1, d2, u, v):
    y = v * d2
    s = math.sqrt(d2 * d2 - y * y)
    x = u * (d1 / 2 + s)
    f = f_p_conditional(P(x, y), StepParams(d1, d2))
    assert 0.0 <= f <= 0.5 + 1e-15


@pytest.mark.parametrize("d1, d2", [(1.0, 0.7), (3.0, 1.0), (2.0, 2.0), (0.5, 2.0)])
def test_f_p_branch_continuity(d1, d2):
    # on each circle boundary inside the domain, the formulas on either side agree
    half = d1 / 2
    checked = 0
    for ang in np.linspace(0.01, math.pi - 0.01, 199):
        # right circle boundary, in the upper half plane
        x = half + d2 * math.cos(ang)
        y = d2 * math.sin(ang)
        if abs(x) > half:
            continue  # part of the outer boundary, no membership switch
        f1, f2, f3 = (float(v) for v in f_p_branches(x, y, d1, d2))
        in_left = math.hypot(x + half, y) < d2
        assert abs((f2 if in_left else f1) - f3) <= 1e-9
        # mirrored point on the left circle
        g1, g2, g3 = (float(v) for v in f_p_branches(-x, y, d1, d2))
        assert abs((g2 if in_left else g1) - g3) <= 1e-9
        checked += 1
    assert checked > 0


@pytest.mark.parametrize(
    "y, d1, expected",
    [(0.0, 1.0, 0.5), (0.7, 1.0, 0.0), (-0.7, 1.0, 0.0), (0.35, 1.0, 1 / 3)],
)
def test_h_of_y_values(y, d1, expected):
    assert h_of_y(y, StepParams(d1, 0.7)) == pytest.approx(expected, abs=1e-15)


def test_h_of_y_rejects_out_of_band():
    with pytest.raises(ValueError):
        h_of_y(0.71, StepParams(1, 0.7))


@pytest.mark.parametrize("d1, d2", [(1.0, 0.7), (3.0, 1.0), (2.0, 2.0)])
def test_h_of_y_matches_numeric_inner_integral(d1, d2):
    rng = np.random.default_rng(int(d1 * 10 + d2))
    p = StepParams(d1, d2)
    for y in rng.uniform(-d2, d2, 50):
        closed = h_of_y(y, p)
        ours = inner_Ip(y, p).value
        ref = inner_integral_scipy(lambda x: float(f_p_array(x, y, d1, d2)), y, d1, d2)
        assert abs(ours - closed) <= 1e-7
        assert abs(ref - closed) <= 1e-7


@pytest.mark.parametrize(
    "d1, d2, expected",
    [(1, 0.7, 0.4456338), (3, 1, 1.9098593)],
)
def test_integral_Ip_closed_form(d1, d2, expected):
    assert integral_Ip(StepParams(d1, d2)) == pytest.approx(expected, abs=5e-8)
    assert integral_Ip(StepParams(d1, d2)) == integral_Ip(StepParams(d2, d1))
