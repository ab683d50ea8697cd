import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lls_tracking.errors import DegenerateQuery, DegeneratePoints, InfeasibleGeometry
from lls_tracking.geometry import (Circle, ClosestFrame, Line, ParametricCurve, advance_zeta,
                                   bearing_theta, closest_frame, delta_from_theta,
                                   estimate_curvature, normalize_angle, unit)

angles = st.floats(-50.0, 50.0, allow_nan=False)


@given(angles)
def test_normalize_angle_range(a):
    b = normalize_angle(a)
    assert -math.pi < b <= math.pi
    assert math.isclose(math.cos(a), math.cos(b), abs_tol=1e-12)
    assert math.isclose(math.sin(a), math.sin(b), abs_tol=1e-12)


def test_normalize_angle_pi_maps_to_pi():
    assert normalize_angle(-math.pi) == math.pi
    assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)


def test_circle_frame_start_point():
    f = closest_frame(Circle((0, 0), 0.02), (0.1, 0.0))
    assert f.rho == pytest.approx(0.08, abs=1e-15)
    assert f.zeta == pytest.approx(math.pi / 2)
    assert f.kappa == pytest.approx(50.0)
    assert f.lam == pytest.approx(0.1)


def test_line_frame_axis_aligned():
    f = closest_frame(Line((0, 0), (1, 0)), (0.0, 1.0))
    assert (f.rho, f.zeta, f.kappa) == (1.0, 0.0, 0.0)
    assert math.isinf(f.lam)


def test_circle_frame_collinear():
    f = closest_frame(Circle((0, 0), 1.0), (2.0, 0.0))
    np.testing.assert_allclose(f.r_c, [1.0, 0.0])
    assert f.rho == 1.0 and f.lam == 2.0


def test_circle_centre_is_degenerate():
    with pytest.raises(DegenerateQuery):
        Circle((1, 2), 0.5).closest_frame((1, 2))


@given(st.floats(0.01, 2.0), st.floats(-math.pi, math.pi), st.floats(1.001, 20.0),
       st.sampled_from(["ccw", "cw"]))
def test_circle_exterior_distance_identity(R, ang, scale, direction):
    c = np.array([0.3, -0.2])
    r = c + R * scale * unit(ang)
    f = Circle(c, R, direction).closest_frame(r)
    assert abs(np.linalg.norm(r - f.r_c) + R - np.linalg.norm(r - c)) <= 1e-12
    assert abs(float((r - f.r_c) @ f.tangent)) <= 1e-12
    assert f.lam > 0


def test_circle_interior_is_concave():
    f = Circle((0, 0), 1.0).closest_frame((0.5, 0.0))
    assert f.rho == pytest.approx(0.5) and f.kappa == -1.0
    assert f.lam == pytest.approx(-0.5)


def test_bearing_examples():
    f = ClosestFrame(np.zeros(2), 0.1, 0.3, 0.0)
    assert bearing_theta(f.tangent, f) == pytest.approx(0.0, abs=1e-15)
    assert bearing_theta(-f.normal, f) == pytest.approx(math.pi / 2)
    g = ClosestFrame(np.zeros(2), 0.1, math.pi / 2, 0.0)
    assert bearing_theta(unit(math.pi / 3), g) == pytest.approx(math.pi / 6)


@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.sampled_from([1, -1]))
def test_delta_theta_round_trip(zeta, q_ang, side):
    f = ClosestFrame(np.zeros(2), 0.1, zeta, 1.0, side)
    th = f.steering_angle(unit(q_ang))
    back = f.chord_heading(th)
    assert abs(normalize_angle(back - q_ang)) <= 1e-12


def test_delta_from_theta_examples():
    assert delta_from_theta(0.7, 0.0) == pytest.approx(0.7)
    assert delta_from_theta(0.0, math.pi / 4) == pytest.approx(-math.pi / 4)
    assert delta_from_theta(math.pi / 2, math.pi / 6) == pytest.approx(math.pi / 3)


def _circumcircle(p1, p2, p3):
    # solve |p - c|^2 equal for the three points
    A = 2 * np.array([p2 - p1, p3 - p1])
    rhs = np.array([p2 @ p2 - p1 @ p1, p3 @ p3 - p1 @ p1])
    c = np.linalg.solve(A, rhs)
    return c, np.linalg.norm(p1 - c)


def test_estimate_curvature_examples():
    pts = [unit(a) for a in (0.1, 1.0, 2.5)]
    assert estimate_curvature(*pts) == pytest.approx(1.0)
    assert estimate_curvature((0, 0), (1, 1), (3, 3)) == 0.0
    p = [np.array(v, float) for v in [(0, 0), (1, 0.1), (2, 0)]]
    _, R = _circumcircle(*p)
    # clockwise ordering gives negative curvature
    assert estimate_curvature(*p) == pytest.approx(-1.0 / R, rel=1e-12)
    with pytest.raises(DegeneratePoints):
        estimate_curvature((0, 0), (0, 0), (1, 1))


@settings(max_examples=50)
@given(st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_estimate_curvature_rigid_invariance(rot, tx, ty):
    p = [np.array(v) for v in [(0.0, 0.0), (1.0, 0.3), (2.0, -0.1)]]
    k0 = estimate_curvature(*p)
    c, s = math.cos(rot), math.sin(rot)
    R = np.array([[c, -s], [s, c]])
    moved = [R @ x + (tx, ty) for x in p]
    assert estimate_curvature(*moved) == pytest.approx(k0, rel=1e-10)


def test_advance_zeta_examples():
    line = ClosestFrame(np.zeros(2), 0.03, 0.0, 0.0)
    assert advance_zeta(line, 0.01, 0.2, 0.0) == 0.0
    f = ClosestFrame(np.zeros(2), 0.03, 0.0, 50.0)
    assert advance_zeta(f, 0.01, math.pi / 2, 0.0) == pytest.approx(0.0, abs=1e-15)
    g = ClosestFrame(np.zeros(2), 0.05 - 1 / 50.0, 0.0, 50.0)
    assert advance_zeta(g, 0.01, 0.0, 0.0) == pytest.approx(math.asin(0.2))
    with pytest.raises(InfeasibleGeometry):
        advance_zeta(g, 0.2, 0.0, 0.0)


@pytest.mark.parametrize("direction", ["ccw", "cw"])
def test_advance_zeta_matches_recomputed_frame(direction):
    circle = Circle((0.1, 0.2), 0.05, direction)
    r = np.array([0.1 + 0.08, 0.2])
    f = circle.closest_frame(r)
    q = 0.015
    theta = math.asin(q / (2 * f.lam))
    r_next = r + q * unit(f.chord_heading(theta))
    f_next = circle.closest_frame(r_next)
    gamma = advance_zeta(f, q, theta, 0.0)
    assert f_next.rho == pytest.approx(f.rho, abs=1e-14)
    assert abs(normalize_angle(f_next.zeta - f.zeta) - (-f.side * gamma)) <= 1e-10


def _circle_as_parametric(R, direction):
    sgn = 1.0 if direction == "ccw" else -1.0
    return ParametricCurve(
        lambda s: R * unit(sgn * s / R),
        lambda s: sgn * unit(sgn * s / R + math.pi / 2),
        lambda s: sgn / R,
        2 * math.pi * R,
    )


@pytest.mark.parametrize("direction", ["ccw", "cw"])
@pytest.mark.parametrize("point", [(0.1, 0.0), (0.03, -0.05), (0.01, 0.005)])
def test_parametric_matches_circle(direction, point):
    R = 0.02
    a = Circle((0, 0), R, direction).closest_frame(point)
    b = _circle_as_parametric(R, direction).closest_frame(point)
    assert b.rho == pytest.approx(a.rho, abs=1e-10)
    assert b.kappa == pytest.approx(a.kappa, rel=1e-12)
    assert b.side == a.side
    assert abs(normalize_angle(b.zeta - a.zeta)) <= 1e-8
