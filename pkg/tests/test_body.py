import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from lls_tracking.body import (BodyState, PostureGains, control_cost, integrate_body,
                               posture_targets, torque, torque_coeffs)
from lls_tracking.errors import OutOfWindow
from lls_tracking.stance import Side, heading_update

I = 2.04e-7
T = 0.08


def test_gains_validate():
    with pytest.raises(ValueError):
        PostureGains(K4=0.0)
    with pytest.raises(ValueError):
        PostureGains(K5=1.5)


def test_torque_coeff_examples():
    assert torque_coeffs(BodyState(0.3, 0.0), BodyState(0.3, 0.0), T, I) == (0.0, 0.0)
    A1, A2 = torque_coeffs(BodyState(0.0, 0.0), BodyState(1.0, 0.0), T, I)
    assert A1 == pytest.approx(24 * I * I / T**3)
    assert A2 == pytest.approx(12 * I / T**2)
    with pytest.raises(ValueError):
        torque_coeffs(BodyState(), BodyState(), 0.0, I)


def test_torque_examples():
    assert torque(0.0, 3.0, 2.0, I) == 1.0
    assert torque(T, 0.0, 2.0, I, T) == 1.0
    A1 = 5e-6
    A2 = A1 * T / (2 * I)
    for t in np.linspace(0, T, 7):
        assert torque(t, A1, A2, I) == pytest.approx(-torque(T - t, A1, A2, I), abs=1e-12)
    with pytest.raises(OutOfWindow):
        torque(T * 1.01, A1, A2, I, T)


def test_integrate_body_free_rotation():
    b = integrate_body(BodyState(0.2, 1e-6), 0.0, 0.0, T, I)
    assert b.sigma == pytest.approx(0.2 + 1e-6 * T / I)
    assert b.p_sigma == 1e-6
    assert integrate_body(BodyState(0.2, 0.0), 0.0, 0.0, T, I) == BodyState(0.2, 0.0)


@given(st.floats(-3, 3), st.floats(-1e-5, 1e-5), st.floats(-3, 3), st.floats(-1e-5, 1e-5),
       st.floats(0.02, 0.2))
def test_landing_on_endpoints(s0, p0, s1, p1, T_):
    A1, A2 = torque_coeffs(BodyState(s0, p0), BodyState(s1, p1), T_, I)
    end = integrate_body(BodyState(s0, p0), A1, A2, T_, I)
    assert end.sigma == pytest.approx(s1, abs=1e-12)
    assert end.p_sigma == pytest.approx(p1, abs=1e-12 * max(abs(p1), I / T_))


def test_closed_form_matches_numeric_integration():
    rng = np.random.default_rng(0)
    for _ in range(10):
        b0 = BodyState(rng.uniform(-1, 1), rng.normal(0, 1e-6))
        b1 = BodyState(rng.uniform(-1, 1), rng.normal(0, 1e-6))
        A1, A2 = torque_coeffs(b0, b1, T, I)
        sol = solve_ivp(lambda t, y: [y[1] / I, torque(t, A1, A2, I)], (0, T),
                        [b0.sigma, b0.p_sigma], rtol=1e-12, atol=[1e-14, 1e-20], method="DOP853")
        end = integrate_body(b0, A1, A2, T, I)
        assert sol.y[0, -1] == pytest.approx(end.sigma, abs=1e-10)
        assert sol.y[1, -1] == pytest.approx(end.p_sigma, abs=1e-10 * I / T)


def test_control_cost_examples():
    assert control_cost(0.0, 0.0, T, I) == 0.0
    c = 3e-6
    assert control_cost(0.0, 2 * c, T, I) == pytest.approx(c * c * T)


def test_cost_minimal_against_endpoint_preserving_perturbations():
    rng = np.random.default_rng(1)
    x, w = np.polynomial.legendre.leggauss(12)
    t = 0.5 * T * (x + 1)
    w = 0.5 * T * w
    A1, A2 = torque_coeffs(BodyState(0.0, 1e-6), BodyState(0.4, -2e-6), T, I)
    tau = torque(t, A1, A2, I)
    J = control_cost(A1, A2, T, I)
    assert float(w @ tau**2) == pytest.approx(J, rel=1e-12)
    for _ in range(20):
        # cubic with zero integral and zero first moment keeps both endpoints
        c = rng.normal(size=2) * np.abs(tau).max()
        P2 = np.polynomial.legendre.Legendre.basis(2, domain=[0, T])
        P3 = np.polynomial.legendre.Legendre.basis(3, domain=[0, T])
        d = c[0] * P2(t) + c[1] * P3(t)
        assert abs(w @ d) < 1e-12 * T * np.abs(d).max()
        assert abs(w @ (d * t)) < 1e-12 * T * T * np.abs(d).max()
        assert float(w @ (tau + d) ** 2) > J


def test_deadbeat_and_fixed_gait():
    g = PostureGains(C1=0.2, C2=3e-7, K4=1.0, K5=1.0)
    for side, sgn in ((Side.RIGHT, -1), (Side.LEFT, 1)):
        tgt = posture_targets(BodyState(1.3, 5e-6), 0.4, g, 0.7, 0.9, side)
        h1 = heading_update(0.4, 0.7, 0.9, side)
        assert tgt.sigma - h1 == pytest.approx(sgn * 0.2, abs=1e-15)
        assert tgt.p_sigma == pytest.approx(sgn * 3e-7, abs=1e-21)
    # converged alternating gait maps onto itself
    g = PostureGains(C1=0.2, C2=3e-7, K4=0.4, K5=0.7)
    tgt = posture_targets(BodyState(0.4 + 0.2, 3e-7), 0.4, g, 0.7, 0.9, Side.RIGHT)
    assert tgt.sigma - heading_update(0.4, 0.7, 0.9, Side.RIGHT) == pytest.approx(-0.2)
    assert tgt.p_sigma == pytest.approx(-3e-7)


def test_recursion_identity_and_geometric_convergence():
    rng = np.random.default_rng(2)
    g = PostureGains(C1=0.15, C2=2e-7, K4=0.3, K5=0.6)
    body, heading = BodyState(1.0, 4e-6), 0.2
    side = Side.RIGHT
    errs = []
    for k in range(40):
        a, sw = rng.uniform(0.5, 1.0), rng.uniform(0.6, 1.1)
        tgt = posture_targets(body, heading, g, a, sw, side)
        h1 = heading + int(side) * (math.pi - sw - 2 * a)
        assert h1 == pytest.approx(heading_update(heading, a, sw, side))
        eps = int(side)
        # the target relative angle contracts toward -eps*C1 at rate 1 - K4
        rel0, rel1 = body.sigma - heading, tgt.sigma - h1
        assert rel1 + eps * g.C1 == pytest.approx((1 - g.K4) * (rel0 - eps * g.C1), abs=1e-14)
        assert tgt.p_sigma + eps * g.C2 == pytest.approx((1 - g.K5) * (body.p_sigma - eps * g.C2), abs=1e-20)
        errs.append((abs(rel1 + eps * g.C1), abs(tgt.p_sigma + eps * g.C2)))
        body, heading, side = tgt, h1, side.other
    assert errs[-1][0] < 1e-6 and errs[-1][1] < 1e-12
