"""Body-orientation regulation: per-stance posture targets and the
minimum-effort torque that reaches them.

The body obeys ``sigma' = p_sigma / I`` and ``p_sigma' = tau``. Over a stance of
duration ``T`` the torque minimising the integral of ``tau**2`` is affine in
time, ``tau(t) = (A2 - A1 t / I) / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfWindow
from .stance import Side


@dataclass(frozen=True)
class BodyState:
    sigma: float = 0.0
    p_sigma: float = 0.0


@dataclass(frozen=True)
class PostureGains:
    C1: float = 0.0
    C2: float = 0.0
    K4: float = 0.5
    K5: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.K4 <= 1.0 and 0.0 < self.K5 <= 1.0):
            raise ValueError("posture gains K4, K5 must lie in (0, 1]")


def posture_targets(body: BodyState, heading: float, gains: PostureGains, alpha: float,
                    sweep: float, side) -> BodyState:
    """Body state to reach by the end of the stance.

    A right stance drives ``(sigma - heading, p_sigma)`` toward ``(-C1, -C2)``
    and a left stance toward ``(+C1, +C2)``, contracting the error by
    ``1 - K4`` and ``1 - K5`` respectively. ``sigma`` is not wrapped.
    """
    eps = int(Side.parse(side))
    heading_next = heading + eps * (math.pi - sweep - 2.0 * alpha)
    rel = body.sigma - heading
    rel_next = -eps * gains.C1 + (1.0 - gains.K4) * (rel - eps * gains.C1)
    p_next = -eps * gains.C2 + (1.0 - gains.K5) * (body.p_sigma - eps * gains.C2)
    return BodyState(heading_next + rel_next, p_next)


def torque_coeffs(body: BodyState, target: BodyState, T: float, I: float) -> tuple[float, float]:
    if T <= 0:
        raise ValueError("stance duration must be positive")
    ds = target.sigma - body.sigma
    p0, p1 = body.p_sigma, target.p_sigma
    A1 = 24.0 * I * I * ds / T**3 - 12.0 * I * (p1 + p0) / T**2
    A2 = 12.0 * I * ds / T**2 - 4.0 * p1 / T - 8.0 * p0 / T
    return A1, A2


def torque(t, A1: float, A2: float, I: float, T: float | None = None):
    if T is not None and not (0.0 <= t <= T):
        raise OutOfWindow(f"t={t} outside [0, {T}]")
    return 0.5 * (A2 - A1 * t / I)


def integrate_body(body: BodyState, A1: float, A2: float, T: float, I: float) -> BodyState:
    """Closed-form body state after applying the affine torque for ``T`` seconds."""
    p = body.p_sigma + 0.5 * A2 * T - 0.25 * A1 * T * T / I
    sigma = (body.sigma + body.p_sigma * T / I + A2 * T * T / (4.0 * I)
             - A1 * T**3 / (12.0 * I * I))
    return BodyState(sigma, p)


def control_cost(A1: float, A2: float, T: float, I: float) -> float:
    """Integral of ``tau**2`` over [0, T]."""
    c = A1 / I
    return 0.25 * (A2 * A2 * T - A2 * c * T * T + c * c * T**3 / 3.0)

