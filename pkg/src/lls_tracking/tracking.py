"""Discrete distance-feedback law for following a boundary at a fixed offset.

All angles here are *steering* angles: positive means the chord is tilted
toward the boundary (see ``ClosestFrame.steering_angle``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import AssumptionViolated, NoSolution, StepTooLarge
from .geometry import SINE_SLACK, ClosestFrame, delta_from_theta

__all__ = [
    "TrackingGains",
    "TrackingState",
    "feasible_f_intervals",
    "f_is_feasible",
    "select_gain",
    "steering_sine",
    "solve_theta",
    "step_distance_update",
    "delta_from_theta",
    "simplified_update",
    "simplified_steering_sine",
    "steering_command",
]

GAIN_SAFETY = 0.99


@dataclass(frozen=True)
class TrackingGains:
    K: float = 0.5
    rho_c: float = 0.03
    adaptive: bool = True

    def __post_init__(self):
        if not 0.0 < self.K < 2.0:
            raise ValueError(f"gain K must lie in (0, 2), got {self.K}")
        if self.rho_c < 0.0:
            raise ValueError("rho_c must be non-negative")


@dataclass(frozen=True)
class TrackingState:
    rho: float
    lam: float
    theta: float
    f: float
    step: float
    K: float = math.nan
    sin_theta: float = math.nan

    @property
    def feasible(self) -> bool:
        return abs(self.sin_theta) <= 1.0 + SINE_SLACK


def feasible_f_intervals(q: float, lam: float) -> list[tuple[float, float]]:
    """Closed intervals of distance increments ``f`` for which a steering angle exists."""
    if q <= 0:
        raise ValueError("q must be positive")
    if math.isinf(lam):
        return [(-q, q)]
    return [
        (-(2.0 * lam + q), min(-q, q - 2.0 * lam)),
        (max(-q, q - 2.0 * lam), q),
    ]


def f_is_feasible(f: float, q: float, lam: float, tol: float = 0.0) -> bool:
    return any(lo - tol <= f <= hi + tol for lo, hi in feasible_f_intervals(q, lam))


def select_gain(rho_err: float, q: float, lam: float, K_nominal: float,
                safety: float = GAIN_SAFETY) -> float:
    """Largest gain up to ``K_nominal`` that keeps the steering equation solvable."""
    if not q < 2.0 * lam:
        raise StepTooLarge(f"step {q} must be shorter than 2*lambda = {2.0 * lam}")
    e = abs(rho_err)
    margin = 2.0 * lam - q
    if e < 0.5 * min(q, margin):
        return K_nominal
    return min(K_nominal, safety * q / e, safety * margin / e)


def steering_sine(f: float, q: float, lam: float) -> float:
    """Right-hand side of the steering equation; may fall outside [-1, 1]."""
    if math.isinf(lam):
        return -f / q
    return q / (2.0 * lam) - f / q - f * f / (2.0 * lam * q)


def solve_theta(f: float, q: float, lam: float) -> float:
    """Steering angle in [-pi/2, pi/2] that changes the offset by exactly ``f``."""
    s = steering_sine(f, q, lam)
    if abs(s) > 1.0 + SINE_SLACK:
        raise NoSolution(f"sin(theta) = {s:.6g} for f={f:.6g}, q={q:.6g}, lambda={lam:.6g}")
    return math.asin(max(-1.0, min(1.0, s)))


def step_distance_update(rho: float, theta: float, q: float, kappa: float) -> float:
    """Offset after one chord of length ``q`` at steering angle ``theta`` (cosine law)."""
    if kappa == 0.0:
        return rho - q * math.sin(theta)
    lam = rho + 1.0 / kappa
    sq = lam * lam - 2.0 * lam * q * math.sin(theta) + q * q
    root = math.sqrt(max(sq, 0.0))
    # sign(lam) * (root - |lam|) without cancellation
    dlam = math.copysign(1.0, lam) * (q * q - 2.0 * lam * q * math.sin(theta)) / (root + abs(lam))
    return rho + dlam


def simplified_update(rho: float, theta: float, q: float, lam: float, rho_c: float,
                      max_ratio: float = 0.1) -> float:
    """Small-step model of the offset error: returns ``rho_next - rho_c``."""
    if not math.isinf(lam) and q >= max_ratio * abs(lam):
        warnings.warn(f"step {q:.4g} is not small against lambda {lam:.4g}",
                      AssumptionViolated, stacklevel=2)
    curv = 0.0 if math.isinf(lam) else q * q / (2.0 * lam)
    return (rho - rho_c) + curv - q * math.sin(theta)


def simplified_steering_sine(f: float, q: float, lam: float) -> float:
    """Desired ``sin(theta)`` under the small-step model (the f**2 term dropped)."""
    curv = 0.0 if math.isinf(lam) else q / (2.0 * lam)
    return curv - f / q


def steering_command(frame: ClosestFrame, q: float, gains: TrackingGains,
                     model: str = "exact") -> TrackingState:
    """Gain, distance increment and desired steering angle for the current frame.

    The returned ``sin_theta`` may exceed 1 in magnitude when the gain is not
    adaptive; ``theta`` is then the clipped angle and ``feasible`` is False.
    """
    err = frame.rho - gains.rho_c
    lam = frame.lam
    K = select_gain(err, q, lam, gains.K) if gains.adaptive else gains.K
    f = -K * err
    if model == "exact":
        s = steering_sine(f, q, lam)
    elif model == "simplified":
        s = simplified_steering_sine(f, q, lam)
    else:
        raise ValueError(f"unknown model {model!r}")
    theta = math.asin(max(-1.0, min(1.0, s)))
    return TrackingState(frame.rho, lam, theta, f, q, K, s)
