"""Stance-phase mechanics of the lateral leg spring with coincident COM and COP.

The leg is a massless linear spring with potential ``V = b * (eta - eta_td)**2``
(no factor 1/2). A stance starts with the leg at its touchdown length
``eta_td`` and ends when the leg returns to that length.

Side convention: on a right stance the foot lies clockwise of the velocity,
the leg placement angle ``alpha`` is measured from the COM-to-foot direction
to the velocity, and the chord leaves the velocity rotated counter-clockwise by
``pi/2 - alpha - sweep/2``. A left stance is the mirror image.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationDiverged, MaxStepExceeded, NoCompression
from .geometry import normalize_angle, unit
from .quadrature import integrate


class Side(enum.IntEnum):
    RIGHT = 1
    LEFT = -1

    @property
    def other(self) -> "Side":
        return Side(-self)

    @classmethod
    def parse(cls, value) -> "Side":
        if isinstance(value, Side):
            return value
        key = str(value).strip().lower()
        if key in ("r", "right", "1", "+1"):
            return cls.RIGHT
        if key in ("l", "left", "-1"):
            return cls.LEFT
        raise ValueError(f"unknown stance side {value!r}")


@dataclass(frozen=True)
class LegParams:
    m: float = 2.5e-3
    I: float = 2.04e-7
    eta0: float = 0.017
    alpha_min: float = math.pi / 6
    alpha_max: float = math.pi / 3

    def __post_init__(self):
        if min(self.m, self.I, self.eta0) <= 0:
            raise ValueError("m, I and eta0 must be positive")
        if not 0.0 < self.alpha_min < self.alpha_max < math.pi / 2:
            raise ValueError("leg angle bounds must satisfy 0 < alpha_min < alpha_max < pi/2")


@dataclass(frozen=True)
class StancePlan:
    side: Side
    alpha: float
    b: float
    eta_td: float
    sweep: float
    chord: float
    duration: float = math.nan

    @classmethod
    def from_leg(cls, side, alpha: float, b: float, eta_td: float, v: float, m: float):
        phi, T, _ = stance_geometry(alpha, eta_td, b, v, m)
        return cls(Side.parse(side), alpha, b, eta_td, phi, chord_length(eta_td, phi), T)


@dataclass(frozen=True)
class ComState:
    r: np.ndarray
    v: float
    heading: float
    side_next: Side = Side.RIGHT

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        if self.v <= 0:
            raise ValueError("speed must be positive")


@dataclass
class StanceOutcome:
    next: ComState
    q_vec: np.ndarray
    theta_achieved: float
    energy_drift: float
    p_psi_drift: float
    mirror_error: float
    sweep: float
    duration: float
    eta_min: float
    exit_heading: float
    exit_speed: float = math.nan
    trajectory: np.ndarray | None = field(default=None, repr=False)


def potential(eta, b: float, eta_td: float):
    return b * (eta - eta_td) ** 2


def _radial_poly(E: float, p_psi: float, b: float, eta_td: float, m: float) -> np.ndarray:
    """Coefficients (highest first) of eta**2 * (2E - p**2/(m eta**2) - 2V(eta))."""
    return np.array([
        -2.0 * b,
        4.0 * b * eta_td,
        2.0 * E - 2.0 * b * eta_td * eta_td,
        0.0,
        -p_psi * p_psi / m,
    ])


def _bisect(h, lo: float, hi: float) -> float:
    """Bisect a sign change of ``h`` (h(lo) < 0 < h(hi)) down to adjacent floats."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi if abs(h(hi)) < abs(h(lo)) else lo
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid


def eta_min(E: float, p_psi: float, b: float, eta_td: float, m: float) -> float:
    """Shortest leg length reached during the stance (radial turning point)."""
    coeffs = _radial_poly(E, p_psi, b, eta_td, m)
    h = lambda x: float(np.polyval(coeffs, x))  # noqa: E731
    if h(eta_td) <= 0.0:
        raise NoCompression("velocity does not point into the leg at touchdown")
    roots = np.roots(coeffs)
    real = sorted(
        (z.real for z in roots if abs(z.imag) <= 1e-9 * eta_td and 0.0 < z.real < eta_td),
        reverse=True,
    )
    for z in real:
        lo, hi = z * (1 - 1e-7), min(z * (1 + 1e-7), eta_td)
        if h(lo) < 0.0 < h(hi):
            return _bisect(h, lo, hi)
    # Fall back to a downward scan for the first sign change.
    grid = np.linspace(eta_td, 0.0, 4097)[1:-1]
    vals = np.polyval(coeffs, grid)
    neg = np.nonzero(vals < 0.0)[0]
    if len(neg) == 0:
        raise NoCompression("leg length has no turning point above zero")
    j = neg[0]
    hi = eta_td if j == 0 else grid[j - 1]
    return _bisect(h, grid[j], hi)


@lru_cache(maxsize=4096)
def stance_geometry(alpha: float, eta_td: float, b: float, v: float, m: float,
                    tol: float = 1e-10) -> tuple[float, float, float]:
    """Sweep angle, stance duration and minimum leg length by quadrature.

    Substituting ``eta = eta_min + s**2`` and dividing the radial polynomial by
    ``(eta - eta_min)`` removes the inverse square-root singularity at the
    turning point, leaving smooth integrands in ``s``.
    """
    if not 0.0 <= alpha < math.pi / 2:
        raise NoCompression(f"alpha={alpha} gives no compression")
    E = 0.5 * m * v * v
    p = m * eta_td * v * math.sin(alpha)
    e_min = eta_min(E, p, b, eta_td, m)
    c = _radial_poly(E, p, b, eta_td, m)
    # synthetic division by (eta - e_min)
    q3 = c[0]
    q2 = c[1] + e_min * q3
    q1 = c[2] + e_min * q2
    q0 = c[3] + e_min * q1
    sm = math.sqrt(m)

    def cubic(eta):
        return ((q3 * eta + q2) * eta + q1) * eta + q0

    def dpsi(s):
        eta = e_min + s * s
        return 2.0 * p / (sm * eta * np.sqrt(cubic(eta)))

    def dt(s):
        eta = e_min + s * s
        return 2.0 * sm * eta / np.sqrt(cubic(eta))

    S = math.sqrt(eta_td - e_min)
    half_phi, _ = integrate(dpsi, 0.0, S, epsabs=tol / 2, epsrel=tol / 2)
    half_T, _ = integrate(dt, 0.0, S, epsabs=tol / 2, epsrel=tol / 2)
    return 2.0 * half_phi, 2.0 * half_T, e_min


def sweep_angle(alpha: float, eta_td: float, b: float, v: float, m: float) -> float:
    return stance_geometry(alpha, eta_td, b, v, m)[0]


def stance_duration(alpha: float, eta_td: float, b: float, v: float, m: float) -> float:
    return stance_geometry(alpha, eta_td, b, v, m)[1]


def chord_length(eta_td: float, sweep: float) -> float:
    return 2.0 * eta_td * math.sin(0.5 * sweep)


def chord_offset(alpha: float, sweep: float) -> float:
    """Angle from the velocity to the chord on a right stance."""
    return 0.5 * math.pi - alpha - 0.5 * sweep


def heading_update(heading: float, alpha: float, sweep: float, side) -> float:
    """Velocity heading after the stance (not wrapped)."""
    return heading + 2.0 * int(Side.parse(side)) * chord_offset(alpha, sweep)


def foot_position(state: ComState, alpha: float, eta_td: float, side) -> np.ndarray:
    leg_dir = state.heading - int(Side.parse(side)) * alpha
    return state.r + eta_td * unit(leg_dir)


def _ode_stance(x0, v0, b, eta_td, m, rtol, atol, t_max, dense):
    def rhs(t, y):
        x, yy, vx, vy = y
        r = math.hypot(x, yy)
        a = -2.0 * b * (r - eta_td) / (m * r)
        return [vx, vy, a * x, a * yy]

    def leaves(t, y):
        return math.hypot(y[0], y[1]) - eta_td

    def turning(t, y):
        return y[0] * y[2] + y[1] * y[3]

    leaves.terminal = True
    leaves.direction = 1
    turning.direction = 1
    y0 = [x0[0], x0[1], v0[0], v0[1]]
    sol = solve_ivp(rhs, (0.0, t_max), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=(leaves, turning), dense_output=dense)
    if sol.status == -1 or not np.all(np.isfinite(sol.y)):
        raise IntegrationDiverged(sol.message)
    if len(sol.t_events[0]) == 0:
        raise MaxStepExceeded(f"leg did not return to touchdown length within {t_max} s")
    return sol


def ode_stance(alpha: float, eta_td: float, b: float, v: float, m: float,
               rtol: float = 1e-12, atol: float = 1e-16, t_max: float | None = None,
               dense: bool = False) -> dict:
    """Integrate one right stance in Cartesian coordinates about the foot.

    Velocity starts along +x; returns sweep, duration, minimum leg length,
    chord vector, exit velocity and conservation drifts.
    """
    leg = unit(-alpha)
    x0 = -eta_td * leg
    v0 = np.array([v, 0.0])
    if t_max is None:
        t_max = 200.0 * eta_td / v
    sol = _ode_stance(x0, v0, b, eta_td, m, rtol, atol, t_max, dense)
    y_end = sol.y_events[0][0]
    t_end = float(sol.t_events[0][0])
    ys = np.column_stack([sol.y, y_end])
    pos, vel = ys[:2], ys[2:]
    radius = np.hypot(pos[0], pos[1])
    energy = 0.5 * m * (vel[0] ** 2 + vel[1] ** 2) + b * (radius - eta_td) ** 2
    ang_mom = m * (pos[0] * vel[1] - pos[1] * vel[0])
    E0, L0 = energy[0], ang_mom[0]
    x_end = y_end[:2]
    sweep = abs(math.atan2(x0[0] * x_end[1] - x0[1] * x_end[0], float(x0 @ x_end)))
    e_min = (math.hypot(*sol.y_events[1][0][:2]) if len(sol.y_events[1]) else float(radius.min()))
    return {
        "sweep": sweep,
        "duration": t_end,
        "eta_min": e_min,
        "q_vec": x_end - x0,
        "v_exit": y_end[2:],
        "energy_drift": float(np.max(np.abs(energy - E0)) / E0),
        "p_psi_drift": float(np.max(np.abs(ang_mom - L0)) / abs(L0)) if L0 else 0.0,
        "solution": sol,
    }


def integrate_stance(state: ComState, plan: StancePlan, params: LegParams | None = None,
                     frame=None, rtol: float = 1e-12, atol: float = 1e-16,
                     sample: int = 0) -> StanceOutcome:
    """Integrate the stance described by ``plan`` from touchdown state ``state``.

    The chord comes from the integrated exit point; the next heading is the
    reflection of the entry velocity about the chord, and ``mirror_error``
    records how far the integrated exit velocity is from that reflection.
    """
    side = Side.parse(plan.side)
    m = params.m if params is not None else None
    if m is None:
        raise ValueError("LegParams required for the mass")
    res = ode_stance(plan.alpha, plan.eta_td, plan.b, state.v, m, rtol=rtol, atol=atol,
                     dense=sample > 0)
    # Right-stance result is computed with the velocity along +x; rotate and mirror.
    c, s = math.cos(state.heading), math.sin(state.heading)
    rot = np.array([[c, -s], [s, c]])
    mirror = np.diag([1.0, float(side)])
    to_lab = rot @ mirror
    q_vec = to_lab @ res["q_vec"]
    v_exit = to_lab @ res["v_exit"]
    chord_dir = math.atan2(q_vec[1], q_vec[0])
    next_heading = state.heading + 2.0 * normalize_angle(chord_dir - state.heading)
    exit_heading = math.atan2(v_exit[1], v_exit[0])
    mirror_error = abs(normalize_angle(exit_heading - next_heading))
    theta = frame.steering_angle(q_vec) if frame is not None else math.nan
    traj = None
    if sample > 0:
        sol = res["solution"]
        ts = np.linspace(0.0, res["duration"], sample)
        ys = sol.sol(ts)
        pts = (to_lab @ ys[:2]).T + foot_position(state, plan.alpha, plan.eta_td, side)
        traj = np.column_stack([ts, pts])
    nxt = ComState(state.r + q_vec, state.v, next_heading, side.other)
    return StanceOutcome(
        next=nxt,
        q_vec=q_vec,
        theta_achieved=theta,
        energy_drift=res["energy_drift"],
        p_psi_drift=res["p_psi_drift"],
        mirror_error=mirror_error,
        sweep=res["sweep"],
        duration=res["duration"],
        eta_min=res["eta_min"],
        exit_heading=exit_heading,
        exit_speed=float(np.hypot(*v_exit)),
        trajectory=traj,
    )


def theta_difference_check(theta_k: float, theta_k1: float, alpha_k: float, alpha_k1: float,
                           sweep_k: float, sweep_k1: float, dzeta: float, first_side) -> float:
    """Residual of the consecutive-stance bearing relation.

    ``theta`` are bearings measured clockwise from the tangent (``bearing_theta``)
    and ``dzeta`` is the signed lab rotation of the tangent between the stances.
    """
    eps = int(Side.parse(first_side))
    return normalize_angle(
        (theta_k1 - theta_k) - dzeta + eps * ((alpha_k1 - alpha_k) + 0.5 * (sweep_k1 - sweep_k))
    )


__all__ = [
    "Side", "LegParams", "StancePlan", "ComState", "StanceOutcome", "potential", "eta_min",
    "stance_geometry", "sweep_angle", "stance_duration", "chord_length", "chord_offset",
    "heading_update", "foot_position", "ode_stance", "integrate_stance",
    "theta_difference_check", "replace",
]
