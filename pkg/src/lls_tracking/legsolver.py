"""Per-stance leg synthesis: chord/spring relations, inverse method, cones and
the constrained approximation fallback."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConeEmpty, NoCompression, NoConstrainedSolution, Unachievable
from .geometry import ClosestFrame, normalize_angle
from .stance import ComState, LegParams, Side, StancePlan, chord_length, chord_offset, sweep_angle
from .tracking import TrackingGains, steering_command

N_SEEDS = 64
ALPHA_TOL = 1e-12


def q_of_alpha(alpha: float, eta_td: float, b: float, v: float, m: float) -> float:
    return chord_length(eta_td, sweep_angle(alpha, eta_td, b, v, m))


def max_chord(alpha: float, eta_td: float) -> float:
    """Supremum of the chord as the spring softens (straight-line pass)."""
    return 2.0 * eta_td * math.cos(alpha)


def constant_q_sweep(q: float, eta_td: float) -> float:
    """Sweep angle pinned by holding the chord at ``q``."""
    if not 0.0 < q < 2.0 * eta_td:
        raise Unachievable(f"chord {q} outside (0, 2*eta_td)")
    return 2.0 * math.asin(q / (2.0 * eta_td))


@lru_cache(maxsize=4096)
def b_for_q(alpha: float, q_target: float, eta_td: float, v: float, m: float,
            rtol: float = 1e-12) -> float:
    """Spring constant that makes the stance chord equal ``q_target``.

    The chord shrinks monotonically as the spring stiffens, so the root is
    bracketed in ``log b`` and refined with Brent's method.
    """
    if not 0.0 < q_target < max_chord(alpha, eta_td):
        raise Unachievable(
            f"chord {q_target:.6g} not reachable at alpha={alpha:.6g} "
            f"(supremum {max_chord(alpha, eta_td):.6g})"
        )

    def resid(logb):
        return q_of_alpha(alpha, eta_td, math.exp(logb), v, m) - q_target

    lo = hi = 0.0
    r = resid(0.0)
    if r > 0:
        while r > 0:
            hi += 1.0
            if hi > 60:
                raise Unachievable("chord stays above target for any spring constant")
            r = resid(hi)
        lo = hi - 1.0
    else:
        while r <= 0:
            lo -= 1.0
            if lo < -60:
                raise Unachievable("chord stays below target for any spring constant")
            r = resid(lo)
        hi = lo + 1.0
    root = brentq(resid, lo, hi, xtol=rtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(root)


def min_turn_radius(q: float, alpha_min: float, alpha_max: float) -> float:
    """Smallest distance to the centre of curvature a steady gait can follow."""
    return q / (2.0 * math.sin(0.5 * (alpha_max - alpha_min)))


def turn_angle(q: float, lam: float) -> float:
    """Centre angle subtended by one chord when running parallel to the curve."""
    if math.isinf(lam):
        return 0.0
    return 2.0 * math.asin(min(1.0, q / (2.0 * lam)))


@dataclass(frozen=True)
class Cone:
    v_ref: float
    side: Side
    alpha_range: tuple[float, float]
    q: float
    sweep: float
    gamma: float = 0.0

    def chord_heading(self, alpha: float) -> float:
        return self.v_ref + int(self.side) * chord_offset(alpha, self.sweep)

    @property
    def edges(self) -> tuple[float, float]:
        return tuple(normalize_angle(self.chord_heading(a)) for a in self.alpha_range)

    @property
    def mid_alpha(self) -> float:
        return 0.5 * (self.alpha_range[0] + self.alpha_range[1])

    def contains(self, alpha: float) -> bool:
        lo, hi = self.alpha_range
        return lo - ALPHA_TOL <= alpha <= hi + ALPHA_TOL

    def reflect(self, chord_heading: float) -> "Cone":
        """Cone of the next stance after a chord along ``chord_heading``."""
        v_next = self.v_ref + 2.0 * normalize_angle(chord_heading - self.v_ref)
        return Cone(v_next, self.side.other, self.alpha_range, self.q, self.sweep, self.gamma)

    def sub_cones(self) -> tuple["Cone", "Cone"]:
        lo, hi = self.alpha_range
        if self.gamma >= hi - lo:
            raise ConeEmpty(f"turn angle {self.gamma:.4g} exceeds leg range {hi - lo:.4g}")
        a = Cone(self.v_ref, self.side, (lo, hi - self.gamma), self.q, self.sweep, self.gamma)
        b = Cone(self.v_ref, self.side, (lo + self.gamma, hi), self.q, self.sweep, self.gamma)
        return a, b


def build_cones(state: ComState, params: LegParams, q: float, lam: float = math.inf,
                eta_td: float | None = None) -> tuple[Cone, tuple[Cone, Cone]]:
    eta_td = params.eta0 if eta_td is None else eta_td
    cone = Cone(state.heading, Side.parse(state.side_next), (params.alpha_min, params.alpha_max),
                q, constant_q_sweep(q, eta_td), turn_angle(q, lam))
    return cone, cone.sub_cones()


def preferred_sub_cone(cone: Cone, frame_side: int) -> Cone:
    """Sub-cone used by a steady gait around a convex curve.

    ``frame_side = -1`` is travel with the curve on the runner's left
    (counter-clockwise around a convex boundary): right stances then use the
    lower sub-cone and left stances the upper one.
    """
    a, b = cone.sub_cones()
    return a if int(cone.side) * frame_side < 0 else b


def _mid_alpha(cone: Cone, frame_side: int) -> float:
    try:
        return preferred_sub_cone(cone, frame_side).mid_alpha
    except ConeEmpty:
        return cone.mid_alpha


@dataclass(frozen=True)
class StanceContext:
    """What the leg solver needs to know about the touchdown situation."""
    zeta: float
    heading: float
    side: Side
    v: float
    frame_side: int = 1
    lam: float = math.inf

    @classmethod
    def from_frame(cls, frame: ClosestFrame, state: ComState) -> "StanceContext":
        return cls(frame.zeta, state.heading, Side.parse(state.side_next), state.v,
                   frame.side, frame.lam)

    def steering_of_offset(self, offset: float) -> float:
        """Steering angle produced by a chord rotated ``offset`` from the velocity."""
        delta = self.heading + int(self.side) * offset
        return normalize_angle(self.frame_side * (self.zeta - delta))

    def offset_for_steering(self, theta: float) -> float:
        delta = self.zeta - self.frame_side * theta
        return int(self.side) * normalize_angle(delta - self.heading)


def _alpha_bounds(params: LegParams, bounds, q: float | None, eta_td: float):
    lo, hi = bounds if bounds is not None else (params.alpha_min, params.alpha_max)
    if q is not None:
        # chord q is only reachable while q < 2 eta cos(alpha)
        hi = min(hi, math.acos(min(1.0, q / (2.0 * eta_td))) * (1 - 1e-9))
    return lo, hi


def inverse_solve(theta_target: float, q_target: float, ctx: StanceContext, params: LegParams,
                  bounds: tuple[float, float] | None = None, eta_td: float | None = None,
                  b_fixed: float | None = None) -> StancePlan:
    """Leg plan that realises steering angle ``theta_target`` exactly.

    With ``b_fixed`` unset the chord is held at ``q_target`` and the spring
    constant is solved for; otherwise ``alpha`` alone is solved for and the
    chord follows from the fixed spring.
    """
    eta_td = params.eta0 if eta_td is None else eta_td
    offset = ctx.offset_for_steering(theta_target)
    if b_fixed is None:
        lo, hi = _alpha_bounds(params, bounds, q_target, eta_td)
        alpha = 0.5 * math.pi - 0.5 * constant_q_sweep(q_target, eta_td) - offset
        if not lo - ALPHA_TOL <= alpha <= hi + ALPHA_TOL:
            raise NoConstrainedSolution(
                f"alpha={alpha:.6g} outside [{lo:.6g}, {hi:.6g}] for theta={theta_target:.6g}")
        alpha = min(max(alpha, lo), hi)
        b = b_for_q(alpha, q_target, eta_td, ctx.v, params.m)
        return StancePlan.from_leg(ctx.side, alpha, b, eta_td, ctx.v, params.m)

    lo, hi = _alpha_bounds(params, bounds, None, eta_td)

    def resid(a):
        return chord_offset(a, sweep_angle(a, eta_td, b_fixed, ctx.v, params.m)) - offset

    roots = _grid_roots(resid, lo, hi)
    if not roots:
        raise NoConstrainedSolution(f"no alpha in [{lo:.6g}, {hi:.6g}] gives theta={theta_target:.6g}")
    alpha = min(roots, key=lambda a: abs(a - 0.5 * (lo + hi)))
    return StancePlan.from_leg(ctx.side, alpha, b_fixed, eta_td, ctx.v, params.m)


def _grid_roots(fn, lo: float, hi: float, n: int = N_SEEDS) -> list[float]:
    grid = np.linspace(lo, hi, n)
    vals = []
    for a in grid:
        try:
            vals.append(fn(a))
        except NoCompression:
            vals.append(math.nan)
    roots = []
    for j, (a, va) in enumerate(zip(grid, vals)):
        if va == 0.0:
            roots.append(float(a))
        if j + 1 < n:
            vb = vals[j + 1]
            if va * vb < 0.0:
                roots.append(brentq(fn, a, grid[j + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


@dataclass(frozen=True)
class ApproxGains:
    K: float
    K_tilde: float
    M_tilde: float
    M_sup: float
    theta_tilde: float
    sin_theta_tilde: float
    sin_theta: float
    rho_tilde_next: float
    exact: bool
    clamped: bool = False
    extra: dict = field(default_factory=dict, compare=False, repr=False)


def neighborhood_bound(M_sup: float, q: float, K: float) -> float:
    """Ultimate bound on the offset error under the approximation method."""
    return M_sup * q / (1.0 - abs(1.0 - K))


def approx_step(frame: ClosestFrame, state: ComState, params: LegParams, gains: TrackingGains,
                q: float, rho_tilde: float, M_sup: float = 0.0, model: str = "exact",
                bounds: tuple[float, float] | None = None,
                eta_td: float | None = None) -> tuple[StancePlan, ApproxGains]:
    """Constrained leg placement that best realises the desired steering angle.

    ``rho_tilde`` is the offset error the previous stance aimed for. When an
    admissible ``alpha`` reproduces the desired steering exactly it is returned
    with zero residual; otherwise the ``alpha`` minimising the mismatch of
    steering sines is used and the residual gain is reported.
    """
    eta_td = params.eta0 if eta_td is None else eta_td
    cmd = steering_command(frame, q, gains, model)
    s_des = cmd.sin_theta
    ctx = StanceContext.from_frame(frame, state)
    sweep = constant_q_sweep(q, eta_td)
    lo, hi = _alpha_bounds(params, bounds, q, eta_td)

    def theta_of(alpha):
        return ctx.steering_of_offset(chord_offset(alpha, sweep))

    def sin_clamped(alpha):
        th = theta_of(alpha)
        return math.sin(max(-0.5 * math.pi, min(0.5 * math.pi, th)))

    def mismatch(alpha):
        return sin_clamped(alpha) - s_des

    cone = Cone(state.heading, ctx.side, (lo, hi), q, sweep, turn_angle(q, frame.lam))
    mid = _mid_alpha(cone, frame.side)
    roots = _grid_roots(mismatch, lo, hi)
    if roots:
        alpha = min(roots, key=lambda a: abs(a - mid))
        exact = True
    else:
        grid = np.linspace(lo, hi, N_SEEDS)
        vals = np.array([abs(mismatch(a)) for a in grid])
        best = vals.min()
        cands = [a for a, v in zip(grid, vals) if v <= best + 1e-12]
        alpha = float(min(cands, key=lambda a: abs(a - mid)))
        h = (hi - lo) / (N_SEEDS - 1)
        res = minimize_scalar(lambda a: abs(mismatch(a)), method="bounded",
                              bounds=(max(lo, alpha - h), min(hi, alpha + h)),
                              options={"xatol": 1e-13})
        if abs(mismatch(res.x)) < abs(mismatch(alpha)) - 1e-15:
            alpha = float(res.x)
        exact = False

    th = theta_of(alpha)
    clamped = abs(th) > 0.5 * math.pi
    sin_th = math.sin(th)
    M = 0.0 if exact else abs(sin_clamped(alpha) - s_des)
    err = frame.rho - gains.rho_c
    denom = err - rho_tilde
    if exact:
        K_t = 0.0
    elif denom == 0.0:
        K_t = math.inf
    else:
        K_t = (sin_th - s_des) * q / denom
    b = b_for_q(alpha, q, eta_td, state.v, params.m)
    plan = StancePlan.from_leg(ctx.side, alpha, b, eta_td, state.v, params.m)
    out = ApproxGains(
        K=cmd.K,
        K_tilde=K_t,
        M_tilde=M,
        M_sup=max(M_sup, M),
        theta_tilde=cmd.theta,
        sin_theta_tilde=s_des,
        sin_theta=sin_th,
        rho_tilde_next=(1.0 - cmd.K) * err,
        exact=exact,
        clamped=clamped,
        extra={"f": cmd.f, "theta": th},
    )
    return plan, out
