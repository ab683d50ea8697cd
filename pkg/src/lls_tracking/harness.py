"""Hybrid stance-by-stance loop: sense the boundary, steer, place the leg,
integrate the stance and the body channel, and log one record per stance."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .body import BodyState, PostureGains, control_cost, integrate_body, posture_targets, torque_coeffs
from .errors import (ConfigError, InfeasibleGeometry, InvariantViolation, NoConstrainedSolution,
                     PlanFailure, Unachievable)
from .geometry import Circle, ClosestFrame, CurveModel, Line, normalize_angle, unit
from .legsolver import (StanceContext, approx_step, b_for_q, constant_q_sweep, inverse_solve,
                        neighborhood_bound, q_of_alpha)
from .stance import (ComState, LegParams, Side, StancePlan, chord_offset, heading_update,
                     integrate_stance, theta_difference_check)
from .geometry import advance_zeta
from .tracking import TrackingGains, simplified_update, steering_command

log = logging.getLogger(__name__)

STRATEGIES = ("constant-q", "inverse", "approx")
MODELS = ("exact", "simplified")
# Leg-angle window used when the inverse method runs without placement limits.
UNCONSTRAINED = (1e-9, 0.5 * math.pi - 1e-9)


@dataclass
class ScenarioConfig:
    curve: CurveModel
    params: LegParams = field(default_factory=LegParams)
    initial: ComState = field(default_factory=lambda: ComState(np.zeros(2), 0.2, 0.0))
    body: BodyState = field(default_factory=BodyState)
    tracking: TrackingGains = field(default_factory=TrackingGains)
    posture: PostureGains = field(default_factory=PostureGains)
    strategy: str = "constant-q"
    q_target: float = 0.0153
    eta_td: float | None = None
    model: str = "exact"
    max_stances: int = 40
    stop_on_converge: bool = False
    converge_count: int = 3
    converge_floor: float = 1e-4
    rtol: float = 1e-12
    atol: float = 1e-16
    energy_tol: float = 1e-9
    theta_residual_tol: float = 1e-8
    check_invariants: bool = True
    trajectory_samples: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def leg_length(self) -> float:
        return self.params.eta0 if self.eta_td is None else self.eta_td

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not 0.0 < self.q_target < 2.0 * self.leg_length:
            raise ConfigError("q_target must lie in (0, 2 * eta_td)")
        if self.trajectory_samples < 0:
            raise ConfigError("trajectory_samples must be non-negative")
        if self.max_stances < 1:
            raise ConfigError("max_stances must be at least 1")
        if self.model == "simplified" and not isinstance(self.curve, (Circle, Line)):
            raise ConfigError("the simplified model needs a circle or a line")


@dataclass
class TraceRecord:
    i: int
    side: str
    t: float
    x: float
    y: float
    heading: float
    rho: float
    zeta: float
    kappa: float
    theta: float
    theta_tilde: float
    alpha: float
    b: float
    q: float
    sweep: float
    duration: float
    sigma: float
    p_sigma: float
    torque_cost: float
    approx: bool
    K: float
    K_tilde: float
    M_tilde: float
    sin_theta: float
    sin_theta_tilde: float
    rho_tilde: float
    energy_drift: float
    p_psi_drift: float
    mirror_error: float
    exit_speed: float
    theta_residual: float = math.nan


# (attribute, header) pairs; headers carry SI units.
COLUMNS = [
    ("i", "stance"), ("side", "side"), ("t", "t_s"), ("x", "x_m"), ("y", "y_m"),
    ("heading", "heading_rad"), ("rho", "rho_m"), ("zeta", "zeta_rad"), ("kappa", "kappa_1/m"),
    ("theta", "theta_rad"), ("theta_tilde", "theta_desired_rad"), ("alpha", "alpha_rad"),
    ("b", "b_N/m"), ("q", "q_m"), ("sweep", "sweep_rad"), ("duration", "T_s"),
    ("sigma", "sigma_rad"), ("p_sigma", "p_sigma_kgm2/s"), ("torque_cost", "J_N2m2s"),
    ("approx", "approx_fallback"), ("K", "K"), ("K_tilde", "K_tilde"), ("M_tilde", "M_tilde"),
    ("sin_theta", "sin_theta"), ("sin_theta_tilde", "sin_theta_desired"),
    ("rho_tilde", "rho_desired_err_m"), ("energy_drift", "energy_drift_rel"),
    ("p_psi_drift", "p_psi_drift_rel"), ("mirror_error", "mirror_error_rad"),
    ("exit_speed", "exit_speed_m/s"),
    ("theta_residual", "theta_residual_rad"),
]


@dataclass
class _Plan:
    plan: StancePlan
    approx: bool
    K: float
    K_tilde: float
    M_tilde: float
    theta_tilde: float
    sin_theta_tilde: float
    rho_tilde_next: float


def _choose_plan(cfg: ScenarioConfig, frame, state, rho_tilde, M_sup) -> _Plan:
    q = cfg.q_target
    params = cfg.params
    gains = cfg.tracking
    ctx = StanceContext.from_frame(frame, state)
    cmd = steering_command(frame, q, gains, cfg.model)
    err = frame.rho - gains.rho_c
    if cfg.strategy in ("inverse", "constant-q") and cmd.feasible:
        bounds = UNCONSTRAINED if cfg.strategy == "inverse" else None
        try:
            plan = inverse_solve(cmd.theta, q, ctx, params, bounds=bounds, eta_td=cfg.leg_length)
            return _Plan(plan, False, cmd.K, 0.0, 0.0, cmd.theta, cmd.sin_theta, (1 - cmd.K) * err)
        except (NoConstrainedSolution, Unachievable) as exc:
            if cfg.strategy == "inverse":
                raise PlanFailure(str(exc)) from exc
            log.debug("stance fallback to approximation: %s", exc)
    elif cfg.strategy == "inverse":
        raise PlanFailure(f"desired steering unsolvable (sin = {cmd.sin_theta:.6g})")
    plan, info = approx_step(frame, state, params, gains, q, rho_tilde, M_sup=M_sup,
                             model=cfg.model, eta_td=cfg.leg_length)
    return _Plan(plan, True, info.K, info.K_tilde, info.M_tilde, info.theta_tilde,
                 info.sin_theta_tilde, info.rho_tilde_next)


def _simplified_next(cfg: ScenarioConfig, frame, state: ComState, plan: StancePlan, theta: float):
    """Advance the reduced (small-step) model by one stance.

    The next frame is carried forward analytically rather than re-sensed, so
    the offset keeps its sign if the runner crosses the curve.
    """
    q = cfg.q_target
    rho_c = cfg.tracking.rho_c
    rho_next = rho_c + simplified_update(frame.rho, theta, q, frame.lam, rho_c,
                                         max_ratio=math.inf)
    s = frame.side
    heading = heading_update(state.heading, plan.alpha, plan.sweep, plan.side)
    n_r = s * frame.normal
    if frame.kappa == 0.0:
        r_c = frame.r_c + q * math.cos(theta) * frame.tangent
        zeta_next = frame.zeta
    else:
        gamma = advance_zeta(frame, q, theta, rho_next - frame.rho)
        zeta_next = normalize_angle(frame.zeta - s * gamma)
        center = frame.r_c - n_r / frame.kappa
        n_r = s * np.array([-math.sin(zeta_next), math.cos(zeta_next)])
        r_c = center + n_r / frame.kappa
    nxt_frame = ClosestFrame(r_c, rho_next, zeta_next, frame.kappa, s)
    nxt = ComState(r_c + rho_next * n_r, state.v, heading, Side.parse(plan.side).other)
    return nxt, nxt_frame


def run_scenario(cfg: ScenarioConfig, on_stance=None) -> list[TraceRecord]:
    """Run stances until the budget is spent (or convergence, if requested).

    ``on_stance(record, outcome)`` is called after every stance; ``outcome`` is
    the integrated :class:`StanceOutcome` (``None`` for the reduced model).
    """
    params = cfg.params
    curve = cfg.curve
    const_curv = isinstance(curve, (Circle, Line))
    state = cfg.initial
    body = cfg.body
    t = 0.0
    rho_tilde = None
    M_sup = 0.0
    trace: list[TraceRecord] = []
    prev = None  # (record, frame, plan, theta_track, gamma)
    carried = None
    for i in range(cfg.max_stances):
        frame = carried if carried is not None else curve.closest_frame(state.r)
        err = frame.rho - cfg.tracking.rho_c
        if rho_tilde is None:
            rho_tilde = err
        choice = _choose_plan(cfg, frame, state, rho_tilde, M_sup)
        plan = choice.plan
        M_sup = max(M_sup, choice.M_tilde)

        if cfg.model == "exact":
            out = integrate_stance(state, plan, params, frame=frame, rtol=cfg.rtol, atol=cfg.atol,
                                   sample=cfg.trajectory_samples)
            nxt = out.next
            theta = out.theta_achieved
            q_len = float(np.hypot(*out.q_vec))
            drifts = (out.energy_drift, out.p_psi_drift, out.mirror_error)
            exit_speed = out.exit_speed
        else:
            ctx = StanceContext.from_frame(frame, state)
            theta = ctx.steering_of_offset(chord_offset(plan.alpha, plan.sweep))
            nxt, carried = _simplified_next(cfg, frame, state, plan, theta)
            q_len = cfg.q_target
            drifts = (0.0, 0.0, 0.0)
            exit_speed = nxt.v
            out = None

        target = posture_targets(body, state.heading, cfg.posture, plan.alpha, plan.sweep, plan.side)
        A1, A2 = torque_coeffs(body, target, plan.duration, params.I)
        body_next = integrate_body(body, A1, A2, plan.duration, params.I)

        rec = TraceRecord(
            i=i, side="R" if plan.side == Side.RIGHT else "L", t=t,
            x=float(state.r[0]), y=float(state.r[1]), heading=state.heading,
            rho=frame.rho, zeta=frame.zeta, kappa=frame.kappa, theta=theta,
            theta_tilde=choice.theta_tilde, alpha=plan.alpha, b=plan.b, q=q_len,
            sweep=plan.sweep, duration=plan.duration, sigma=body.sigma, p_sigma=body.p_sigma,
            torque_cost=control_cost(A1, A2, plan.duration, params.I), approx=choice.approx,
            K=choice.K, K_tilde=choice.K_tilde, M_tilde=choice.M_tilde,
            sin_theta=math.sin(theta), sin_theta_tilde=choice.sin_theta_tilde,
            rho_tilde=rho_tilde, energy_drift=drifts[0], p_psi_drift=drifts[1],
            mirror_error=drifts[2], exit_speed=exit_speed,
        )
        if prev is not None:
            p_rec, p_frame, p_plan, p_theta = prev
            try:
                gamma = advance_zeta(p_frame, p_rec.q, p_theta, frame.rho - p_frame.rho)
                rec.theta_residual = theta_difference_check(
                    p_frame.side * p_theta, frame.side * theta, p_plan.alpha, plan.alpha,
                    p_plan.sweep, plan.sweep, -p_frame.side * gamma, p_plan.side)
            except InfeasibleGeometry:
                rec.theta_residual = math.nan
        trace.append(rec)
        if cfg.check_invariants:
            _check(cfg, rec, const_curv)
        if on_stance is not None:
            on_stance(rec, out)

        prev = (rec, frame, plan, theta)
        rho_tilde = choice.rho_tilde_next
        state = nxt
        body = BodyState(body_next.sigma, target.p_sigma)
        t += plan.duration
        if cfg.stop_on_converge and converged_index(trace, cfg) is not None:
            break
    return trace


def _check(cfg: ScenarioConfig, rec: TraceRecord, const_curv: bool):
    if rec.energy_drift > cfg.energy_tol:
        raise InvariantViolation(f"stance {rec.i}: energy drift {rec.energy_drift:.3g}")
    if (const_curv and cfg.model == "exact" and math.isfinite(rec.theta_residual)
            and abs(rec.theta_residual) > cfg.theta_residual_tol):
        raise InvariantViolation(f"stance {rec.i}: bearing relation residual {rec.theta_residual:.3g}")


def _threshold(trace, j, n, cfg) -> float:
    window = trace[j:j + n]
    # Only a persistent mismatch (every stance inexact) widens the threshold;
    # transient fallbacks during the approach do not.
    if all(r.M_tilde > 0 for r in window):
        M = max(r.M_tilde for r in window)
        return max(cfg.converge_floor, neighborhood_bound(M, cfg.q_target, cfg.tracking.K))
    return cfg.converge_floor


def converged_index(trace: list[TraceRecord], cfg: ScenarioConfig) -> int | None:
    """First stance from which the offset error stays inside the convergence
    threshold for ``converge_count`` consecutive stances."""
    n = cfg.converge_count
    rho_c = cfg.tracking.rho_c
    for j in range(len(trace) - n + 1):
        thr = _threshold(trace, j, n, cfg)
        if all(abs(r.rho - rho_c) <= thr for r in trace[j:j + n]):
            return j
    return None


def metrics(trace: list[TraceRecord], cfg: ScenarioConfig, tail: int = 50) -> dict:
    rho_c = cfg.tracking.rho_c
    errs = np.array([r.rho - rho_c for r in trace])
    j = converged_index(trace, cfg)
    M_sup = max((r.M_tilde for r in trace), default=0.0)
    bound = neighborhood_bound(M_sup, cfg.q_target, cfg.tracking.K)
    tail_n = min(tail, max(1, len(trace) // 2))
    steady = float(np.max(np.abs(errs[-tail_n:])))
    residuals = [abs(r.theta_residual) for r in trace if math.isfinite(r.theta_residual)]
    return {
        "stances": len(trace),
        "stances_to_converge": j,
        "time_to_converge": trace[j].t if j is not None else None,
        "final_error": float(abs(errs[-1])),
        "steady_error": steady,
        "max_energy_drift": max(r.energy_drift for r in trace),
        "max_p_psi_drift": max(r.p_psi_drift for r in trace),
        "max_mirror_error": max(r.mirror_error for r in trace),
        "max_speed_drift": max(abs(r.exit_speed - cfg.initial.v) for r in trace) / cfg.initial.v,
        "max_theta_residual": max(residuals, default=0.0),
        "approx_stances": sum(r.approx for r in trace),
        "M_sup": M_sup,
        "neighborhood_bound": bound,
        "bound_check": bool(steady <= bound + cfg.converge_floor) if M_sup > 0 else bool(steady <= cfg.converge_floor),
        "simulated_time": trace[-1].t + trace[-1].duration,
        "b_range": [min(r.b for r in trace), max(r.b for r in trace)],
        "speed": cfg.initial.v,
    }


def sweep_tables(params: LegParams, alphas, v: float, b_fixed: float, q_target: float,
                    eta_td: float | None = None) -> dict[str, list[tuple]]:
    """Chord-versus-placement tables at fixed spring and spring-versus-placement
    tables at fixed chord, in grid order."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigError("alpha grid is empty")
    eta_td = params.eta0 if eta_td is None else eta_td
    chord_vectors, chord, spring = [], [], []
    for a in alphas:
        q = q_of_alpha(a, eta_td, b_fixed, v, params.m)
        sweep = constant_q_sweep(q, eta_td)
        qv = q * unit(chord_offset(a, sweep))
        chord_vectors.append((a, float(qv[0]), float(qv[1])))
        chord.append((a, q))
        try:
            spring.append((a, b_for_q(a, q_target, eta_td, v, params.m)))
        except Unachievable:
            spring.append((a, math.nan))
    return {"chord_vectors": chord_vectors, "chord": chord, "spring": spring}


def record_dict(rec: TraceRecord) -> dict:
    return asdict(rec)
