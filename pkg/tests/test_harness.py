import math
from dataclasses import asdict, replace

import numpy as np
import pytest

from lls_tracking.config import ellipse, load_scenario
from lls_tracking.errors import ConfigError, PlanFailure
from lls_tracking.geometry import Circle, Line
from lls_tracking.harness import (ScenarioConfig, converged_index, metrics, run_scenario,
                                  sweep_tables)
from lls_tracking.legsolver import constant_q_sweep
from lls_tracking.stance import ComState, LegParams, Side, chord_offset
from lls_tracking.tracking import TrackingGains, simplified_update
from lls_tracking.validation import _contraction_config, circle_config

Q = 0.0153
PARAMS = LegParams(m=2.5e-3)


def straight_config(alpha0=0.8, max_stances=12, **kw):
    g = chord_offset(alpha0, constant_q_sweep(Q, PARAMS.eta0))
    return ScenarioConfig(
        curve=Line((0.0, 0.0), (1.0, 0.0)), params=PARAMS,
        initial=ComState(np.array([0.0, -0.03]), 0.2, -int(Side.RIGHT) * g, Side.RIGHT),
        tracking=TrackingGains(0.5, 0.03), q_target=Q, max_stances=max_stances, **kw)


@pytest.fixture(scope="module")
def circle_trace():
    cfg = circle_config()
    return cfg, run_scenario(cfg)


def test_straight_line_steady_gait():
    trace = run_scenario(straight_config())
    assert max(abs(r.rho - 0.03) for r in trace) <= 1e-12
    assert max(r.alpha for r in trace) - min(r.alpha for r in trace) <= 1e-9
    assert [r.side for r in trace[:4]] == ["R", "L", "R", "L"]
    assert all(abs(r.q - Q) <= 1e-9 for r in trace)


def test_trivial_run_metrics():
    cfg = straight_config()
    m = metrics(run_scenario(cfg), cfg)
    assert m["final_error"] == pytest.approx(0.0, abs=1e-12)
    assert m["stances_to_converge"] == 0
    assert m["approx_stances"] == 0


def test_deterministic():
    cfg = circle_config(**{"run.max_stances": 8})
    a = [asdict(r) for r in run_scenario(cfg)]
    b = [asdict(r) for r in run_scenario(cfg)]
    assert a == b


def test_speed_invariant(circle_trace):
    cfg, trace = circle_trace
    v = cfg.initial.v
    assert max(abs(r.exit_speed - v) for r in trace) <= 1e-10 * v


def test_bearing_relation_residual(circle_trace):
    _, trace = circle_trace
    res = [abs(r.theta_residual) for r in trace[1:] if math.isfinite(r.theta_residual)]
    assert len(res) >= len(trace) - 2
    assert max(res) <= 1e-8


def test_time_accumulates(circle_trace):
    _, trace = circle_trace
    for a, b in zip(trace, trace[1:]):
        assert b.t == pytest.approx(a.t + a.duration, rel=1e-12)


def test_circle_converges_quickly(circle_trace):
    cfg, trace = circle_trace
    m = metrics(trace, cfg)
    assert m["stances_to_converge"] is not None and m["stances_to_converge"] <= 15
    assert m["bound_check"]


def test_unconstrained_circle_contracts_geometrically():
    cfg = _contraction_config(np.random.default_rng(11))
    cfg.max_stances = 25
    trace = run_scenario(cfg)
    e = np.array([r.rho - cfg.tracking.rho_c for r in trace])
    pred = e[0] * (1.0 - cfg.tracking.K) ** np.arange(len(e))
    assert np.max(np.abs(e - pred)) <= 1e-10 * abs(e[0])


def test_simplified_model_follows_reduced_recursion():
    R, rho_c = 0.2, 0.03
    cfg = ScenarioConfig(
        curve=Circle((0.0, 0.0), R, "ccw"), params=LegParams(m=2.5e-3, alpha_min=0.6, alpha_max=0.7),
        initial=ComState(np.array([R + rho_c + 0.01, 0.0]), 0.2, math.pi / 2, Side.RIGHT),
        tracking=TrackingGains(0.5, rho_c, adaptive=False), strategy="approx",
        model="simplified", q_target=Q, max_stances=30)
    trace = run_scenario(cfg)
    for a, b in zip(trace, trace[1:]):
        lam = a.rho + R
        pred = simplified_update(a.rho, a.theta, Q, lam, rho_c)
        assert b.rho - rho_c == pytest.approx(pred, abs=1e-13)


@pytest.mark.parametrize("name", ["circle", "ellipse"])
def test_shipped_scenarios_meet_bound(name):
    cfg = load_scenario(name)
    trace = run_scenario(cfg)
    m = metrics(trace, cfg)
    assert m["bound_check"]
    assert converged_index(trace, cfg) is not None


def test_stop_on_converge_truncates():
    full = run_scenario(circle_config())
    short_cfg = circle_config(**{"run.stop_on_converge": True})
    short = run_scenario(short_cfg)
    assert len(short) < len(full)
    assert converged_index(short, short_cfg) == len(short) - short_cfg.converge_count


def test_callback_sees_every_stance():
    seen = []
    trace = run_scenario(straight_config(max_stances=5), on_stance=lambda rec, out: seen.append(rec.i))
    assert seen == [r.i for r in trace]


def test_trajectory_samples_attached():
    outs = []
    run_scenario(straight_config(max_stances=2, trajectory_samples=20),
                 on_stance=lambda rec, out: outs.append(out))
    assert all(o.trajectory is not None and len(o.trajectory) == 20 for o in outs)


def test_sweep_tables():
    alphas = np.linspace(math.pi / 6, math.pi / 3, 25)
    tables = sweep_tables(PARAMS, alphas, 0.2, 1.05, 0.0144, None)
    for key in ("chord_vectors", "chord", "spring"):
        rows = tables[key]
        assert len(rows) == 25
        assert rows[0][0] == pytest.approx(math.pi / 6)
        assert rows[-1][0] == pytest.approx(math.pi / 3)
    _, qx, qy = np.array(tables["chord_vectors"]).T
    assert np.allclose(np.hypot(qx, qy), np.array(tables["chord"])[:, 1], rtol=1e-9)
    assert np.all(np.isfinite(np.array(tables["spring"])[:, 1]))


def test_simplified_rejects_parametric_curve():
    with pytest.raises(ConfigError):
        ScenarioConfig(curve=ellipse((0, 0), 0.05, 0.03), model="simplified")


@pytest.mark.parametrize("kw", [{"strategy": "magic"}, {"model": "fast"}, {"q_target": 0.04},
                                {"max_stances": 0}, {"trajectory_samples": -1}])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ScenarioConfig(curve=Line((0, 0), (1, 0)), **kw)


def test_inverse_strategy_reports_infeasible_plan():
    # A window far too narrow for a tight circle cannot steer exactly.
    cfg = ScenarioConfig(
        curve=Circle((0.0, 0.0), 0.02, "ccw"),
        params=LegParams(m=2.5e-3, alpha_min=0.70, alpha_max=0.71),
        initial=ComState(np.array([0.1, 0.0]), 0.2, math.pi / 3, Side.RIGHT),
        tracking=TrackingGains(0.5, 0.03), strategy="inverse", q_target=Q, max_stances=10)
    with pytest.raises(PlanFailure):
        run_scenario(cfg)


def test_approx_strategy_exact_when_reachable():
    cfg = replace(straight_config(max_stances=6), strategy="approx")
    trace = run_scenario(cfg)
    assert all(r.approx for r in trace)
    assert all(r.M_tilde == 0.0 for r in trace)
    assert max(abs(r.rho - 0.03) for r in trace) <= 1e-12
