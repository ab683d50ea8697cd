"""YAML scenario files, dotted ``key=value`` overrides and validation."""
from __future__ import annotations

import ast
import copy
import math
import operator
from pathlib import Path

import numpy as np
import yaml

from .body import BodyState, PostureGains
from .errors import ConfigError
from .geometry import Circle, Line, ParametricCurve
from .harness import ScenarioConfig
from .stance import ComState, LegParams, Side
from .tracking import TrackingGains

SCENARIO_DIR = Path(__file__).with_name("scenarios")

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.operand))
    raise ValueError("unsupported expression")


def number(value, key: str = "value") -> float:
    """Float from a YAML scalar; strings may be arithmetic in ``pi``, e.g. ``pi/6``."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return _eval_node(ast.parse(value.strip(), mode="eval"))
        except (SyntaxError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: cannot read {value!r} as a number") from exc
    raise ConfigError(f"{key}: expected a number, got {value!r}")


def _vec(value, key: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{key}: expected a pair [x, y]")
    return np.array([number(v, key) for v in value])


def apply_overrides(data: dict, overrides) -> dict:
    """Return a copy of ``data`` with ``a.b.c=value`` assignments applied."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {item!r}: {p!r} is not a section")
            node = nxt
        node[parts[-1]] = yaml.safe_load(raw)
    return data


def ellipse(center, a: float, b: float, direction: str = "ccw", samples: int = 4096) -> ParametricCurve:
    """Ellipse parameterised by (tabulated) arc length."""
    if a <= 0 or b <= 0:
        raise ConfigError("ellipse semi-axes must be positive")
    c = np.asarray(center, dtype=float)
    sgn = 1.0 if direction == "ccw" else -1.0
    u = np.linspace(0.0, 2 * math.pi, samples + 1)
    speed = np.hypot(a * np.sin(u), b * np.cos(u))
    s_tab = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(u))])
    length = float(s_tab[-1])

    def param(s):
        return sgn * float(np.interp(s % length, s_tab, u))

    def point(s):
        t = param(s)
        return c + np.array([a * math.cos(t), b * math.sin(t)])

    def tangent(s):
        t = param(s)
        d = sgn * np.array([-a * math.sin(t), b * math.cos(t)])
        return d / np.hypot(*d)

    def curvature(s):
        t = param(s)
        return sgn * a * b / (a * a * math.sin(t) ** 2 + b * b * math.cos(t) ** 2) ** 1.5

    return ParametricCurve(point, tangent, curvature, length, periodic=True)


def _curve(spec: dict):
    kind = spec.get("kind")
    direction = spec.get("direction", "ccw")
    if direction not in ("ccw", "cw"):
        raise ConfigError("curve.direction must be 'ccw' or 'cw'")
    if kind == "circle":
        radius = number(spec.get("radius"), "curve.radius")
        if radius <= 0:
            raise ConfigError("curve.radius must be positive")
        return Circle(_vec(spec.get("center", [0, 0]), "curve.center"), radius, direction)
    if kind == "line":
        d = _vec(spec.get("direction_vector", [1, 0]), "curve.direction_vector")
        if not np.any(d):
            raise ConfigError("curve.direction_vector must be nonzero")
        return Line(_vec(spec.get("point", [0, 0]), "curve.point"), d)
    if kind == "ellipse":
        return ellipse(_vec(spec.get("center", [0, 0]), "curve.center"),
                       number(spec.get("a"), "curve.a"), number(spec.get("b"), "curve.b"), direction)
    raise ConfigError(f"curve.kind must be circle, line or ellipse, got {kind!r}")


def _section(data: dict, name: str) -> dict:
    sec = data.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return sec


def build_scenario(data: dict) -> ScenarioConfig:
    """Validated scenario from a parsed config mapping."""
    if not isinstance(data, dict) or "curve" not in data:
        raise ConfigError("config needs a 'curve' section")
    leg = _section(data, "leg")
    init = _section(data, "initial")
    trk = _section(data, "tracking")
    pst = _section(data, "posture")
    ctl = _section(data, "control")
    run = _section(data, "run")
    itg = _section(data, "integrator")
    try:
        params = LegParams(**{k: number(v, f"leg.{k}") for k, v in leg.items()})
        state = ComState(_vec(init.get("r", [0, 0]), "initial.r"),
                         number(init.get("v", 0.2), "initial.v"),
                         number(init.get("heading", 0.0), "initial.heading"),
                         Side.parse(init.get("side", "right")))
        body = BodyState(number(init.get("sigma", 0.0), "initial.sigma"),
                         number(init.get("p_sigma", 0.0), "initial.p_sigma"))
        gains = TrackingGains(number(trk.get("K", 0.5), "tracking.K"),
                              number(trk.get("rho_c", 0.03), "tracking.rho_c"),
                              bool(trk.get("adaptive", True)))
        posture = PostureGains(**{k: number(v, f"posture.{k}") for k, v in pst.items()})
        eta_td = ctl.get("eta_td")
        return ScenarioConfig(
            curve=_curve(_section(data, "curve")),
            params=params, initial=state, body=body, tracking=gains, posture=posture,
            strategy=str(ctl.get("strategy", "constant-q")),
            q_target=number(ctl.get("q_target", 0.0153), "control.q_target"),
            eta_td=None if eta_td is None else number(eta_td, "control.eta_td"),
            model=str(ctl.get("model", "exact")),
            max_stances=int(run.get("max_stances", 40)),
            stop_on_converge=bool(run.get("stop_on_converge", False)),
            converge_count=int(run.get("converge_count", 3)),
            converge_floor=number(run.get("converge_floor", 1e-4), "run.converge_floor"),
            check_invariants=bool(run.get("check_invariants", True)),
            trajectory_samples=int(run.get("trajectory_samples", 0)),
            rtol=number(itg.get("rtol", 1e-12), "integrator.rtol"),
            atol=number(itg.get("atol", 1e-16), "integrator.atol"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def sweep_grid(data: dict) -> dict:
    """Grid and fixed values for the placement sweep tables."""
    sw = _section(data, "sweep")
    grid = _section(sw, "alpha")
    start = number(grid.get("start", "pi/6"), "sweep.alpha.start")
    stop = number(grid.get("stop", "pi/3"), "sweep.alpha.stop")
    n = int(grid.get("n", 25))
    if n < 1:
        raise ConfigError("sweep.alpha.n must be at least 1")
    if stop < start:
        raise ConfigError("sweep.alpha.stop is below sweep.alpha.start")
    return {
        "alphas": np.linspace(start, stop, n),
        "b": number(sw.get("b", 1.05), "sweep.b"),
        "q_target": number(sw.get("q_target", 0.0144), "sweep.q_target"),
    }


def load(path, overrides=()) -> dict:
    """Raw mapping from a YAML file (or a shipped scenario name) with overrides applied."""
    p = Path(path)
    if not p.exists() and (SCENARIO_DIR / f"{path}.yaml").exists():
        p = SCENARIO_DIR / f"{path}.yaml"
    try:
        data = yaml.safe_load(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return apply_overrides(data or {}, overrides)


def load_scenario(path, overrides=()) -> ScenarioConfig:
    return build_scenario(load(path, overrides))
