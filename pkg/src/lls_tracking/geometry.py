"""Boundary curves and the closest-point frame used for steering feedback.

Frame conventions
-----------------
``zeta`` is the lab angle of the curve tangent at the closest point, oriented
along the curve's own direction of travel. The frame normal ``y_c`` is the
tangent rotated by +pi/2. ``side`` records which half-plane the runner is in:
+1 when the runner lies on the ``+y_c`` side, -1 otherwise.

Curvature stored in the frame is *relative to the runner*: positive when the
runner sits on the convex side (centre of curvature across the curve), so that
``lam = rho + 1/kappa`` is the distance from the runner to that centre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegeneratePoints, DegenerateQuery, InfeasibleGeometry

TWO_PI = 2.0 * math.pi
# Rounding slack allowed when a sine argument lands just outside [-1, 1].
SINE_SLACK = 1e-12


def normalize_angle(a: float) -> float:
    """Wrap ``a`` into (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    return math.pi if r <= -math.pi else r


def unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


@dataclass(frozen=True)
class ClosestFrame:
    r_c: np.ndarray
    rho: float
    zeta: float
    kappa: float
    side: int = 1

    @property
    def lam(self) -> float:
        """Distance to the centre of curvature, ``inf`` for straight segments."""
        if self.kappa == 0.0:
            return math.inf
        return self.rho + 1.0 / self.kappa

    @property
    def tangent(self) -> np.ndarray:
        return unit(self.zeta)

    @property
    def normal(self) -> np.ndarray:
        return _rot90(self.tangent)

    def steering_angle(self, q_dir) -> float:
        """Steering angle of a chord direction; positive turns toward the curve."""
        return normalize_angle(self.side * bearing_theta(q_dir, self))

    def chord_heading(self, theta: float) -> float:
        """Lab heading of a chord whose steering angle is ``theta``."""
        return delta_from_theta(self.zeta, theta, self.side)


class Circle:
    kind = "circle"

    def __init__(self, center, radius: float, direction: str = "ccw"):
        if radius <= 0:
            raise ValueError("radius must be positive")
        if direction not in ("ccw", "cw"):
            raise ValueError("direction must be 'ccw' or 'cw'")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.direction = direction

    def __repr__(self):
        return f"Circle(center={self.center.tolist()}, radius={self.radius}, direction={self.direction!r})"

    @property
    def _turn(self) -> int:
        return 1 if self.direction == "ccw" else -1

    def closest_frame(self, r) -> ClosestFrame:
        r = np.asarray(r, dtype=float)
        d = r - self.center
        dist = math.hypot(d[0], d[1])
        if dist == 0.0:
            raise DegenerateQuery("closest point is undefined at the circle centre")
        n_out = d / dist
        r_c = self.center + self.radius * n_out
        tangent = self._turn * _rot90(n_out)
        zeta = math.atan2(tangent[1], tangent[0])
        # +y_c points inward for ccw travel, outward for cw travel.
        outward_side = -self._turn
        if dist >= self.radius:
            return ClosestFrame(r_c, dist - self.radius, zeta, 1.0 / self.radius, outward_side)
        return ClosestFrame(r_c, self.radius - dist, zeta, -1.0 / self.radius, -outward_side)


class Line:
    kind = "line"

    def __init__(self, point, direction):
        self.point = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        n = math.hypot(d[0], d[1])
        if n == 0.0:
            raise ValueError("line direction must be nonzero")
        self.direction = d / n

    def __repr__(self):
        return f"Line(point={self.point.tolist()}, direction={self.direction.tolist()})"

    def closest_frame(self, r) -> ClosestFrame:
        r = np.asarray(r, dtype=float)
        d = r - self.point
        along = float(d @ self.direction)
        r_c = self.point + along * self.direction
        offset = _cross(self.direction, d)
        zeta = math.atan2(self.direction[1], self.direction[0])
        return ClosestFrame(r_c, abs(offset), zeta, 0.0, -1 if offset < 0 else 1)


class ParametricCurve:
    """Arc-length parameterised curve.

    ``curvature(s)`` is signed w.r.t. the curve's left normal (positive when the
    curve turns counter-clockwise).
    """

    kind = "parametric-convex"

    def __init__(
        self,
        point: Callable[[float], np.ndarray],
        tangent: Callable[[float], np.ndarray],
        curvature: Callable[[float], float],
        length: float,
        periodic: bool = True,
        samples: int = 2048,
    ):
        self.point = point
        self.tangent = tangent
        self.curvature = curvature
        self.length = float(length)
        self.periodic = periodic
        self.samples = samples
        self._grid = np.linspace(0.0, self.length, samples, endpoint=not periodic)
        self._pts = np.array([point(s) for s in self._grid])

    def _dist2(self, s: float, r: np.ndarray) -> float:
        if self.periodic:
            s = s % self.length
        p = self.point(s)
        return float((p[0] - r[0]) ** 2 + (p[1] - r[1]) ** 2)

    def _polish(self, s: float, r: np.ndarray, lo: float, hi: float) -> float:
        """Newton steps on the stationarity condition (p(s) - r) . t(s) = 0.

        The distance minimum is flat, so the bracketing minimiser alone only
        resolves ``s`` to about the square root of machine precision.
        """
        for _ in range(4):
            t = np.asarray(self.tangent(s), dtype=float)
            t = t / math.hypot(t[0], t[1])
            d = np.asarray(self.point(s), dtype=float) - r
            g = float(d @ t)
            dg = 1.0 + float(self.curvature(s)) * _cross(t, d)
            if dg <= 0.0:
                break
            s_new = s - g / dg
            if not lo <= s_new <= hi:
                break
            if abs(s_new - s) <= 1e-15 * max(1.0, abs(s)):
                s = s_new
                break
            s = s_new
        return s

    def closest_frame(self, r) -> ClosestFrame:
        r = np.asarray(r, dtype=float)
        d2 = np.sum((self._pts - r) ** 2, axis=1)
        j = int(np.argmin(d2))
        h = self._grid[1] - self._grid[0]
        lo, hi = self._grid[j] - h, self._grid[j] + h
        if not self.periodic:
            lo, hi = max(lo, 0.0), min(hi, self.length)
        res = minimize_scalar(self._dist2, bounds=(lo, hi), args=(r,), method="bounded",
                              options={"xatol": 1e-12})
        s = self._polish(res.x, r, lo, hi)
        s = s % self.length if self.periodic else s
        r_c = np.asarray(self.point(s), dtype=float)
        t = np.asarray(self.tangent(s), dtype=float)
        t = t / math.hypot(t[0], t[1])
        zeta = math.atan2(t[1], t[0])
        d = r - r_c
        offset = _cross(t, d)
        k_curve = float(self.curvature(s))
        if offset > 0:
            side = 1
        elif offset < 0:
            side = -1
        else:
            side = -1 if k_curve > 0 else 1
        return ClosestFrame(r_c, math.hypot(d[0], d[1]), zeta, -side * k_curve, side)


CurveModel = Circle | Line | ParametricCurve


def closest_frame(curve: CurveModel, r) -> ClosestFrame:
    return curve.closest_frame(r)


def bearing_theta(q_dir, frame: ClosestFrame) -> float:
    """Angle of ``q_dir`` measured clockwise from the frame tangent, in (-pi, pi]."""
    q = np.asarray(q_dir, dtype=float)
    x_c = frame.tangent
    y_c = frame.normal
    return normalize_angle(math.atan2(-float(q @ y_c), float(q @ x_c)))


def delta_from_theta(zeta: float, theta: float, side: int = 1) -> float:
    """Lab heading of the chord: ``zeta - theta`` (``side`` mirrors the frame)."""
    return normalize_angle(zeta - side * theta)


def estimate_curvature(p1, p2, p3) -> float:
    """Signed curvature of the circle through three points (positive if counter-clockwise)."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    a = math.dist(p1, p2)
    b = math.dist(p2, p3)
    c = math.dist(p1, p3)
    if min(a, b, c) == 0.0:
        raise DegeneratePoints("points must be pairwise distinct")
    return 2.0 * _cross(p2 - p1, p3 - p1) / (a * b * c)


def advance_zeta(frame: ClosestFrame, q: float, theta: float, f: float) -> float:
    """Centre angle swept by the closest point over one chord (sine law).

    Returns 0 on straight segments. The lab tangent rotates by ``-frame.side * gamma``.
    """
    if frame.kappa == 0.0:
        return 0.0
    arg = q * math.cos(theta) / (frame.lam + f)
    if abs(arg) > 1.0 + SINE_SLACK:
        raise InfeasibleGeometry(f"sine-law argument {arg:.6g} outside [-1, 1]")
    return math.asin(max(-1.0, min(1.0, arg)))
