"""Boundary tracking for a planar lateral leg-spring runner.

The runner alternates left and right stances on a massless leg spring. A
stance-by-stance distance feedback picks the steering angle, a leg solver
turns it into a touchdown angle and spring stiffness, and a minimum-effort
torque keeps the body orientation regulated.
"""
from .body import (BodyState, PostureGains, control_cost, integrate_body, posture_targets,
                   torque, torque_coeffs)
from .errors import *  # noqa: F401,F403
from .geometry import (Circle, ClosestFrame, Line, ParametricCurve, bearing_theta,
                       closest_frame, estimate_curvature, normalize_angle)
from .harness import ScenarioConfig, TraceRecord, metrics, run_scenario, sweep_tables
from .legsolver import (ApproxGains, Cone, approx_step, b_for_q, build_cones, inverse_solve,
                        min_turn_radius, neighborhood_bound, q_of_alpha)
from .stance import (ComState, LegParams, Side, StancePlan, integrate_stance, ode_stance,
                     stance_duration, sweep_angle)
from .tracking import (TrackingGains, feasible_f_intervals, solve_theta, steering_command,
                       step_distance_update)

__version__ = "0.1.0"
