"""Motion control: longitudinal speed ramp, lateral steering, upper-body PID.

All three controllers are pure functions over small state records so they can
be unit-tested against closed-form geometry without an agent or a plant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from ..geom_planning import Direction, Pose2D, RSPath, pose_along


@dataclass(frozen=True)
class ControlConfig:
    # commanded deceleration for the approach ramp; deliberately gentler than
    # the plant's braking limit so the plant can always track the ramp
    approach_decel: float = 0.5
    goal_tol: float = 0.15
    lookahead: float = 3.0
    # effective-lookahead floor while the target is pinned at the run end
    terminal_lookahead_floor: float = 0.8
    kp: float = 2.0
    ki: float = 0.1
    kd: float = 0.2
    angle_tol: float = math.radians(0.5)
    hold_time: float = 0.5
    # below this estimated speed the vehicle counts as at rest when
    # sequencing cusp stops and goal arrival
    rest_speed: float = 0.05

    def __post_init__(self) -> None:
        for name in ("approach_decel", "goal_tol", "lookahead",
                     "terminal_lookahead_floor", "hold_time", "rest_speed"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


def longitudinal_control(s: float, run_start: float, run_end: float,
                         direction: Direction, cruise: float,
                         config: ControlConfig) -> tuple[float, bool]:
    """Speed reference on the current same-direction run.

    Cruise until the braking parabola v = sqrt(2*a*d_rem) bites, zero inside
    the goal tolerance. Returns (v_ref, in_goal_zone); the sign of v_ref
    encodes drive direction.
    """
    d_rem = max(run_end - s, 0.0)
    if d_rem < config.goal_tol:
        return 0.0, True
    v = min(cruise, math.sqrt(2.0 * config.approach_decel * d_rem))
    if direction is Direction.REVERSE:
        v = -v
    return v, False


def pure_pursuit(pose: Pose2D, path: RSPath, s: float, run_end: float,
                 v_ref: float, config: ControlConfig, omega_max: float) -> float:
    """Steer toward a point one lookahead ahead along the path.

    The target never crosses the end of the current same-direction run: each
    cusp is an intermediate stop point, so steering past it would chase a
    point the vehicle is about to back away from. With the signed v_ref the
    single chord formula covers reverse runs as well; flipping the vehicle
    frame and using the speed magnitude gives the identical command.
    """
    s_target = min(s + config.lookahead, run_end)
    target = pose_along(path, s_target).pose
    _, y_t = pose.point_to_local(target.x, target.y)
    L = config.lookahead
    d_rem = run_end - s
    if d_rem < L:
        # target pinned at the run end: with a fixed L the gain decays with
        # the shrinking chord and convergence stalls short of the endpoint,
        # so track the remaining distance instead (floored for stability)
        L = max(d_rem, config.terminal_lookahead_floor)
    omega = v_ref * 2.0 * y_t / (L * L)
    return max(-omega_max, min(omega_max, omega))


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: Optional[float] = None


def upper_body_pid(error: float, dt: float, state: PidState,
                   config: ControlConfig, rate_max: float) -> tuple[float, PidState]:
    """One PID step on the shortest-angle error; output is a slew rate.

    Anti-windup is conditional: the integral holds while the output is
    saturated in the error's direction, and is clamped so its term alone can
    never exceed the saturation rate.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    derivative = 0.0 if state.prev_error is None else (error - state.prev_error) / dt
    integral = state.integral + error * dt
    if config.ki > 0.0:
        bound = rate_max / config.ki
        integral = max(-bound, min(bound, integral))
    raw = config.kp * error + config.ki * integral + config.kd * derivative
    if abs(raw) > rate_max and raw * error > 0.0:
        # pushing further into saturation: keep the previous integral
        integral = state.integral
        raw = config.kp * error + config.ki * integral + config.kd * derivative
    rate = max(-rate_max, min(rate_max, raw))
    return rate, replace(state, integral=integral, prev_error=error)
