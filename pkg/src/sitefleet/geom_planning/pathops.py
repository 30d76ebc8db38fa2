"""Arc-length queries and discretization over planned paths.

Everything here is closed form per segment; no numeric integration.  Arc
length s runs from 0 at the path start to total_length at the goal, measured
along the path regardless of travel direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import OutOfRange
from .geometry import Pose2D, wrap_angle
from .planner import Direction, PathSegment, RSPath, Steer

_S_TOL = 1e-9


@dataclass(frozen=True)
class PathSample:
    s: float
    pose: Pose2D
    curvature: float
    direction: Direction


def _segment_bounds(path: RSPath) -> list[tuple[float, float, PathSegment]]:
    out = []
    s0 = 0.0
    for seg in path.segments:
        out.append((s0, s0 + seg.length, seg))
        s0 += seg.length
    return out


def pose_along(path: RSPath, s: float) -> PathSample:
    """Pose, curvature and direction at arc length s.  Exact per segment."""
    total = path.total_length
    if s < -_S_TOL or s > total + _S_TOL:
        raise OutOfRange(f"s={s} outside [0, {total}]")
    s = min(max(s, 0.0), total)
    if not path.segments:
        return PathSample(0.0, path.start_pose, 0.0, Direction.FORWARD)
    s0 = 0.0
    for seg in path.segments:
        s1 = s0 + seg.length
        if s <= s1 + _S_TOL or seg is path.segments[-1]:
            local = min(max(s - s0, 0.0), seg.length)
            return PathSample(s, seg.pose_at(local), seg.curvature, seg.direction)
        s0 = s1
    raise AssertionError("unreachable")


def sample_path(path: RSPath, ds: float) -> list[PathSample]:
    """Discretize the path with spacing <= ds.

    Segment boundaries are always sample points, so curvature and direction
    are constant between consecutive samples.  Endpoints are exact.
    """
    if not ds > 0.0:
        raise ValueError(f"ds must be > 0, got {ds}")
    if not path.segments:
        return [PathSample(0.0, path.start_pose, 0.0, Direction.FORWARD)]
    samples: list[PathSample] = []
    s0 = 0.0
    for seg in path.segments:
        n = max(1, math.ceil(seg.length / ds - 1e-12))
        step = seg.length / n
        start_i = 0 if not samples else 1
        for i in range(start_i, n + 1):
            local = seg.length if i == n else i * step
            samples.append(
                PathSample(s0 + local, seg.pose_at(local), seg.curvature, seg.direction)
            )
        s0 += seg.length
    return samples


def nearest_on_path(path: RSPath, p: Pose2D, s_hint: float, window: float = 8.0) -> float:
    """Arc length of the nearest path point, searching forward from s_hint.

    Progress never moves backwards: the result is >= clamped s_hint.  The
    search spans at most ``window`` meters ahead (plus finishing the segment
    the window ends in), which keeps self-crossing paths well behaved.
    """
    total = path.total_length
    if not path.segments:
        return 0.0
    s_hint = min(max(s_hint, 0.0), total)
    best_s = s_hint
    best_d = math.inf
    for s0, s1, seg in _segment_bounds(path):
        if s1 < s_hint - _S_TOL:
            continue
        if s0 > s_hint + window:
            break
        s_cand, d = _nearest_arc_or_line(seg, s0, p.x, p.y, s_hint)
        if d < best_d - 1e-12:
            best_s, best_d = s_cand, d
    return best_s


def _nearest_arc_or_line(
    seg: PathSegment, s_seg0: float, px: float, py: float, s_min: float
) -> tuple[float, float]:
    lo = min(max(s_min - s_seg0, 0.0), seg.length)
    p0 = seg.start_pose
    if seg.steer is Steer.STRAIGHT:
        hx = math.cos(p0.theta) * seg.direction.value
        hy = math.sin(p0.theta) * seg.direction.value
        proj = (px - p0.x) * hx + (py - p0.y) * hy
        local = min(max(proj, lo), seg.length)
    else:
        k = seg.curvature
        # Center of the turn circle: left of heading for k > 0.
        cx = p0.x - math.sin(p0.theta) / k
        cy = p0.y + math.cos(p0.theta) / k
        # pose_at(s) position angle around the center, measured from center:
        # alpha(s) = theta(s) - pi/2 * sign(k), theta(s) = theta0 + k*dir*s.
        sign_k = 1.0 if k > 0 else -1.0
        alpha0 = p0.theta - sign_k * math.pi / 2.0
        alpha_p = math.atan2(py - cy, px - cx)
        rate = k * seg.direction.value  # d(alpha)/ds
        # Solve alpha0 + rate*s = alpha_p (mod 2pi) for s in [lo, length].
        base = wrap_angle(alpha_p - alpha0) / rate
        period = abs(2.0 * math.pi / rate)
        local = None
        cand = base - period * math.floor((base - lo) / period)
        if lo - 1e-12 <= cand <= seg.length + 1e-12:
            local = min(max(cand, lo), seg.length)
        if local is None:
            # No interior solution: nearest is an endpoint of the span.
            end_pose = seg.pose_at(seg.length)
            lo_pose = seg.pose_at(lo)
            d_lo = math.hypot(px - lo_pose.x, py - lo_pose.y)
            d_hi = math.hypot(px - end_pose.x, py - end_pose.y)
            local = lo if d_lo <= d_hi else seg.length
    pose = seg.pose_at(local)
    return s_seg0 + local, math.hypot(px - pose.x, py - pose.y)


def direction_runs(path: RSPath) -> list[tuple[float, float, Direction]]:
    """Maximal same-direction stretches as (s_start, s_end, direction).

    The boundaries between runs are the gear-change points where the vehicle
    must come to rest.
    """
    runs: list[tuple[float, float, Direction]] = []
    s0 = 0.0
    for seg in path.segments:
        s1 = s0 + seg.length
        if runs and runs[-1][2] is seg.direction:
            runs[-1] = (runs[-1][0], s1, seg.direction)
        else:
            runs.append((s0, s1, seg.direction))
        s0 = s1
    return runs
