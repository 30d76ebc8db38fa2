"""Shortest curvature-bounded planar paths with forward and reverse motion.

Plans between two poses for a vehicle with a minimum turning radius, allowing
gear changes.  Candidate paths come from the classical word families (arc /
straight sequences of at most five segments); the shortest valid candidate
wins.  All family formulas operate in a canonical frame: start at the origin
heading +x, distances scaled by the turning radius.

Every candidate is verified by exact forward integration before it competes,
so a degenerate family can only lose, never corrupt the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..errors import InvalidRadius
from .geometry import Pose2D, advance, wrap_angle

HALF_PI = math.pi / 2.0


class Steer(Enum):
    LEFT = "L"
    STRAIGHT = "S"
    RIGHT = "R"


class Direction(Enum):
    FORWARD = 1
    REVERSE = -1


_STEER_SIGN = {Steer.LEFT: 1.0, Steer.STRAIGHT: 0.0, Steer.RIGHT: -1.0}
_STEER_FLIP = {Steer.LEFT: Steer.RIGHT, Steer.STRAIGHT: Steer.STRAIGHT, Steer.RIGHT: Steer.LEFT}


@dataclass(frozen=True)
class PathSegment:
    """One constant-curvature piece of a planned path.

    ``length`` is arc length in meters (>= 0); ``curvature`` is signed,
    positive for left turns, zero for straights.
    """

    steer: Steer
    direction: Direction
    length: float
    curvature: float
    start_pose: Pose2D

    @property
    def end_pose(self) -> Pose2D:
        return advance(self.start_pose, self.length, self.curvature, self.direction.value)

    def pose_at(self, s: float) -> Pose2D:
        """Pose after traveling arc length s (0 <= s <= length) into the segment."""
        return advance(self.start_pose, s, self.curvature, self.direction.value)


@dataclass(frozen=True)
class RSPath:
    segments: tuple[PathSegment, ...]
    r_min: float
    start_pose: Pose2D

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.segments)

    @property
    def end_pose(self) -> Pose2D:
        return self.segments[-1].end_pose if self.segments else self.start_pose

    @property
    def n_reversals(self) -> int:
        return sum(
            1
            for a, b in zip(self.segments, self.segments[1:])
            if a.direction is not b.direction
        )


# A word element in the canonical (radius 1) frame: (param, steer, gear).
# Negative params flip the gear: traversing an element backwards covers the
# same displacement, so magnitudes stay nonnegative.
_Element = tuple[float, Steer, float]


def _elem(param: float, steer: Steer, gear: float) -> _Element:
    if param >= 0.0:
        return (param, steer, gear)
    return (-param, steer, -gear)


def _polar(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(y, x)


# --- the twelve base word families -----------------------------------------
# Each returns zero or one raw candidate (list of elements) reaching (x, y,
# phi) from the origin.  Reflections and time reversals of these cover the
# full candidate set.


def _lsl(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    v = wrap_angle(phi - t)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.STRAIGHT, 1.0),
        _elem(v, Steer.LEFT, 1.0),
    ]]


def _lsr(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if u1 * u1 < 4.0:
        return []
    u = math.sqrt(u1 * u1 - 4.0)
    t = wrap_angle(t1 + math.atan2(2.0, u))
    v = wrap_angle(t - phi)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.STRAIGHT, 1.0),
        _elem(v, Steer.RIGHT, 1.0),
    ]]


def _lrl_mid_reverse(x, y, phi):
    # C|C|C: middle arc in reverse.
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho > 4.0:
        return []
    a = math.acos(rho / 4.0)
    t = wrap_angle(theta + HALF_PI + a)
    u = wrap_angle(math.pi - 2.0 * a)
    v = wrap_angle(phi - t - u)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.RIGHT, -1.0),
        _elem(v, Steer.LEFT, 1.0),
    ]]


def _lrl_tail_reverse(x, y, phi):
    # C|CC: last two arcs in reverse.
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho > 4.0:
        return []
    a = math.acos(rho / 4.0)
    t = wrap_angle(theta + HALF_PI + a)
    u = wrap_angle(math.pi - 2.0 * a)
    v = wrap_angle(t + u - phi)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.RIGHT, -1.0),
        _elem(v, Steer.LEFT, -1.0),
    ]]


def _lrl_head_forward(x, y, phi):
    # CC|C: gear change before the last arc.
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho > 4.0:
        return []
    u = math.acos(1.0 - rho * rho / 8.0)
    sin_u = math.sin(u)
    if rho < 1e-12:
        return []
    val = 2.0 * sin_u / rho
    if not -1.0 <= val <= 1.0:
        return []
    a = math.asin(val)
    t = wrap_angle(theta + HALF_PI - a)
    v = wrap_angle(t - u - phi)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.RIGHT, 1.0),
        _elem(v, Steer.LEFT, -1.0),
    ]]


def _lrlr_equal_forward(x, y, phi):
    # CCu|CuC: two equal middle arcs, gear change in the middle.
    rho, theta = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if rho > 4.0:
        return []
    if rho <= 2.0:
        a = math.acos((rho + 2.0) / 4.0)
        t = wrap_angle(theta + HALF_PI + a)
        u = wrap_angle(a)
        v = wrap_angle(phi - t + 2.0 * u)
    else:
        a = math.acos((rho - 2.0) / 4.0)
        t = wrap_angle(theta + HALF_PI - a)
        u = wrap_angle(math.pi - a)
        v = wrap_angle(phi - t + 2.0 * u)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.RIGHT, 1.0),
        _elem(u, Steer.LEFT, -1.0),
        _elem(v, Steer.RIGHT, -1.0),
    ]]


def _lrlr_equal_reverse_mid(x, y, phi):
    # C|CuCu|C: two equal middle arcs traversed in reverse.
    rho, theta = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u1 = (20.0 - rho * rho) / 16.0
    if rho > 6.0 or not 0.0 <= u1 <= 1.0:
        return []
    u = math.acos(u1)
    sin_u = math.sin(u)
    if rho < 1e-12:
        return []
    val = 2.0 * sin_u / rho
    if not -1.0 <= val <= 1.0:
        return []
    a = math.asin(val)
    t = wrap_angle(theta + HALF_PI + a)
    v = wrap_angle(t - phi)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.RIGHT, -1.0),
        _elem(u, Steer.LEFT, -1.0),
        _elem(v, Steer.RIGHT, 1.0),
    ]]


def _lr90sl(x, y, phi):
    # C|C(pi/2)SC: quarter arc then straight, tail in reverse.
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho < 2.0:
        return []
    u = math.sqrt(rho * rho - 4.0) - 2.0
    a = math.atan2(2.0, u + 2.0)
    t = wrap_angle(theta + HALF_PI + a)
    v = wrap_angle(t - phi + HALF_PI)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(HALF_PI, Steer.RIGHT, -1.0),
        _elem(u, Steer.STRAIGHT, -1.0),
        _elem(v, Steer.LEFT, -1.0),
    ]]


def _lsr90l(x, y, phi):
    # CSC(pi/2)|C: mirror of the previous family.
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho < 2.0:
        return []
    u = math.sqrt(rho * rho - 4.0) - 2.0
    a = math.atan2(u + 2.0, 2.0)
    t = wrap_angle(theta + HALF_PI - a)
    v = wrap_angle(t - phi - HALF_PI)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.STRAIGHT, 1.0),
        _elem(HALF_PI, Steer.RIGHT, 1.0),
        _elem(v, Steer.LEFT, -1.0),
    ]]


def _lr90sr(x, y, phi):
    # C|C(pi/2)SC with matching final turn.
    rho, theta = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if rho < 2.0:
        return []
    t = wrap_angle(theta + HALF_PI)
    u = rho - 2.0
    v = wrap_angle(phi - t - HALF_PI)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(HALF_PI, Steer.RIGHT, -1.0),
        _elem(u, Steer.STRAIGHT, -1.0),
        _elem(v, Steer.RIGHT, -1.0),
    ]]


def _lsl90r(x, y, phi):
    # CSC(pi/2)|C with matching first turn.
    rho, theta = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if rho < 2.0:
        return []
    t = wrap_angle(theta)
    u = rho - 2.0
    v = wrap_angle(phi - t - HALF_PI)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(u, Steer.STRAIGHT, 1.0),
        _elem(HALF_PI, Steer.LEFT, 1.0),
        _elem(v, Steer.RIGHT, -1.0),
    ]]


def _lr90sl90r(x, y, phi):
    # C|C(pi/2)SC(pi/2)|C: five segments, two quarter arcs.
    rho, theta = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if rho < 4.0:
        return []
    u = math.sqrt(rho * rho - 4.0) - 4.0
    a = math.atan2(2.0, u + 4.0)
    t = wrap_angle(theta + HALF_PI + a)
    v = wrap_angle(t - phi)
    return [[
        _elem(t, Steer.LEFT, 1.0),
        _elem(HALF_PI, Steer.RIGHT, -1.0),
        _elem(u, Steer.STRAIGHT, -1.0),
        _elem(HALF_PI, Steer.LEFT, -1.0),
        _elem(v, Steer.RIGHT, 1.0),
    ]]


_BASE_FAMILIES = (
    _lsl,
    _lsr,
    _lrl_mid_reverse,
    _lrl_tail_reverse,
    _lrl_head_forward,
    _lrlr_equal_forward,
    _lrlr_equal_reverse_mid,
    _lr90sl,
    _lsr90l,
    _lr90sr,
    _lsl90r,
    _lr90sl90r,
)

_EPS = 1e-12


def _timeflip(word: list[_Element]) -> list[_Element]:
    return [(p, s, -g) for (p, s, g) in word]


def _reflect(word: list[_Element]) -> list[_Element]:
    return [(p, _STEER_FLIP[s], g) for (p, s, g) in word]


def _word_end(word: list[_Element]) -> tuple[float, float, float]:
    """Exact endpoint of a canonical-frame word starting from the origin."""
    x = y = theta = 0.0
    for param, steer, gear in word:
        sigma = _STEER_SIGN[steer]
        ds = gear * param
        if sigma == 0.0:
            x += ds * math.cos(theta)
            y += ds * math.sin(theta)
        else:
            new_theta = theta + sigma * ds
            x += (math.sin(new_theta) - math.sin(theta)) * sigma
            y -= (math.cos(new_theta) - math.cos(theta)) * sigma
            theta = new_theta
    return x, y, theta


def _candidate_words(x: float, y: float, phi: float) -> list[list[_Element]]:
    """All word candidates for goal (x, y, phi), endpoint-verified."""
    out = []
    inputs = (
        (x, y, phi, False, False),
        (-x, y, -phi, True, False),   # time reversal
        (x, -y, -phi, False, True),   # reflection
        (-x, -y, phi, True, True),
    )
    for fam in _BASE_FAMILIES:
        for (xi, yi, pi_, flip, refl) in inputs:
            for raw in fam(xi, yi, pi_):
                word = raw
                if flip:
                    word = _timeflip(word)
                if refl:
                    word = _reflect(word)
                word = [e for e in word if e[0] > _EPS]
                ex, ey, eth = _word_end(word)
                if (
                    abs(ex - x) < 1e-8
                    and abs(ey - y) < 1e-8
                    and abs(wrap_angle(eth - phi)) < 1e-8
                ):
                    out.append(word)
    return out


def _word_length(word: list[_Element]) -> float:
    return sum(p for p, _, _ in word)


def _word_reversals(word: list[_Element]) -> int:
    return sum(1 for a, b in zip(word, word[1:]) if a[2] != b[2])


def plan_rs_path(start: Pose2D, goal: Pose2D, r_min: float) -> RSPath:
    """Plan the minimum-length bounded-curvature path from start to goal.

    Ties break toward fewer segments, then fewer gear changes.  Returns an
    empty path when start and goal coincide.
    """
    if not (r_min > 0.0) or not math.isfinite(r_min):
        raise InvalidRadius(f"r_min must be > 0, got {r_min}")

    local = start.to_local(goal)
    x = local.x / r_min
    y = local.y / r_min
    phi = wrap_angle(local.theta)

    if abs(x) < 1e-12 and abs(y) < 1e-12 and abs(phi) < 1e-12:
        return RSPath(segments=(), r_min=r_min, start_pose=start)

    candidates = _candidate_words(x, y, phi)
    if not candidates:
        # Cannot happen for finite inputs; guarded for safety.
        raise InvalidRadius("no candidate word families produced a path")

    best = min(
        enumerate(candidates),
        key=lambda kv: (
            round(_word_length(kv[1]), 9),
            len(kv[1]),
            _word_reversals(kv[1]),
            kv[0],
        ),
    )[1]

    segments = []
    pose = start
    for param, steer, gear in best:
        curvature = _STEER_SIGN[steer] / r_min
        seg = PathSegment(
            steer=steer,
            direction=Direction.FORWARD if gear > 0 else Direction.REVERSE,
            length=param * r_min,
            curvature=curvature,
            start_pose=pose,
        )
        segments.append(seg)
        pose = seg.end_pose
    return RSPath(segments=tuple(segments), r_min=r_min, start_pose=start)
