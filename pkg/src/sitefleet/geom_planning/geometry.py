"""Planar poses and angle helpers.

Headings are radians in (-pi, pi], x is east, y is north.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

TAU = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    r = math.remainder(theta, TAU)
    if r <= -math.pi:
        r += TAU
    return r


def angle_diff(a: float, b: float) -> float:
    """Shortest signed angular difference a - b, in (-pi, pi]."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.theta})")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def to_local(self, p: "Pose2D") -> "Pose2D":
        """Express pose p in this pose's frame."""
        dx = p.x - self.x
        dy = p.y - self.y
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(c * dx + s * dy, -s * dx + c * dy, p.theta - self.theta)

    def point_to_local(self, px: float, py: float) -> tuple[float, float]:
        dx = px - self.x
        dy = py - self.y
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * dx + s * dy, -s * dx + c * dy)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def is_close(self, other: "Pose2D", pos_tol: float = 1e-9, ang_tol: float = 1e-9) -> bool:
        return (
            abs(self.x - other.x) <= pos_tol
            and abs(self.y - other.y) <= pos_tol
            and abs(angle_diff(self.theta, other.theta)) <= ang_tol
        )


def advance_twist(pose: Pose2D, ds: float, dtheta: float) -> Pose2D:
    """Exact pose update for a constant twist (ds, dtheta) over one step.

    ds is the signed distance along the body x axis.  No small-angle
    approximation: the chord is evaluated in closed form.
    """
    if abs(dtheta) < 1e-12:
        return Pose2D(
            pose.x + ds * math.cos(pose.theta),
            pose.y + ds * math.sin(pose.theta),
            pose.theta + dtheta,
        )
    radius = ds / dtheta
    new_theta = pose.theta + dtheta
    return Pose2D(
        pose.x + radius * (math.sin(new_theta) - math.sin(pose.theta)),
        pose.y - radius * (math.cos(new_theta) - math.cos(pose.theta)),
        new_theta,
    )


def advance(pose: Pose2D, distance: float, curvature: float, direction: int) -> Pose2D:
    """Move a signed-direction unicycle along a constant-curvature segment.

    ``distance`` is the (nonnegative) arc length traveled, ``direction`` +1
    forward / -1 reverse.  Exact closed form, no integration error.
    """
    ds = direction * distance
    if abs(curvature) < 1e-15:
        return Pose2D(
            pose.x + ds * math.cos(pose.theta),
            pose.y + ds * math.sin(pose.theta),
            pose.theta,
        )
    dtheta = ds * curvature
    new_theta = pose.theta + dtheta
    return Pose2D(
        pose.x + (math.sin(new_theta) - math.sin(pose.theta)) / curvature,
        pose.y - (math.cos(new_theta) - math.cos(pose.theta)) / curvature,
        new_theta,
    )
