"""Planar geometry, bounded-curvature path planning, and path queries."""
from .geometry import Pose2D, advance, advance_twist, angle_diff, wrap_angle
from .pathops import (
    PathSample,
    direction_runs,
    nearest_on_path,
    pose_along,
    sample_path,
)
from .planner import Direction, PathSegment, RSPath, Steer, plan_rs_path

__all__ = [
    "Direction",
    "PathSample",
    "PathSegment",
    "Pose2D",
    "RSPath",
    "Steer",
    "advance",
    "advance_twist",
    "angle_diff",
    "direction_runs",
    "nearest_on_path",
    "plan_rs_path",
    "pose_along",
    "sample_path",
    "wrap_angle",
]
