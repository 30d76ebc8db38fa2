"""Mission vocabulary executed by a carrier agent.

A mission is an ordered action list. Actions run strictly in sequence and the
mission is complete when every action has completed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..geom_planning import RSPath


@dataclass(frozen=True)
class FollowPath:
    """Drive one planned path at the given cruise speed."""

    path: RSPath
    cruise_speed: float

    def __post_init__(self) -> None:
        if not self.cruise_speed > 0.0:
            raise ValueError(f"cruise_speed must be positive, got {self.cruise_speed}")


@dataclass(frozen=True)
class RotateUpper:
    """Slew the upper body to an absolute angle in radians."""

    target_angle: float


@dataclass(frozen=True)
class Dwell:
    """Hold position for a fixed duration in seconds."""

    duration: float

    def __post_init__(self) -> None:
        if self.duration < 0.0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")


Action = Union[FollowPath, RotateUpper, Dwell]


@dataclass(frozen=True)
class Mission:
    mission_id: str
    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
