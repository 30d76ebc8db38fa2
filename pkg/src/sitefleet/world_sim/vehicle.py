"""Vehicle data model: physical spec, dynamic state, actuation command."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..geom_planning import Pose2D, wrap_angle


@dataclass(frozen=True)
class VehicleSpec:
    """Physical limits and dimensions of one tracked carrier.

    Dimension defaults follow a 6.0 x 2.88 x 3.2 m machine limited to
    10 km/h.  footprint_radius must enclose the body diagonal.
    """

    length: float = 6.0
    width: float = 2.88
    height: float = 3.2
    v_max: float = 2.78
    a_max: float = 4.0
    a_dec: float = 3.0
    omega_max: float = 0.5
    upper_rate_max: float = 0.5
    r_min: float = 7.0
    footprint_radius: float = 3.33
    actuator_tau: float = 0.3
    emergency_decel: float = 10.0

    def __post_init__(self):
        for name in (
            "length", "width", "height", "v_max", "a_max", "a_dec",
            "omega_max", "upper_rate_max", "r_min", "footprint_radius",
            "actuator_tau", "emergency_decel",
        ):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"VehicleSpec.{name} must be finite and > 0, got {val}")
        half_diag = math.hypot(self.length, self.width) / 2.0
        if self.footprint_radius < half_diag - 1e-9:
            raise ValueError(
                f"footprint_radius {self.footprint_radius} smaller than half "
                f"body diagonal {half_diag:.4f}"
            )


@dataclass
class VehicleState:
    pose: Pose2D
    v: float = 0.0
    omega: float = 0.0
    upper_angle: float = 0.0
    upper_rate: float = 0.0
    payload_mass: float = 0.0

    def __post_init__(self):
        if self.payload_mass < 0:
            raise ValueError(f"payload_mass must be >= 0, got {self.payload_mass}")
        self.upper_angle = wrap_angle(self.upper_angle)


@dataclass(frozen=True)
class Command:
    """Actuation references from the on-vehicle controller to the plant."""

    v_ref: float = 0.0
    omega_ref: float = 0.0
    upper_rate_ref: float = 0.0


def payload_factor(mass: float, reference_mass: float = 20000.0) -> float:
    """Acceleration scaling for a loaded vehicle: 1 when empty, 1/2 at the
    reference payload mass."""
    return 1.0 / (1.0 + mass / reference_mass)
