"""Sensor reading types and noise configuration."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class GnssQuality(Enum):
    RTK_FIXED = "RtkFixed"
    FLOAT = "Float"
    NONE = "None"


@dataclass(frozen=True)
class GnssFix:
    stamp: float
    quality: GnssQuality
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class ImuSample:
    stamp: float
    yaw_rate: float
    accel: float


@dataclass(frozen=True)
class ResolverSample:
    """Upper-body angle relative to the lower body, from the slew resolver."""

    stamp: float
    angle: float


@dataclass(frozen=True)
class SensorConfig:
    """Rates, noise levels, and degradation windows for one actor's sensors.

    Outage windows silence the position fix entirely (quality None); float
    windows degrade it to Float quality with the larger sigma.  The IMU bias
    is drawn once per run from bias_sigma; the default 0 keeps the 4-state
    filter's white-noise assumption exact.
    """

    gnss_rate_hz: float = 5.0
    gnss_sigma_fixed: float = 0.02
    gnss_sigma_float: float = 0.5
    gnss_outages: tuple[tuple[float, float], ...] = ()
    gnss_float_windows: tuple[tuple[float, float], ...] = ()
    imu_rate_hz: float = 100.0
    gyro_sigma: float = 0.005
    accel_sigma: float = 0.05
    gyro_bias_sigma: float = 0.0
    accel_bias_sigma: float = 0.0
    resolver_bias: float = 0.0


def in_window(t: float, windows: tuple[tuple[float, float], ...]) -> bool:
    return any(t0 <= t <= t1 for t0, t1 in windows)
