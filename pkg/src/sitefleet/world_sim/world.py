"""Ground-truth world: vehicle plant, walking personnel, sensor emission.

A single owner advances the world once per fixed timestep; everything else
reads immutable snapshots.  All randomness comes from labeled streams derived
from the scenario seed, so runs are bit-reproducible.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from ..errors import UnknownActor
from ..geom_planning import Pose2D, advance_twist, wrap_angle
from ..seeding import derive_rng
from .sensors import GnssFix, GnssQuality, ImuSample, ResolverSample, SensorConfig, in_window
from .vehicle import Command, VehicleSpec, VehicleState, payload_factor


@dataclass(frozen=True)
class ScriptedWalk:
    """Piecewise-linear walking script for a person actor."""

    waypoints: tuple[tuple[float, float], ...]
    speed: float = 1.2
    start_time: float = 0.0
    loop: bool = False

    def __post_init__(self):
        if len(self.waypoints) < 1:
            raise ValueError("script needs at least one waypoint")
        if self.speed < 0:
            raise ValueError("speed must be >= 0")


class _WalkEval:
    def __init__(self, script: ScriptedWalk) -> None:
        self.script = script
        self.cum = [0.0]
        pts = script.waypoints
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            self.cum.append(self.cum[-1] + math.hypot(x1 - x0, y1 - y0))
        self.total = self.cum[-1]

    def position(self, t: float) -> tuple[float, float]:
        s = self.script
        dist = max(0.0, t - s.start_time) * s.speed
        if self.total <= 0.0:
            return s.waypoints[0]
        if s.loop:
            dist = dist % self.total
        else:
            dist = min(dist, self.total)
        i = min(bisect_right(self.cum, dist), len(self.cum) - 1)
        x0, y0 = s.waypoints[i - 1]
        x1, y1 = s.waypoints[i]
        seg = self.cum[i] - self.cum[i - 1]
        f = 0.0 if seg <= 0 else (dist - self.cum[i - 1]) / seg
        return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))


class _VehicleSlot:
    def __init__(
        self,
        actor_id: str,
        spec: VehicleSpec,
        state: VehicleState,
        sensors: SensorConfig,
        seed: int,
        dt: float,
    ) -> None:
        self.id = actor_id
        self.spec = spec
        self.state = state
        self.sensors = sensors
        self.cmd = Command()
        self.stop_latched = False
        self.accel_truth = 0.0
        self.gnss_every = max(1, round(1.0 / (sensors.gnss_rate_hz * dt)))
        self.imu_per_tick = max(1, round(sensors.imu_rate_hz * dt))
        self.rng_gnss = derive_rng(seed, f"gnss/{actor_id}")
        self.rng_imu = derive_rng(seed, f"imu/{actor_id}")
        rng_bias = derive_rng(seed, f"imu-bias/{actor_id}")
        self.gyro_bias = rng_bias.normal(0.0, sensors.gyro_bias_sigma)
        self.accel_bias = rng_bias.normal(0.0, sensors.accel_bias_sigma)


class _PersonSlot:
    def __init__(
        self,
        actor_id: str,
        script: ScriptedWalk,
        gnss_tag: bool,
        sensors: SensorConfig,
        seed: int,
        dt: float,
    ) -> None:
        self.id = actor_id
        self.walk = _WalkEval(script)
        self.gnss_tag = gnss_tag
        self.sensors = sensors
        self.gnss_every = max(1, round(1.0 / (sensors.gnss_rate_hz * dt)))
        self.rng_gnss = derive_rng(seed, f"gnss/{actor_id}")


class World:
    """Owner of all ground truth.  Deterministic given (config, seed)."""

    def __init__(self, seed: int, dt: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.seed = seed
        self.dt = dt
        self.time = 0.0
        self.tick = 0
        self._vehicles: dict[str, _VehicleSlot] = {}
        self._persons: dict[str, _PersonSlot] = {}

    # --- construction ------------------------------------------------------

    def add_vehicle(
        self,
        actor_id: str,
        spec: VehicleSpec,
        state: VehicleState,
        sensors: SensorConfig | None = None,
    ) -> None:
        if actor_id in self._vehicles or actor_id in self._persons:
            raise ValueError(f"duplicate actor id {actor_id!r}")
        self._vehicles[actor_id] = _VehicleSlot(
            actor_id, spec, state, sensors or SensorConfig(), self.seed, self.dt
        )

    def add_person(
        self,
        actor_id: str,
        script: ScriptedWalk,
        gnss_tag: bool = True,
        sensors: SensorConfig | None = None,
    ) -> None:
        if actor_id in self._vehicles or actor_id in self._persons:
            raise ValueError(f"duplicate actor id {actor_id!r}")
        self._persons[actor_id] = _PersonSlot(
            actor_id, script, gnss_tag, sensors or SensorConfig(), self.seed, self.dt
        )

    # --- accessors ---------------------------------------------------------

    @property
    def vehicle_ids(self) -> list[str]:
        return sorted(self._vehicles)

    @property
    def person_ids(self) -> list[str]:
        return sorted(self._persons)

    def _vehicle(self, actor_id: str) -> _VehicleSlot:
        try:
            return self._vehicles[actor_id]
        except KeyError:
            raise UnknownActor(f"no vehicle {actor_id!r}") from None

    def vehicle_spec(self, actor_id: str) -> VehicleSpec:
        return self._vehicle(actor_id).spec

    def vehicle_state(self, actor_id: str) -> VehicleState:
        return self._vehicle(actor_id).state

    def is_stop_latched(self, actor_id: str) -> bool:
        return self._vehicle(actor_id).stop_latched

    def commanded(self, actor_id: str) -> Command:
        return self._vehicle(actor_id).cmd

    def person_position(self, actor_id: str) -> tuple[float, float]:
        try:
            slot = self._persons[actor_id]
        except KeyError:
            raise UnknownActor(f"no person {actor_id!r}") from None
        return slot.walk.position(self.time)

    # --- actuation boundary ------------------------------------------------

    def apply_command(self, actor_id: str, cmd: Command) -> None:
        """Latch new references, clamped to spec limits.  Ignored while the
        vehicle is remote-stopped."""
        slot = self._vehicle(actor_id)
        if slot.stop_latched:
            return
        spec = slot.spec
        slot.cmd = Command(
            v_ref=min(max(cmd.v_ref, -spec.v_max), spec.v_max),
            omega_ref=min(max(cmd.omega_ref, -spec.omega_max), spec.omega_max),
            upper_rate_ref=min(
                max(cmd.upper_rate_ref, -spec.upper_rate_max), spec.upper_rate_max
            ),
        )

    def engage_stop(self, actor_id: str) -> bool:
        """Latch the hardware stop.  Returns True if this call set the latch."""
        slot = self._vehicle(actor_id)
        was = slot.stop_latched
        slot.stop_latched = True
        slot.cmd = Command()
        return not was

    def release_stop(self, actor_id: str) -> None:
        slot = self._vehicle(actor_id)
        slot.stop_latched = False
        slot.cmd = Command()

    # --- dynamics ----------------------------------------------------------

    def step(self, dt: float) -> None:
        if abs(dt - self.dt) > 1e-12:
            raise ValueError(f"step dt {dt} != configured timestep {self.dt}")
        for actor_id in sorted(self._vehicles):
            self._step_vehicle(self._vehicles[actor_id], dt)
        self.tick += 1
        self.time = self.tick * self.dt  # multiplicative: no drift over long runs

    def _step_vehicle(self, slot: _VehicleSlot, dt: float) -> None:
        spec = slot.spec
        st = slot.state
        f = payload_factor(st.payload_mass)
        lag = 1.0 - math.exp(-dt / spec.actuator_tau)

        if slot.stop_latched:
            step = spec.emergency_decel * dt
            v = st.v - math.copysign(min(abs(st.v), step), st.v)
            omega = st.omega - math.copysign(min(abs(st.omega), step), st.omega)
            upper_rate = st.upper_rate - math.copysign(
                min(abs(st.upper_rate), step), st.upper_rate
            )
        else:
            cmd = slot.cmd
            dv = lag * (cmd.v_ref - st.v)
            accel_limit = (spec.a_max if abs(st.v + dv) >= abs(st.v) else spec.a_dec)
            dv = min(max(dv, -accel_limit * f * dt), accel_limit * f * dt)
            v = min(max(st.v + dv, -spec.v_max), spec.v_max)
            omega = st.omega + lag * (cmd.omega_ref - st.omega)
            omega = min(max(omega, -spec.omega_max), spec.omega_max)
            upper_rate = st.upper_rate + lag * (cmd.upper_rate_ref - st.upper_rate)
            upper_rate = min(max(upper_rate, -spec.upper_rate_max), spec.upper_rate_max)

        slot.accel_truth = (v - st.v) / dt
        st.pose = advance_twist(st.pose, v * dt, omega * dt)
        st.upper_angle = wrap_angle(st.upper_angle + upper_rate * dt)
        st.v = v
        st.omega = omega
        st.upper_rate = upper_rate

    # --- sensors -----------------------------------------------------------

    def emit_sensors(self, actor_id: str):
        """Readings for one actor at the current sim time.

        Vehicles produce an optional position fix plus this tick's inertial
        samples; tagged persons produce position fixes only.
        """
        if actor_id in self._vehicles:
            return self._emit_vehicle(self._vehicles[actor_id])
        if actor_id in self._persons:
            return self._emit_person(self._persons[actor_id])
        raise UnknownActor(f"no actor {actor_id!r}")

    def _gnss_fix(self, cfg, rng, x: float, y: float) -> GnssFix:
        t = self.time
        if in_window(t, cfg.gnss_outages):
            return GnssFix(stamp=t, quality=GnssQuality.NONE)
        if in_window(t, cfg.gnss_float_windows):
            sigma = cfg.gnss_sigma_float
            quality = GnssQuality.FLOAT
        else:
            sigma = cfg.gnss_sigma_fixed
            quality = GnssQuality.RTK_FIXED
        nx, ny = rng.normal(0.0, 1.0, 2)
        return GnssFix(stamp=t, quality=quality, x=x + sigma * nx, y=y + sigma * ny)

    def _emit_vehicle(self, slot: _VehicleSlot):
        out = []
        cfg = slot.sensors
        if self.tick % slot.gnss_every == 0:
            pose = slot.state.pose
            out.append(self._gnss_fix(cfg, slot.rng_gnss, pose.x, pose.y))
        n = slot.imu_per_tick
        sub = self.dt / n
        for i in range(n):
            gyro_n, acc_n = slot.rng_imu.normal(0.0, 1.0, 2)
            out.append(
                ImuSample(
                    stamp=self.time - (n - 1 - i) * sub,
                    yaw_rate=slot.state.omega
                    + cfg.gyro_sigma * gyro_n
                    + slot.gyro_bias,
                    accel=slot.accel_truth
                    + cfg.accel_sigma * acc_n
                    + slot.accel_bias,
                )
            )
        out.append(
            ResolverSample(stamp=self.time, angle=slot.state.upper_angle + cfg.resolver_bias)
        )
        return out

    def _emit_person(self, slot: _PersonSlot):
        if not slot.gnss_tag or self.tick % slot.gnss_every != 0:
            return []
        x, y = slot.walk.position(self.time)
        return [self._gnss_fix(slot.sensors, slot.rng_gnss, x, y)]
