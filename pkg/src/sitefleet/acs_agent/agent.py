"""Per-vehicle autonomous control: one sequential reactor per tick.

Each tick the agent consumes, in order: remote commands delivered this tick,
then sensor readings (inertial predictions before the position update), then
runs its fault monitors and, only in Executing mode, the motion controllers.
Outputs are plain records; the runner owns actually applying commands to the
plant and moving messages, so agents stay free of shared mutable state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..geom_planning import Pose2D, angle_diff, direction_runs, nearest_on_path
from ..world_sim import Command, GnssFix, GnssQuality, ImuSample, ResolverSample, VehicleSpec
from .control import ControlConfig, PidState, longitudinal_control, pure_pursuit, upper_body_pid
from .estimator import EstimatorConfig, Ekf
from .missions import Dwell, FollowPath, Mission, RotateUpper
from .state_machine import (
    AcsMode,
    AcsState,
    FaultKind,
    FmsCommand,
    FmsCommandKind,
    Heartbeat,
    fault_transition,
    handle_fms_message,
)


@dataclass(frozen=True)
class AgentConfig:
    conn_timeout: float = 1.0
    sensor_timeout: float = 0.5
    div_threshold: float = 4.0
    heartbeat_period: float = 0.2
    # a recoverable fault condition must stay clear this long before the
    # fault is dropped (and, where allowed, execution resumes on its own)
    resume_hold: float = 1.0
    auto_resume_sensor_timeout: bool = True
    auto_resume_connection_loss: bool = False
    control: ControlConfig = field(default_factory=ControlConfig)

    def __post_init__(self) -> None:
        for name in ("conn_timeout", "sensor_timeout", "div_threshold",
                     "heartbeat_period", "resume_hold"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


def detect_faults(last_msg_age: float, gnss_age: float, imu_age: float,
                  position_cov_trace: float, hardware_failed: bool,
                  config: AgentConfig) -> Optional[FaultKind]:
    """Highest-severity fault condition currently present, or None.

    Severity order: hardware failure, localization divergence, connection
    loss, sensor timeout. GNSS age counts from the last fix that carried a
    position; a receiver in outage therefore ages like a silent sensor.
    """
    if hardware_failed:
        return FaultKind.HARDWARE_FAILURE
    if position_cov_trace > config.div_threshold:
        return FaultKind.LOCALIZATION_DIVERGENCE
    if last_msg_age > config.conn_timeout:
        return FaultKind.CONNECTION_LOSS
    if gnss_age > config.sensor_timeout or imu_age > config.sensor_timeout:
        return FaultKind.SENSOR_TIMEOUT
    return None


@dataclass
class AgentOutput:
    command: Command
    engage_stop: bool
    release_stop: bool
    heartbeat: Optional[Heartbeat]
    events: list[dict]
    telemetry: dict


_ZERO = Command(v_ref=0.0, omega_ref=0.0, upper_rate_ref=0.0)


class Agent:
    def __init__(self, actor_id: str, spec: VehicleSpec, initial_pose: Pose2D,
                 config: Optional[AgentConfig] = None,
                 est_config: Optional[EstimatorConfig] = None,
                 start_time: float = 0.0) -> None:
        self.actor_id = actor_id
        self.spec = spec
        self.config = config or AgentConfig()
        self.state = AcsState()
        self.ekf = Ekf(est_config or EstimatorConfig(),
                       initial_pose.x, initial_pose.y, initial_pose.theta,
                       v=0.0, stamp=start_time)
        self.last_msg_time = start_time
        self.last_gnss_time = start_time
        self.last_imu_time = start_time
        self.upper_angle = 0.0
        self.hardware_failed = False
        self._next_heartbeat = start_time
        self._pending_route: Optional[tuple[Mission, int]] = None
        self._fault_clear_elapsed = 0.0
        self._reset_action_progress()

    # --- small state helpers ----------------------------------------------

    def _reset_action_progress(self) -> None:
        self._runs = None
        self._run_index = 0
        self._s_hint = 0.0
        self._goal_announced = False
        self._pid = PidState()
        self._hold_elapsed = 0.0
        self._dwell_elapsed = 0.0

    @property
    def est_pose(self) -> Pose2D:
        m = self.ekf.mean
        return Pose2D(float(m[0]), float(m[1]), float(m[2]))

    def inject_hardware_failure(self) -> None:
        """Scenario hook: flips the self-test flag the monitors watch."""
        self.hardware_failed = True

    # --- the reactor -------------------------------------------------------

    def tick(self, now: float, dt: float, deliveries: Sequence[FmsCommand],
             readings: Sequence[object]) -> AgentOutput:
        events: list[dict] = []
        # the reactor is sequential, so the last latch-affecting transition
        # within the tick decides what the plant sees
        latch_action: Optional[str] = None

        for cmd in deliveries:
            self.last_msg_time = now
            if cmd.kind is FmsCommandKind.PING:
                continue
            if cmd.kind is FmsCommandKind.UPDATE_MISSION:
                self._queue_route_update(cmd, events)
                continue
            prev_mode = self.state.mode
            accepted, cmd_events = handle_fms_message(self.state, cmd)
            events.extend(cmd_events)
            if not accepted:
                continue
            if cmd.kind is FmsCommandKind.ASSIGN_MISSION:
                self._reset_action_progress()
                self._pending_route = None
            elif cmd.kind is FmsCommandKind.REMOTE_STOP:
                if prev_mode is not AcsMode.STOPPED_NON_RECOVERABLE:
                    latch_action = "engage"
            elif cmd.kind is FmsCommandKind.RESTART:
                latch_action = "release"
                self.hardware_failed = False
                self._pending_route = None
                self._fault_clear_elapsed = 0.0
                self._reset_action_progress()

        self._ingest_sensors(now, dt, readings, events)
        if self._monitor_faults(now, dt, events):
            latch_action = "engage"
        engage = latch_action == "engage"
        release = latch_action == "release"

        command = _ZERO
        if self.state.mode is AcsMode.EXECUTING and self.state.mission is not None:
            command = self._execute(now, dt, events)

        heartbeat = None
        if now >= self._next_heartbeat - 1e-9:
            m = self.ekf.mean
            heartbeat = Heartbeat(
                actor_id=self.actor_id, stamp=now,
                x=float(m[0]), y=float(m[1]), theta=float(m[2]), v=float(m[3]),
                mode=self.state.mode,
                mission_id=self.state.mission.mission_id if self.state.mission else None,
                action_index=self.state.action_index,
                fault=self.state.fault,
            )
            self._next_heartbeat += self.config.heartbeat_period

        m = self.ekf.mean
        telemetry = {
            "stamp": now,
            "mode": self.state.mode.value,
            "x": float(m[0]), "y": float(m[1]), "theta": float(m[2]), "v": float(m[3]),
            "cov_trace": self.ekf.cov_trace,
            "action_index": self.state.action_index,
            "v_ref": command.v_ref,
            "omega_ref": command.omega_ref,
            "upper_rate_ref": command.upper_rate_ref,
        }
        return AgentOutput(command=command, engage_stop=engage, release_stop=release,
                           heartbeat=heartbeat, events=events, telemetry=telemetry)

    # --- inbox -------------------------------------------------------------

    def _queue_route_update(self, cmd: FmsCommand, events: list[dict]) -> None:
        st = self.state
        ok_modes = (AcsMode.EXECUTING, AcsMode.PAUSED_RECOVERABLE)
        if st.mode not in ok_modes or st.mission is None or cmd.mission is None:
            events.append({"kind": "Rejected", "command": cmd.kind.value,
                           "mode": st.mode.value})
            return
        after = cmd.after_index if cmd.after_index is not None else st.action_index
        if after < st.action_index:
            # the anchor action already finished; the new route's start pose
            # no longer matches reality
            events.append({"kind": "RouteUpdateStale", "after_index": after,
                           "action_index": st.action_index})
            return
        self._pending_route = (cmd.mission, after)
        events.append({"kind": "RouteUpdateQueued",
                       "mission_id": cmd.mission.mission_id, "after_index": after})

    # --- sensing -----------------------------------------------------------

    def _ingest_sensors(self, now: float, dt: float, readings: Sequence[object],
                        events: list[dict]) -> None:
        imu = [r for r in readings if isinstance(r, ImuSample)]
        if imu:
            sub = dt / len(imu)
            for smp in imu:
                self.ekf.predict(smp.yaw_rate, smp.accel, sub)
            self.last_imu_time = now
        for r in readings:
            if isinstance(r, GnssFix):
                if r.quality is GnssQuality.NONE:
                    continue
                self.last_gnss_time = now
                result = self.ekf.update_gnss(r)
                if not result.accepted:
                    events.append({"kind": "GnssRejected", "nis": round(result.nis, 3)})
            elif isinstance(r, ResolverSample):
                self.upper_angle = r.angle

    # --- fault supervision --------------------------------------------------

    def _monitor_faults(self, now: float, dt: float, events: list[dict]) -> bool:
        """Run the monitors; returns True when a new stop latch is needed."""
        st = self.state
        det = detect_faults(
            last_msg_age=now - self.last_msg_time,
            gnss_age=now - self.last_gnss_time,
            imu_age=now - self.last_imu_time,
            position_cov_trace=self.ekf.position_cov_trace,
            hardware_failed=self.hardware_failed,
            config=self.config,
        )
        if det is not None:
            self._fault_clear_elapsed = 0.0
            if det is st.fault:
                return False
            prev_mode = st.mode
            new_mode = fault_transition(prev_mode, det)
            st.fault = det
            events.append({"kind": "FaultRaised", "fault": det.value,
                           "recoverable": det.recoverable})
            if new_mode is prev_mode:
                return False
            st.mode = new_mode
            if new_mode is AcsMode.PAUSED_RECOVERABLE:
                st.pause_cause = "fault"
            events.append({"kind": "ModeChanged", "from": prev_mode.value,
                           "to": new_mode.value, "cause": det.value})
            return new_mode is AcsMode.STOPPED_NON_RECOVERABLE

        if st.fault is None or not st.fault.recoverable:
            return False
        self._fault_clear_elapsed += dt
        if self._fault_clear_elapsed < self.config.resume_hold - 1e-9:
            return False
        fault = st.fault
        st.fault = None
        self._fault_clear_elapsed = 0.0
        events.append({"kind": "FaultCleared", "fault": fault.value})
        auto = (fault is FaultKind.SENSOR_TIMEOUT and self.config.auto_resume_sensor_timeout) or (
            fault is FaultKind.CONNECTION_LOSS and self.config.auto_resume_connection_loss)
        if auto and st.mode is AcsMode.PAUSED_RECOVERABLE and st.pause_cause == "fault":
            st.mode = AcsMode.EXECUTING
            st.pause_cause = None
            events.append({"kind": "ModeChanged", "from": AcsMode.PAUSED_RECOVERABLE.value,
                           "to": AcsMode.EXECUTING.value, "cause": "auto_resume"})
        return False

    # --- execution ----------------------------------------------------------

    def _execute(self, now: float, dt: float, events: list[dict]) -> Command:
        st = self.state
        if st.action_index >= len(st.mission.actions):
            self._complete_mission(events)
            return _ZERO
        action = st.mission.actions[st.action_index]
        if isinstance(action, FollowPath):
            command, done = self._drive(action, events)
        elif isinstance(action, RotateUpper):
            command, done = self._rotate(action, dt)
        else:
            command, done = self._dwell(action, dt)
        if not done:
            return command
        events.append({"kind": "ActionComplete", "index": st.action_index,
                       "action": type(action).__name__})
        finished = st.action_index
        if self._pending_route is not None and self._pending_route[1] == finished:
            new_mission, _ = self._pending_route
            self._pending_route = None
            st.mission = new_mission
            st.action_index = 0
            events.append({"kind": "RouteSwapped", "mission_id": new_mission.mission_id})
        else:
            st.action_index += 1
        self._reset_action_progress()
        if st.action_index >= len(st.mission.actions):
            self._complete_mission(events)
        return _ZERO

    def _complete_mission(self, events: list[dict]) -> None:
        st = self.state
        events.append({"kind": "MissionComplete", "mission_id": st.mission.mission_id})
        events.append({"kind": "ModeChanged", "from": AcsMode.EXECUTING.value,
                       "to": AcsMode.IDLE.value, "cause": "mission_complete"})
        st.mode = AcsMode.IDLE
        st.mission = None
        st.action_index = 0
        self._pending_route = None
        self._reset_action_progress()

    def _drive(self, action: FollowPath, events: list[dict]) -> tuple[Command, bool]:
        path = action.path
        if self._runs is None:
            self._runs = direction_runs(path)
            self._run_index = 0
            self._s_hint = 0.0
        if not self._runs:
            return _ZERO, True
        s0, s1, direction = self._runs[self._run_index]
        pose = self.est_pose
        s = nearest_on_path(path, pose, s_hint=self._s_hint)
        s = min(max(s, s0), s1)
        self._s_hint = s
        cc = self.config.control
        cruise = min(action.cruise_speed, self.spec.v_max)
        v_ref, in_goal = longitudinal_control(s, s0, s1, direction, cruise, cc)
        if in_goal:
            last_run = self._run_index == len(self._runs) - 1
            if last_run and not self._goal_announced:
                self._goal_announced = True
                events.append({"kind": "GoalReached", "s": round(s, 3),
                               "path_length": round(path.total_length, 3)})
            if abs(float(self.ekf.mean[3])) <= cc.rest_speed:
                if last_run:
                    return _ZERO, True
                # cusp: flip into the next direction run from rest
                self._run_index += 1
                self._s_hint = s1
                return _ZERO, False
            return _ZERO, False
        omega_ref = pure_pursuit(pose, path, s, s1, v_ref, cc, self.spec.omega_max)
        return Command(v_ref=v_ref, omega_ref=omega_ref, upper_rate_ref=0.0), False

    def _rotate(self, action: RotateUpper, dt: float) -> tuple[Command, bool]:
        cc = self.config.control
        error = angle_diff(action.target_angle, self.upper_angle)
        if abs(error) < cc.angle_tol:
            self._hold_elapsed += dt
            if self._hold_elapsed >= cc.hold_time - 1e-9:
                return _ZERO, True
        else:
            self._hold_elapsed = 0.0
        rate, self._pid = upper_body_pid(error, dt, self._pid, cc, self.spec.upper_rate_max)
        return Command(v_ref=0.0, omega_ref=0.0, upper_rate_ref=rate), False

    def _dwell(self, action: Dwell, dt: float) -> tuple[Command, bool]:
        self._dwell_elapsed += dt
        return _ZERO, self._dwell_elapsed >= action.duration - 1e-9
