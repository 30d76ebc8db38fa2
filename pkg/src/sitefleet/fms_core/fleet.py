"""Fleet management: workflow compilation, conflict prediction, zone
supervision, heartbeat watchdog, and command dispatch.

The manager is a sequential reactor. The runner feeds it heartbeats and
person fixes as they arrive, then calls :meth:`FleetManager.tick` once per
simulation step; the tick returns the commands to put on the wire plus the
events to log. All safety checks run every tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from ..acs_agent import (AcsMode, Dwell, FmsCommand, FmsCommandKind, FollowPath,
                         Heartbeat, Mission, RotateUpper)
from ..errors import PlanningFailed, UnknownActor, ZoneViolation
from ..geom_planning import (Direction, Pose2D, RSPath, plan_rs_path,
                             pose_along, sample_path)
from .zones import Zone, ZoneKind


@dataclass(frozen=True)
class Waypoint:
    """A goal pose, optionally annotated with upper-body work on arrival.

    ``rotate_to`` and ``dwell`` expand to actions executed after the vehicle
    reaches the pose (rotation first, then dwell).
    """
    pose: Pose2D
    rotate_to: Optional[float] = None
    dwell: Optional[float] = None

    def __post_init__(self) -> None:
        if self.dwell is not None and self.dwell < 0.0:
            raise ValueError("dwell must be >= 0")


@dataclass(frozen=True)
class Workflow:
    workflow_id: str
    vehicle_ids: tuple[str, ...]
    waypoints: Mapping[str, tuple[Waypoint, ...]]
    zone_ids: tuple[str, ...] = ()
    cruise_speed: float = 2.0
    loop: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "vehicle_ids", tuple(self.vehicle_ids))
        object.__setattr__(self, "zone_ids", tuple(self.zone_ids))
        object.__setattr__(
            self, "waypoints",
            {vid: tuple(wps) for vid, wps in dict(self.waypoints).items()})
        if not self.vehicle_ids:
            raise ValueError("workflow needs at least one vehicle")
        if self.cruise_speed <= 0.0:
            raise ValueError("cruise_speed must be > 0")
        for vid in self.vehicle_ids:
            wps = self.waypoints.get(vid)
            if not wps:
                raise ValueError(f"no waypoints for vehicle {vid!r}")


@dataclass(frozen=True)
class SafetyCircle:
    """Footprint disc plus margin, centred on the latest reported position."""
    actor_id: str
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class Conflict:
    """Predicted overlap of two safety circles.

    ``time`` is the first prediction sample (seconds from now) at which the
    centre distance drops below the radius sum.
    """
    pair: tuple[str, str]
    time: float


@dataclass
class AgentRecord:
    """Supervision-side view of one vehicle, refreshed from heartbeats."""
    actor_id: str
    footprint_radius: float
    r_min: float
    pose: Pose2D
    last_heartbeat: float = 0.0
    v: float = 0.0
    mode: AcsMode = AcsMode.IDLE
    mission_id: Optional[str] = None
    action_index: int = 0
    fault: Optional[str] = None
    stop_latched: bool = False


# ---------------------------------------------------------------------------
# workflow compilation

def _leg_actions(waypoint: Waypoint) -> list:
    out = []
    if waypoint.rotate_to is not None:
        out.append(RotateUpper(target_angle=waypoint.rotate_to))
    if waypoint.dwell is not None and waypoint.dwell > 0.0:
        out.append(Dwell(duration=waypoint.dwell))
    return out


def check_path_in_zones(path: RSPath, permitted: Sequence[Zone],
                        forbidden: Sequence[Zone] = (),
                        ds: float = 0.25) -> None:
    """Raise ZoneViolation at the first sample outside the permitted union
    or strictly inside a forbidden zone. No-op when ``permitted`` is empty
    and there are no forbidden zones."""
    if not permitted and not forbidden:
        return
    for sample in sample_path(path, ds):
        x, y = sample.pose.x, sample.pose.y
        if permitted and not any(z.covers(x, y) for z in permitted):
            raise ZoneViolation(
                f"path leaves permitted zones at s={sample.s:.2f}",
                arc_length=sample.s)
        for z in forbidden:
            if z.contains(x, y):
                raise ZoneViolation(
                    f"path enters forbidden zone {z.zone_id!r} "
                    f"at s={sample.s:.2f}", arc_length=sample.s)


def compile_workflow(workflow: Workflow, zones: Mapping[str, Zone],
                     r_min, ds: float = 0.25) -> list[Mission]:
    """Compile a workflow into one mission per vehicle.

    Returned list is aligned with ``workflow.vehicle_ids``. ``r_min`` is a
    scalar or a per-vehicle mapping. Consecutive waypoints are joined by
    kinematically feasible paths; each leg is containment-checked against
    the workflow's permitted zones at ``ds`` arc-length sampling, and
    against every forbidden zone known to the site. With ``loop`` set, a
    closing leg back to the first waypoint is appended.
    """
    permitted = []
    for zid in workflow.zone_ids:
        if zid not in zones:
            raise ValueError(f"workflow references unknown zone {zid!r}")
        if zones[zid].kind is not ZoneKind.OPERATIONAL:
            raise ValueError(f"zone {zid!r} is not an operational zone")
        permitted.append(zones[zid])
    forbidden = [z for z in zones.values() if z.kind is ZoneKind.FORBIDDEN]

    missions = []
    for vid in workflow.vehicle_ids:
        radius = r_min[vid] if isinstance(r_min, Mapping) else float(r_min)
        wps = workflow.waypoints[vid]
        legs = list(zip(wps[:-1], wps[1:]))
        if workflow.loop and len(wps) >= 2:
            legs.append((wps[-1], wps[0]))
        actions: list = []
        actions.extend(_leg_actions(wps[0]))
        for i, (a, b) in enumerate(legs):
            try:
                path = plan_rs_path(a.pose, b.pose, radius)
            except PlanningFailed as exc:
                raise PlanningFailed(
                    f"workflow {workflow.workflow_id!r} vehicle {vid!r} "
                    f"leg {i}: {exc}") from exc
            try:
                check_path_in_zones(path, permitted, forbidden, ds)
            except ZoneViolation as exc:
                raise ZoneViolation(
                    f"workflow {workflow.workflow_id!r} vehicle {vid!r} "
                    f"leg {i}: {exc}", arc_length=exc.arc_length) from exc
            actions.append(FollowPath(path=path,
                                      cruise_speed=workflow.cruise_speed))
            actions.extend(_leg_actions(b))
        missions.append(Mission(
            mission_id=f"{workflow.workflow_id}/{vid}",
            actions=tuple(actions)))
    return missions


# ---------------------------------------------------------------------------
# interference prediction

def check_interference(circles: Sequence[SafetyCircle],
                       velocities: Mapping[str, tuple[float, float]],
                       horizon: float = 5.0,
                       step: float = 0.2) -> list[Conflict]:
    """Predict pairwise circle overlaps under constant velocity.

    Positions are extrapolated at ``step`` intervals from 0 to ``horizon``
    inclusive; a pair is in conflict if the centre distance is strictly
    below the radius sum at any sample. Reports the earliest such sample
    per pair, sorted by (time, pair).
    """
    out = []
    n_steps = int(round(horizon / step))
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            a, b = circles[i], circles[j]
            vax, vay = velocities.get(a.actor_id, (0.0, 0.0))
            vbx, vby = velocities.get(b.actor_id, (0.0, 0.0))
            # relative motion: closed form per sample, no accumulation
            rx, ry = b.x - a.x, b.y - a.y
            rvx, rvy = vbx - vax, vby - vay
            limit = a.radius + b.radius
            for k in range(n_steps + 1):
                t = k * step
                dx, dy = rx + rvx * t, ry + rvy * t
                if math.hypot(dx, dy) < limit:
                    pair = tuple(sorted((a.actor_id, b.actor_id)))
                    out.append(Conflict(pair=pair, time=t))
                    break
    out.sort(key=lambda c: (c.time, c.pair))
    return out


# ---------------------------------------------------------------------------
# zone intrusion

def check_zone_intrusion(zones: Sequence[Zone],
                         positions: Mapping[str, tuple[float, float]],
                         assigned: Mapping[str, Sequence[str]],
                         ) -> list[tuple[str, str]]:
    """Find non-assigned actors strictly inside operational zones.

    ``assigned`` maps zone id to the actor ids allowed in it. Boundary
    contact is not an intrusion.
    """
    out = []
    for zone in zones:
        if zone.kind is not ZoneKind.OPERATIONAL:
            continue
        allowed = set(assigned.get(zone.zone_id, ()))
        for actor_id in sorted(positions):
            if actor_id in allowed:
                continue
            x, y = positions[actor_id]
            if zone.contains(x, y):
                out.append((zone.zone_id, actor_id))
    return out


# ---------------------------------------------------------------------------
# manager

@dataclass
class FleetConfig:
    heartbeat_timeout: float = 1.0
    safety_margin: float = 1.0
    person_footprint: float = 0.5
    predict_horizon: float = 5.0
    predict_step: float = 0.2
    intrusion_clear_hold: float = 2.0
    # lookahead for pausing before a tracked person actually crosses the fence
    intrusion_predict: float = 1.0
    # extra clearance a held vehicle needs before an interference resume, so
    # the resume command cannot lose the race against closing traffic
    resume_clearance: float = 0.5
    ping_period: float = 0.2
    compile_ds: float = 0.25
    command_retry_period: float = 0.2
    # must exceed the heartbeat round trip, or healthy assigns double-send
    dispatch_retry_period: float = 0.5
    # fix pairs implying faster motion than this are track breaks, not motion
    max_person_speed: float = 10.0


@dataclass
class _Assignment:
    workflow_id: str
    mission: Mission
    start_time: float
    loop: bool = False
    acked: bool = False
    alt_count: int = 0
    # splice index of an unacked route update; None while an assign is pending
    after_index: Optional[int] = None


@dataclass
class _PersonTrack:
    x: float
    y: float
    stamp: float
    vx: float = 0.0
    vy: float = 0.0


@dataclass
class _ZoneWatch:
    intruders: set = field(default_factory=set)
    approaching: set = field(default_factory=set)
    active: bool = False
    clear_since: Optional[float] = None


@dataclass
class TickResult:
    sends: list[tuple[str, FmsCommand]]
    stop_targets: list[str]
    events: list[dict]


class FleetManager:
    """Sequential supervision reactor over a registered fleet.

    Commands queue per agent in FIFO order; emergency stops are drained
    ahead of everything else and mirrored on the dedicated stop channel.
    """

    def __init__(self, config: Optional[FleetConfig] = None,
                 zones: Sequence[Zone] = (), start_time: float = 0.0):
        self.config = config or FleetConfig()
        self.zones: dict[str, Zone] = {z.zone_id: z for z in zones}
        self.records: dict[str, AgentRecord] = {}
        self.workflows: dict[str, Workflow] = {}
        self.assignments: dict[str, _Assignment] = {}
        self.persons: dict[str, _PersonTrack] = {}
        # vehicle id -> reasons the FMS wants it paused ("interference",
        # "intrusion:<zone>"); auto-resume only when this empties
        self.pause_causes: dict[str, set] = {}
        self.operator_paused: set = set()
        self._zone_watch: dict[str, _ZoneWatch] = {}
        self._known_conflicts: set = set()
        self._last_sent: dict[tuple[str, str], float] = {}
        # vehicle id -> (Pause|Resume, cause) sent but not yet reflected in
        # a heartbeat; re-sent until the mode complies or the intent dies
        self._pending_mode: dict[str, tuple[FmsCommandKind, str]] = {}
        self._next_ping = start_time
        self._outbox: list[tuple[str, FmsCommand]] = []

    # -- registration and inbound reports ---------------------------------

    def register_vehicle(self, actor_id: str, pose: Pose2D,
                         footprint_radius: float, r_min: float,
                         now: float = 0.0) -> None:
        self.records[actor_id] = AgentRecord(
            actor_id=actor_id, footprint_radius=footprint_radius,
            r_min=r_min, pose=pose, last_heartbeat=now)
        self.pause_causes[actor_id] = set()

    def receive_heartbeat(self, hb: Heartbeat, now: float) -> None:
        rec = self.records.get(hb.actor_id)
        if rec is None:
            raise UnknownActor(hb.actor_id)
        rec.last_heartbeat = now
        rec.pose = Pose2D(hb.x, hb.y, hb.theta)
        rec.v = hb.v
        rec.mode = AcsMode(hb.mode)
        rec.mission_id = hb.mission_id
        rec.action_index = hb.action_index
        rec.fault = hb.fault
        if rec.mode is AcsMode.STOPPED_NON_RECOVERABLE:
            rec.stop_latched = True
        asg = self.assignments.get(hb.actor_id)
        if asg is not None and hb.mission_id == asg.mission.mission_id:
            asg.acked = True

    def receive_person_fix(self, actor_id: str, x: float, y: float,
                           now: float) -> None:
        track = self.persons.get(actor_id)
        if track is not None and now > track.stamp:
            dt = now - track.stamp
            vx = (x - track.x) / dt
            vy = (y - track.y) / dt
            if math.hypot(vx, vy) > self.config.max_person_speed:
                # track discontinuity (sensor glitch, id reuse): restart the
                # velocity estimate instead of extrapolating a teleport
                vx = vy = 0.0
            track.vx, track.vy = vx, vy
            track.x, track.y, track.stamp = x, y, now
        else:
            self.persons[actor_id] = _PersonTrack(x=x, y=y, stamp=now)

    # -- operator-facing operations ---------------------------------------

    def start_workflow(self, workflow: Workflow, now: float) -> list[dict]:
        """Compile and assign a workflow. All-or-nothing: raises if any
        vehicle is unknown, busy, or latched, or if compilation fails."""
        for vid in workflow.vehicle_ids:
            rec = self.records.get(vid)
            if rec is None:
                raise UnknownActor(vid)
            if rec.stop_latched:
                raise ValueError(f"vehicle {vid!r} unavailable: stop latch active")
            if vid in self.assignments or rec.mode is not AcsMode.IDLE:
                raise ValueError(f"vehicle {vid!r} unavailable: busy")
        r_min = {vid: self.records[vid].r_min for vid in workflow.vehicle_ids}
        missions = compile_workflow(workflow, self.zones, r_min,
                                    self.config.compile_ds)
        self.workflows[workflow.workflow_id] = workflow
        events = [{"kind": "WorkflowStarted",
                   "workflow": workflow.workflow_id,
                   "vehicles": list(workflow.vehicle_ids)}]
        for vid, mission in zip(workflow.vehicle_ids, missions):
            self.assignments[vid] = _Assignment(
                workflow_id=workflow.workflow_id, mission=mission,
                start_time=now, loop=workflow.loop)
            self._send(vid, FmsCommand(kind=FmsCommandKind.ASSIGN_MISSION,
                                       mission=mission))
            self._last_sent[("dispatch", vid)] = now
            events.append({"kind": "MissionAssigned", "vehicle": vid,
                           "mission": mission.mission_id,
                           "actions": len(mission.actions)})
        return events

    def transition_route(self, vehicle_id: str,
                         waypoints: Sequence[Waypoint],
                         now: float) -> list[dict]:
        """Reroute a vehicle onto an alternate waypoint list.

        The replacement is planned from the end pose of the action the
        vehicle currently reports, so the swap lands on an action boundary.
        """
        rec = self.records.get(vehicle_id)
        if rec is None:
            raise UnknownActor(vehicle_id)
        asg = self.assignments.get(vehicle_id)
        if asg is None:
            raise ValueError(f"vehicle {vehicle_id!r} has no active mission")
        if rec.stop_latched:
            raise ValueError(f"vehicle {vehicle_id!r}: stop latch active")
        if not waypoints:
            raise ValueError("alternate route needs at least one waypoint")

        anchor = self._action_end_pose(asg.mission, rec.action_index,
                                       fallback=rec.pose)
        workflow = self.workflows.get(asg.workflow_id)
        permitted = []
        forbidden = [z for z in self.zones.values()
                     if z.kind is ZoneKind.FORBIDDEN]
        if workflow is not None:
            permitted = [self.zones[zid] for zid in workflow.zone_ids
                         if zid in self.zones]
        cruise = workflow.cruise_speed if workflow is not None else 2.0

        actions: list = []
        prev = anchor
        for i, wp in enumerate(waypoints):
            try:
                path = plan_rs_path(prev, wp.pose, rec.r_min)
            except PlanningFailed as exc:
                raise PlanningFailed(
                    f"reroute {vehicle_id!r} leg {i}: {exc}") from exc
            check_path_in_zones(path, permitted, forbidden,
                                self.config.compile_ds)
            actions.append(FollowPath(path=path, cruise_speed=cruise))
            actions.extend(_leg_actions(wp))
            prev = wp.pose
        asg.alt_count += 1
        mission = Mission(
            mission_id=f"{asg.workflow_id}/{vehicle_id}/alt{asg.alt_count}",
            actions=tuple(actions))
        after = rec.action_index
        asg.mission = mission
        asg.acked = False
        asg.after_index = after
        self._send(vehicle_id, FmsCommand(kind=FmsCommandKind.UPDATE_MISSION,
                                          mission=mission, after_index=after))
        self._last_sent[("dispatch", vehicle_id)] = now
        return [{"kind": "RouteUpdateSent", "vehicle": vehicle_id,
                 "mission": mission.mission_id, "after_index": after}]

    def operator_command(self, vehicle_id: str, kind: FmsCommandKind,
                         now: float, cause: str = "operator",
                         ) -> tuple[bool, str]:
        """Forward a mode command on behalf of the operator.

        Resume is refused while the FMS still holds a safety pause on the
        vehicle; everything but Restart is refused while latched.
        """
        rec = self.records.get(vehicle_id)
        if rec is None:
            return False, f"unknown vehicle {vehicle_id!r}"
        if rec.stop_latched and kind is not FmsCommandKind.RESTART:
            return False, "stop latch active; Restart required"
        if kind is FmsCommandKind.RESUME and self.pause_causes.get(vehicle_id):
            reason = sorted(self.pause_causes[vehicle_id])[0]
            return False, f"resume blocked: {reason} unresolved"
        if kind is FmsCommandKind.PAUSE:
            self.operator_paused.add(vehicle_id)
            self._pending_mode[vehicle_id] = (kind, cause)
            self._last_sent[("mode", vehicle_id)] = now
        elif kind is FmsCommandKind.RESUME:
            self.operator_paused.discard(vehicle_id)
            self._pending_mode[vehicle_id] = (kind, cause)
            self._last_sent[("mode", vehicle_id)] = now
        elif kind is FmsCommandKind.REMOTE_STOP:
            rec.stop_latched = True
            self._pending_mode.pop(vehicle_id, None)
        elif kind is FmsCommandKind.RESTART:
            rec.stop_latched = False
            rec.fault = None
            self.pause_causes[vehicle_id] = set()
            self.operator_paused.discard(vehicle_id)
            self.assignments.pop(vehicle_id, None)
            self._pending_mode.pop(vehicle_id, None)
        self._send(vehicle_id, FmsCommand(kind=kind, cause=cause))
        return True, ""

    # -- supervision tick --------------------------------------------------

    def tick(self, now: float) -> TickResult:
        events: list[dict] = []
        self._supervise_heartbeats(now, events)
        self._supervise_interference(now, events)
        self._supervise_zones(now, events)
        self._issue_safety_pauses(now, events)
        self._retry_dispatch(now, events)
        self._retry_mode_commands(now, events)
        self._reap_finished(now, events)
        self._emit_pings(now)
        return self._drain(events)

    def supervise_heartbeats(self, now: float) -> list[str]:
        """Watchdog pass alone; returns newly latched vehicle ids."""
        events: list[dict] = []
        latched = self._supervise_heartbeats(now, events)
        return latched

    def _supervise_heartbeats(self, now: float, events: list[dict]) -> list[str]:
        newly = []
        for vid in sorted(self.records):
            rec = self.records[vid]
            age = now - rec.last_heartbeat
            if not rec.stop_latched and age > self.config.heartbeat_timeout:
                rec.stop_latched = True
                newly.append(vid)
                events.append({"kind": "HeartbeatTimeout", "vehicle": vid,
                               "age": round(age, 6)})
                events.append({"kind": "OperatorAlert", "vehicle": vid,
                               "reason": "heartbeat_timeout"})
                self._send(vid, FmsCommand(kind=FmsCommandKind.REMOTE_STOP,
                                           cause="heartbeat_timeout"))
        return newly

    def _circles_and_velocities(self):
        cfg = self.config
        circles = []
        velocities = {}
        for vid in sorted(self.records):
            rec = self.records[vid]
            circles.append(SafetyCircle(
                actor_id=vid, x=rec.pose.x, y=rec.pose.y,
                radius=rec.footprint_radius + cfg.safety_margin))
            velocities[vid] = (rec.v * math.cos(rec.pose.theta),
                               rec.v * math.sin(rec.pose.theta))
        for pid in sorted(self.persons):
            track = self.persons[pid]
            circles.append(SafetyCircle(
                actor_id=pid, x=track.x, y=track.y,
                radius=cfg.person_footprint + cfg.safety_margin))
            velocities[pid] = (track.vx, track.vy)
        return circles, velocities

    def _conflict_yielder(self, pair: tuple[str, str]) -> Optional[str]:
        """Pick which member of a conflicting pair must pause.

        Persons never yield. Between vehicles, the later mission start
        yields; ties break on actor id so the outcome is deterministic.
        """
        vehicles = [a for a in pair if a in self.records]
        if not vehicles:
            return None
        if len(vehicles) == 1:
            return vehicles[0]
        a, b = vehicles
        ka = (self.assignments[a].start_time, a) if a in self.assignments \
            else (-math.inf, a)
        kb = (self.assignments[b].start_time, b) if b in self.assignments \
            else (-math.inf, b)
        return a if ka > kb else b

    def _route_velocity(self, vid: str) -> Optional[tuple[float, float]]:
        """Nominal velocity if the vehicle resumed now.

        Cruise speed along the tangent of the forthcoming route; None when
        no drivable action is left.
        """
        asg = self.assignments.get(vid)
        rec = self.records[vid]
        if asg is None:
            return None
        idx = max(rec.action_index, 0)
        for k, action in enumerate(asg.mission.actions[idx:]):
            if not isinstance(action, FollowPath):
                continue
            if k == 0:
                # mid-leg: tangent at the closest route point
                best = min(sample_path(action.path, 1.0),
                           key=lambda sp: (sp.pose.x - rec.pose.x) ** 2
                           + (sp.pose.y - rec.pose.y) ** 2)
            else:
                best = pose_along(action.path, 0.0)
            sign = 1.0 if best.direction is Direction.FORWARD else -1.0
            speed = sign * action.cruise_speed
            return (speed * math.cos(best.pose.theta),
                    speed * math.sin(best.pose.theta))
        return None

    def _resume_reconflicts(self, vid: str, circles, velocities) -> set:
        """Pairs that would conflict again if ``vid`` resumed at route speed.

        A paused yielder reports near-zero velocity, which would "resolve"
        every conflict it is in the moment the pause bites; clearance is
        therefore judged against its intended motion, padded by the resume
        clearance.
        """
        v_nom = self._route_velocity(vid) or (0.0, 0.0)
        vel = dict(velocities)
        vel[vid] = v_nom
        pad = self.config.resume_clearance
        padded = [replace(c, radius=c.radius + pad) if c.actor_id == vid else c
                  for c in circles]
        confs = check_interference(padded, vel, self.config.predict_horizon,
                                   self.config.predict_step)
        return {c.pair for c in confs if vid in c.pair}

    def _supervise_interference(self, now: float, events: list[dict]) -> None:
        circles, velocities = self._circles_and_velocities()
        conflicts = check_interference(circles, velocities,
                                       self.config.predict_horizon,
                                       self.config.predict_step)
        current = {c.pair for c in conflicts}
        involved: set = set()
        for c in conflicts:
            yielder = self._conflict_yielder(c.pair)
            if c.pair not in self._known_conflicts:
                events.append({"kind": "ConflictDetected",
                               "pair": list(c.pair), "time": round(c.time, 3),
                               "yields": yielder})
            if yielder is not None:
                involved.add(yielder)
                self.pause_causes.setdefault(yielder, set()).add("interference")
        # hold each episode open until its yielder could run again safely
        for vid in sorted(self.records):
            if vid in involved:
                continue
            if "interference" not in self.pause_causes.get(vid, set()):
                continue
            held = self._resume_reconflicts(vid, circles, velocities)
            if held:
                involved.add(vid)
                current |= held & self._known_conflicts
        for pair in sorted(self._known_conflicts - current):
            events.append({"kind": "ConflictCleared", "pair": list(pair)})
        self._known_conflicts = current

        # conflicts gone for a vehicle: lift the cause, auto-resume if the
        # pause was ours alone and the agent has no live fault
        for vid in sorted(self.records):
            causes = self.pause_causes.get(vid, set())
            if "interference" in causes and vid not in involved:
                causes.discard("interference")
                self._maybe_auto_resume(vid, "interference_clear", now, events)

    def _maybe_auto_resume(self, vid: str, cause: str, now: float,
                           events: list[dict]) -> None:
        rec = self.records[vid]
        if (not self.pause_causes.get(vid) and vid not in self.operator_paused
                and not rec.stop_latched
                and rec.fault is None
                and rec.mode is AcsMode.PAUSED_RECOVERABLE
                and self._retry_ok(("resume", vid), now)):
            self._send(vid, FmsCommand(kind=FmsCommandKind.RESUME, cause=cause))
            self._pending_mode[vid] = (FmsCommandKind.RESUME, cause)
            self._last_sent[("mode", vid)] = now
            events.append({"kind": "ResumeIssued", "vehicle": vid,
                           "cause": cause})

    def _active_zone_assignments(self) -> dict[str, set]:
        """Zone id -> vehicles assigned to it via an active workflow."""
        out: dict[str, set] = {}
        for vid, asg in self.assignments.items():
            workflow = self.workflows.get(asg.workflow_id)
            if workflow is None:
                continue
            for zid in workflow.zone_ids:
                out.setdefault(zid, set()).add(vid)
        return out

    def _predicted_entrants(self, zone: Zone, inside: set) -> set:
        """Persons whose straight-line extrapolation crosses into the zone
        within the short intrusion lookahead."""
        cfg = self.config
        out = set()
        n_steps = max(1, int(round(cfg.intrusion_predict / cfg.predict_step)))
        for pid in sorted(self.persons):
            if pid in inside:
                continue
            track = self.persons[pid]
            if track.vx == 0.0 and track.vy == 0.0:
                continue
            for k in range(1, n_steps + 1):
                t = k * cfg.predict_step
                if zone.contains(track.x + track.vx * t,
                                 track.y + track.vy * t):
                    out.add(pid)
                    break
        return out

    def _supervise_zones(self, now: float, events: list[dict]) -> None:
        cfg = self.config
        assigned = self._active_zone_assignments()
        active_zones = [self.zones[zid] for zid in sorted(assigned)
                        if zid in self.zones]
        positions: dict[str, tuple[float, float]] = {}
        for vid, rec in self.records.items():
            positions[vid] = (rec.pose.x, rec.pose.y)
        for pid, track in self.persons.items():
            positions[pid] = (track.x, track.y)

        intrusions = check_zone_intrusion(active_zones, positions, assigned)
        by_zone: dict[str, set] = {}
        for zid, actor in intrusions:
            by_zone.setdefault(zid, set()).add(actor)

        for zid in sorted(assigned):
            zone = self.zones.get(zid)
            if zone is None:
                continue
            watch = self._zone_watch.setdefault(zid, _ZoneWatch())
            inside = by_zone.get(zid, set())
            cause = f"intrusion:{zid}"
            approach_cause = f"approach:{zid}"
            for actor in sorted(inside - watch.intruders):
                events.append({"kind": "ZoneIntrusion", "zone": zid,
                               "intruder": actor})
            watch.intruders = inside
            predicted = self._predicted_entrants(zone, inside)
            for actor in sorted(predicted - watch.approaching):
                events.append({"kind": "ZoneApproach", "zone": zid,
                               "actor": actor})
            watch.approaching = predicted

            if inside:
                if not watch.active:
                    watch.active = True
                watch.clear_since = None
                for vid in sorted(assigned[zid]):
                    causes = self.pause_causes.setdefault(vid, set())
                    causes.add(cause)
                    causes.discard(approach_cause)
            elif watch.active:
                if watch.clear_since is None:
                    watch.clear_since = now
                if now - watch.clear_since >= cfg.intrusion_clear_hold:
                    watch.active = False
                    watch.clear_since = None
                    events.append({"kind": "ZoneClear", "zone": zid})
                    # operator resumes; the FMS only lifts its block
                    for vid in sorted(assigned[zid]):
                        self.pause_causes.get(vid, set()).discard(cause)

            # approach pauses act before the fence is crossed and lift on
            # their own if the person turns away without entering
            if predicted and not watch.active:
                for vid in sorted(assigned[zid]):
                    self.pause_causes.setdefault(vid, set()).add(approach_cause)
            elif not predicted:
                for vid in sorted(assigned[zid]):
                    causes = self.pause_causes.get(vid, set())
                    if approach_cause in causes:
                        causes.discard(approach_cause)
                        self._maybe_auto_resume(vid, "approach_clear", now,
                                                events)

    def _issue_safety_pauses(self, now: float, events: list[dict]) -> None:
        for vid in sorted(self.records):
            causes = self.pause_causes.get(vid, set())
            rec = self.records[vid]
            if (causes and rec.mode is AcsMode.EXECUTING
                    and not rec.stop_latched
                    and self._retry_ok(("pause", vid), now)):
                cause = sorted(causes)[0]
                self._send(vid, FmsCommand(kind=FmsCommandKind.PAUSE,
                                           cause=cause))
                events.append({"kind": "PauseIssued", "vehicle": vid,
                               "cause": cause})

    def _retry_dispatch(self, now: float, events: list[dict]) -> None:
        """Re-send assignments the vehicle has not echoed back yet.

        Mission dispatch rides the lossy main channel like everything else;
        the ack is the next heartbeat carrying the assigned mission id.  A
        route update whose splice point the vehicle already passed falls back
        to a plain assign once the vehicle goes idle.
        """
        for vid in sorted(self.assignments):
            asg = self.assignments[vid]
            rec = self.records[vid]
            if asg.acked or rec.stop_latched:
                continue
            last = self._last_sent.get(("dispatch", vid))
            if last is not None and now - last < self.config.dispatch_retry_period:
                continue
            self._last_sent[("dispatch", vid)] = now
            if asg.after_index is not None and rec.mission_id is not None:
                cmd = FmsCommand(kind=FmsCommandKind.UPDATE_MISSION,
                                 mission=asg.mission,
                                 after_index=asg.after_index)
            else:
                cmd = FmsCommand(kind=FmsCommandKind.ASSIGN_MISSION,
                                 mission=asg.mission)
            self._send(vid, cmd)
            events.append({"kind": "DispatchRetried", "vehicle": vid,
                           "mission": asg.mission.mission_id,
                           "command": cmd.kind.value})

    def _retry_mode_commands(self, now: float, events: list[dict]) -> None:
        """Re-send a Pause or Resume the vehicle has not acted on yet.

        The heartbeat-reported mode is the acknowledgement; a command lost
        on the main channel would otherwise strand the vehicle (a dropped
        Resume leaves it paused for good). Pending intents die when the
        mode complies, the latch fires, or a newer cause supersedes them.
        """
        for vid in sorted(self._pending_mode):
            kind, cause = self._pending_mode[vid]
            rec = self.records.get(vid)
            done = (rec is None or rec.stop_latched
                    or (kind is FmsCommandKind.PAUSE
                        and rec.mode is not AcsMode.EXECUTING)
                    or (kind is FmsCommandKind.RESUME
                        and rec.mode is not AcsMode.PAUSED_RECOVERABLE))
            stale = (kind is FmsCommandKind.RESUME
                     and (bool(self.pause_causes.get(vid))
                          or vid in self.operator_paused
                          or (rec is not None and rec.fault is not None)))
            if done or stale:
                del self._pending_mode[vid]
                continue
            last = self._last_sent.get(("mode", vid))
            if last is not None and now - last < self.config.dispatch_retry_period:
                continue
            self._last_sent[("mode", vid)] = now
            self._send(vid, FmsCommand(kind=kind, cause=cause))
            events.append({"kind": "CommandRetried", "vehicle": vid,
                           "command": kind.value, "cause": cause})

    def _reap_finished(self, now: float, events: list[dict]) -> None:
        for vid in sorted(self.assignments):
            asg = self.assignments[vid]
            rec = self.records[vid]
            if not (asg.acked and rec.mission_id is None
                    and rec.mode is AcsMode.IDLE and not rec.stop_latched):
                continue
            if asg.loop and not self.pause_causes.get(vid):
                asg.start_time = now
                asg.acked = False
                asg.after_index = None
                self._send(vid, FmsCommand(kind=FmsCommandKind.ASSIGN_MISSION,
                                           mission=asg.mission))
                self._last_sent[("dispatch", vid)] = now
                events.append({"kind": "MissionAssigned", "vehicle": vid,
                               "mission": asg.mission.mission_id,
                               "loop": True,
                               "actions": len(asg.mission.actions)})
            elif not asg.loop:
                del self.assignments[vid]
                events.append({"kind": "MissionFinished", "vehicle": vid,
                               "mission": asg.mission.mission_id})

    def _emit_pings(self, now: float) -> None:
        while now + 1e-9 >= self._next_ping:
            for vid in sorted(self.records):
                self._send(vid, FmsCommand(kind=FmsCommandKind.PING))
            self._next_ping += self.config.ping_period

    # -- dispatch ----------------------------------------------------------

    def _send(self, vehicle_id: str, cmd: FmsCommand) -> None:
        self._outbox.append((vehicle_id, cmd))

    def _retry_ok(self, key: tuple[str, str], now: float) -> bool:
        last = self._last_sent.get(key)
        if last is not None and now - last < self.config.command_retry_period:
            return False
        self._last_sent[key] = now
        return True

    def _drain(self, events: list[dict]) -> TickResult:
        stops = [(vid, cmd) for vid, cmd in self._outbox
                 if cmd.kind is FmsCommandKind.REMOTE_STOP]
        rest = [(vid, cmd) for vid, cmd in self._outbox
                if cmd.kind is not FmsCommandKind.REMOTE_STOP]
        self._outbox = []
        return TickResult(sends=stops + rest,
                          stop_targets=[vid for vid, _ in stops],
                          events=events)

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def _action_end_pose(mission: Mission, action_index: int,
                         fallback: Pose2D) -> Pose2D:
        """End pose of the indexed action: the last driving action at or
        before it fixes the vehicle position; rotations and dwells do not
        move the base."""
        idx = min(action_index, len(mission.actions) - 1)
        for i in range(idx, -1, -1):
            action = mission.actions[i]
            if isinstance(action, FollowPath):
                return action.path.end_pose
        return fallback
