"""Scenario execution: the single-writer simulation loop.

Tick pipeline, in order: scripted/console commands -> network deliveries ->
sensors + agents (sorted by id) -> fleet manager -> world step -> safety
monitors. Commands enter only at tick boundaries, so a run is a pure
function of (scenario, seed) plus the operator command arrival ticks.
"""
from __future__ import annotations

import queue
import threading
from collections import defaultdict, deque
from typing import Callable, Optional

from ..acs_agent import AcsMode, Agent, FmsCommand, FmsCommandKind, Heartbeat
from ..errors import PlanningFailed, SiteFleetError, ZoneViolation
from ..fms_core import FleetManager, Waypoint, Workflow
from ..geom_planning import Pose2D, sample_path
from ..net_sim import Channel, StopChannel
from ..world_sim import GnssFix, GnssQuality, VehicleState, World
from .events import EventLog
from .scenario import Scenario, ScriptedCommand, materialized

_OPERATOR_KINDS = {
    "Pause": FmsCommandKind.PAUSE,
    "Resume": FmsCommandKind.RESUME,
    "Restart": FmsCommandKind.RESTART,
    "RemoteStop": FmsCommandKind.REMOTE_STOP,
}

_ALERT_KINDS = {"OperatorAlert", "FaultRaised", "SafetyViolation",
                "ZoneIntrusion", "ZoneApproach", "ConflictDetected",
                "HeartbeatTimeout", "CommandRejected", "WorkflowRejected"}


def _waypoint_payloads(waypoints):
    return tuple(
        Waypoint(pose=Pose2D(*wp["pose"]), rotate_to=wp.get("rotate_to"),
                 dwell=wp.get("dwell")) for wp in waypoints)


class ScenarioRunner:
    """Owns every simulated component for one run."""

    def __init__(self, scenario: Scenario,
                 log_path: Optional[str] = None) -> None:
        self.scenario = scenario
        self.dt = scenario.timestep
        self.n_ticks = int(round(scenario.duration / self.dt))
        self.world = World(scenario.seed, self.dt)
        self.main = Channel(scenario.channel, scenario.seed, "main")
        self.stop = StopChannel()
        self.fms = FleetManager(scenario.fleet, zones=scenario.zones)
        self.agents: dict[str, Agent] = {}
        self.log = EventLog(log_path)
        self.safety_violated = False

        for v in scenario.vehicles:
            self.world.add_vehicle(
                v.actor_id, v.spec,
                VehicleState(pose=v.pose, payload_mass=v.payload_mass),
                sensors=v.sensors)
            self.agents[v.actor_id] = Agent(
                v.actor_id, v.spec, v.pose, config=scenario.agent,
                est_config=scenario.estimator)
            self.fms.register_vehicle(v.actor_id, v.pose,
                                      v.spec.footprint_radius, v.spec.r_min)
        for p in scenario.persons:
            self.world.add_person(p.actor_id, p.walk, gnss_tag=p.gnss_tag)

        self._workflow_queue = sorted(scenario.workflows,
                                      key=lambda ws: ws.start_at)
        self._script_queue = sorted(scenario.script, key=lambda s: s.at)
        self._hw_failures = sorted(
            (v.hardware_failure_at, v.actor_id) for v in scenario.vehicles
            if v.hardware_failure_at is not None)
        self._console: "queue.Queue[tuple[dict, str, Callable]]" = queue.Queue()
        self.defined_workflows: dict[str, Workflow] = {
            ws.workflow.workflow_id: ws.workflow
            for ws in scenario.workflows}

        # monitor bookkeeping
        self._overlap_pairs: set = set()
        self._latch_times: dict[str, float] = {}
        self._missed_stop_flagged: set = set()
        self._intrusion_exec_since: dict[tuple, float] = {}
        self._intrusion_flagged: set = set()
        self._quiesce_grace = 1.0
        self._idle_ticks = 0
        self._routes: dict[str, tuple[Optional[str], list]] = {}
        self.alerts: deque = deque(maxlen=20)
        self.latest_snapshot: Optional[dict] = None
        # serve mode flips this on; headless runs skip the snapshot build
        self.build_snapshots = False
        self._snap_every = max(1, int(round(0.1 / self.dt)))
        self._lock = threading.Lock()
        self._finalized: Optional[int] = None

        self.log.append(0.0, "runner", "run_start",
                        {"config": materialized(scenario)})

    # -- logging helper ----------------------------------------------------

    def _log(self, t: float, source: str, kind: str, payload: dict) -> None:
        with self._lock:
            self.log.append(t, source, kind, payload)
        if kind in _ALERT_KINDS:
            self.alerts.append({"sim_time": t, "source": source,
                                "kind": kind, **payload})
        if kind == "SafetyViolation":
            self.safety_violated = True

    # -- console surface (thread-safe) -------------------------------------

    def enqueue_console(self, command: dict, operator: str,
                        reply: Callable[[dict], None]) -> None:
        """Queue an operator command; the reply callback fires at the tick
        boundary where the command is applied."""
        self._console.put((command, operator, reply))

    def snapshot(self) -> Optional[dict]:
        return self.latest_snapshot

    # -- operator command handling ------------------------------------------

    def _workflow_from_payload(self, payload: dict) -> Workflow:
        waypoints = {vid: _waypoint_payloads(wps)
                     for vid, wps in payload["waypoints"].items()}
        return Workflow(
            workflow_id=payload["id"],
            vehicle_ids=tuple(payload["vehicles"]),
            waypoints=waypoints,
            zone_ids=tuple(payload.get("zones", [])),
            cruise_speed=float(payload.get("cruise_speed", 2.0)),
            loop=bool(payload.get("loop", False)))

    def _route_preview(self, workflow: Workflow) -> dict:
        from ..fms_core import compile_workflow
        r_min = {vid: self.fms.records[vid].r_min
                 for vid in workflow.vehicle_ids}
        missions = compile_workflow(workflow, self.fms.zones, r_min,
                                    self.scenario.fleet.compile_ds)
        preview = {}
        for vid, mission in zip(workflow.vehicle_ids, missions):
            points: list = []
            for action in mission.actions:
                if hasattr(action, "path"):
                    points.extend(
                        [round(s.pose.x, 3), round(s.pose.y, 3)]
                        for s in sample_path(action.path, 0.5))
            preview[vid] = points
        return preview

    def _apply_operator(self, command: dict, operator: str,
                        t: float) -> tuple[bool, str, dict]:
        """Returns (ok, reason, extra-ack-payload)."""
        ctype = command.get("type")
        payload = command.get("payload", {})
        if ctype in _OPERATOR_KINDS:
            vid = payload.get("vehicle", "")
            ok, reason = self.fms.operator_command(
                vid, _OPERATOR_KINDS[ctype], t, cause=f"operator:{operator}")
            return ok, reason, {}
        if ctype == "DefineWorkflow":
            try:
                workflow = self._workflow_from_payload(payload)
                preview = self._route_preview(workflow)
            except (KeyError, TypeError) as exc:
                return False, f"malformed workflow: {exc!r}", {}
            except (ZoneViolation, PlanningFailed, ValueError) as exc:
                return False, str(exc), {}
            self.defined_workflows[workflow.workflow_id] = workflow
            return True, "", {"preview": preview}
        if ctype == "StartMission":
            wfid = payload.get("workflow_id", "")
            workflow = self.defined_workflows.get(wfid)
            if workflow is None:
                return False, f"unknown workflow {wfid!r}", {}
            try:
                for ev in self.fms.start_workflow(workflow, t):
                    self._log(t, "fms", ev.pop("kind"), ev)
            except (ZoneViolation, PlanningFailed, ValueError,
                    SiteFleetError) as exc:
                return False, str(exc), {}
            return True, "", {}
        if ctype == "TransitionRoute":
            vid = payload.get("vehicle", "")
            try:
                waypoints = _waypoint_payloads(payload.get("waypoints", []))
                for ev in self.fms.transition_route(vid, waypoints, t):
                    self._log(t, "fms", ev.pop("kind"), ev)
            except (KeyError, TypeError) as exc:
                return False, f"malformed route: {exc!r}", {}
            except (ZoneViolation, PlanningFailed, ValueError,
                    SiteFleetError) as exc:
                return False, str(exc), {}
            return True, "", {}
        return False, f"unknown command type {ctype!r}", {}

    # -- scripted traffic ---------------------------------------------------

    def _fire_scripts(self, t: float) -> None:
        while self._workflow_queue and self._workflow_queue[0].start_at <= t + 1e-9:
            ws = self._workflow_queue.pop(0)
            try:
                for ev in self.fms.start_workflow(ws.workflow, t):
                    self._log(t, "fms", ev.pop("kind"), ev)
            except (ZoneViolation, PlanningFailed, ValueError,
                    SiteFleetError) as exc:
                self._log(t, "fms", "WorkflowRejected",
                          {"workflow": ws.workflow.workflow_id,
                           "reason": str(exc)})

        while self._script_queue and self._script_queue[0].at <= t + 1e-9:
            s: ScriptedCommand = self._script_queue.pop(0)
            self._log(t, "operator", "OperatorCommand",
                      {"command": s.command, "vehicle": s.vehicle,
                       "operator": "script"})
            if s.command == "StopButton":
                targets = list(s.targets) or self.world.vehicle_ids
                if targets:
                    self.stop.press(targets, t)
                self._log(t, "operator", "StopChannelPressed",
                          {"targets": targets})
            elif s.command == "TransitionRoute":
                try:
                    for ev in self.fms.transition_route(
                            s.vehicle, list(s.waypoints), t):
                        self._log(t, "fms", ev.pop("kind"), ev)
                except (ZoneViolation, PlanningFailed, ValueError,
                        SiteFleetError) as exc:
                    self._log(t, "fms", "CommandRejected",
                              {"command": s.command, "vehicle": s.vehicle,
                               "reason": str(exc)})
            else:
                ok, reason = self.fms.operator_command(
                    s.vehicle, _OPERATOR_KINDS[s.command], t, cause="operator:script")
                if not ok:
                    self._log(t, "fms", "CommandRejected",
                              {"command": s.command, "vehicle": s.vehicle,
                               "reason": reason})

        while self._hw_failures and self._hw_failures[0][0] <= t + 1e-9:
            _, vid = self._hw_failures.pop(0)
            self.agents[vid].inject_hardware_failure()
            self._log(t, vid, "HardwareFailureInjected", {})

        while True:
            try:
                command, operator, reply = self._console.get_nowait()
            except queue.Empty:
                break
            self._log(t, "operator", "OperatorCommand",
                      {"command": command.get("type"),
                       "payload": command.get("payload", {}),
                       "operator": operator})
            ok, reason, extra = self._apply_operator(command, operator, t)
            if not ok:
                self._log(t, "fms", "CommandRejected",
                          {"command": command.get("type"), "reason": reason})
            reply({"type": "ack", "id": command.get("id"),
                   "ok": ok, "reason": reason, **extra})

    # -- tick ---------------------------------------------------------------

    def step_tick(self) -> None:
        t = self.world.time
        self._fire_scripts(t)

        per_agent: dict[str, list[FmsCommand]] = defaultdict(list)
        for d in self.main.collect_due(t):
            payload = d.payload
            if d.recipient == "fms":
                if isinstance(payload, Heartbeat):
                    self.fms.receive_heartbeat(payload, t)
                elif isinstance(payload, tuple) and payload[0] == "person_fix":
                    _, pid, x, y = payload
                    self.fms.receive_person_fix(pid, x, y, t)
            elif d.recipient in self.agents:
                per_agent[d.recipient].append(payload)
        for d in self.stop.collect_due(t):
            if d.recipient in self.agents:
                per_agent[d.recipient].append(
                    FmsCommand(kind=FmsCommandKind.REMOTE_STOP,
                               cause="stop_channel"))
                self._log(t, d.recipient, "StopChannelDelivered", {})

        for vid in sorted(self.agents):
            agent = self.agents[vid]
            readings = self.world.emit_sensors(vid)
            out = agent.tick(t, self.dt, per_agent.get(vid, []), readings)
            if out.engage_stop:
                if self.world.engage_stop(vid):
                    self._log(t, vid, "StopEngaged", {})
            if out.release_stop:
                self.world.release_stop(vid)
                self._log(t, vid, "StopReleased", {})
            self.world.apply_command(vid, out.command)
            for ev in out.events:
                kind = ev.pop("kind")
                self._log(t, vid, kind, ev)
            if out.heartbeat is not None:
                if self.main.send(vid, "fms", out.heartbeat, t) is None:
                    self._log(t, vid, "NetDrop", {"to": "fms",
                                                  "what": "heartbeat"})
            if self.world.tick % self.scenario.telemetry_every == 0:
                self._log(t, vid, "Telemetry", out.telemetry)
            if self.build_snapshots:
                self._refresh_route(vid, agent)

        for pid in self.world.person_ids:
            for fix in self.world.emit_sensors(pid):
                if isinstance(fix, GnssFix) and fix.quality is not GnssQuality.NONE:
                    self.main.send(pid, "fms",
                                   ("person_fix", pid, fix.x, fix.y), t)

        res = self.fms.tick(t)
        for ev in res.events:
            kind = ev.pop("kind")
            self._log(t, "fms", kind, ev)
        for vid, cmd in res.sends:
            if self.main.send("fms", vid, cmd, t) is None:
                self._log(t, "fms", "NetDrop",
                          {"to": vid, "what": cmd.kind.value})
        if res.stop_targets:
            self.stop.press(res.stop_targets, t)
            self._log(t, "fms", "StopChannelPressed",
                      {"targets": res.stop_targets})

        self.world.step(self.dt)
        self._run_monitors(self.world.time)
        if self.build_snapshots and self.world.tick % self._snap_every == 0:
            self.latest_snapshot = self._build_snapshot()

    # -- monitors ------------------------------------------------------------

    def _run_monitors(self, t: float) -> None:
        margin = self.scenario.fleet.safety_margin
        vids = self.world.vehicle_ids
        # circle overlap while both Executing
        for i in range(len(vids)):
            for j in range(i + 1, len(vids)):
                a, b = vids[i], vids[j]
                pair = (a, b)
                both_exec = (
                    self.agents[a].state.mode is AcsMode.EXECUTING
                    and self.agents[b].state.mode is AcsMode.EXECUTING)
                pa = self.world.vehicle_state(a).pose
                pb = self.world.vehicle_state(b).pose
                ra = self.world.vehicle_spec(a).footprint_radius + margin
                rb = self.world.vehicle_spec(b).footprint_radius + margin
                overlap = (pa.x - pb.x) ** 2 + (pa.y - pb.y) ** 2 < (ra + rb) ** 2
                if both_exec and overlap:
                    if pair not in self._overlap_pairs:
                        self._overlap_pairs.add(pair)
                        self._log(t, "monitor", "SafetyViolation",
                                  {"what": "executing_overlap",
                                   "pair": list(pair)})
                else:
                    self._overlap_pairs.discard(pair)

        # a latched vehicle must be at rest within 2 s
        for vid in vids:
            if self.world.is_stop_latched(vid):
                t0 = self._latch_times.setdefault(vid, t)
                v = abs(self.world.vehicle_state(vid).v)
                if (t - t0 > 2.0 and v > 1e-3
                        and vid not in self._missed_stop_flagged):
                    self._missed_stop_flagged.add(vid)
                    self._log(t, "monitor", "SafetyViolation",
                              {"what": "missed_stop", "vehicle": vid,
                               "speed": round(v, 4)})
            else:
                self._latch_times.pop(vid, None)
                self._missed_stop_flagged.discard(vid)

        # nobody executes while an intrusion stays unresolved; the pause has
        # to travel heartbeat -> supervisor -> command -> agent, so the
        # condition only counts once it outlives that loop
        assigned = self.fms._active_zone_assignments()
        for zid, watch in self.fms._zone_watch.items():
            for vid in sorted(assigned.get(zid, ())):
                key = (zid, vid)
                executing = self.agents[vid].state.mode is AcsMode.EXECUTING
                if watch.active and executing:
                    since = self._intrusion_exec_since.setdefault(key, t)
                    if (t - since > self._quiesce_grace
                            and key not in self._intrusion_flagged):
                        self._intrusion_flagged.add(key)
                        self._log(t, "monitor", "SafetyViolation",
                                  {"what": "executing_during_intrusion",
                                   "zone": zid, "vehicle": vid})
                else:
                    self._intrusion_exec_since.pop(key, None)
                    self._intrusion_flagged.discard(key)

    # -- snapshot -------------------------------------------------------------

    def _refresh_route(self, vid: str, agent: Agent) -> None:
        mission = agent.state.mission
        mid = mission.mission_id if mission is not None else None
        cached = self._routes.get(vid)
        if cached is not None and cached[0] == mid:
            return
        points: list = []
        if mission is not None:
            for action in mission.actions:
                if hasattr(action, "path"):
                    points.extend(
                        [round(s.pose.x, 3), round(s.pose.y, 3)]
                        for s in sample_path(action.path, 0.5))
        self._routes[vid] = (mid, points)

    def _build_snapshot(self) -> dict:
        margin = self.scenario.fleet.safety_margin
        agents = []
        for vid in self.world.vehicle_ids:
            st = self.world.vehicle_state(vid)
            ag = self.agents[vid]
            route_mid, route_points = self._routes.get(vid, (None, []))
            agents.append({
                "id": vid,
                "x": round(st.pose.x, 3), "y": round(st.pose.y, 3),
                "theta": round(st.pose.theta, 4),
                "v": round(st.v, 3),
                "upper_angle": round(st.upper_angle, 4),
                "mode": ag.state.mode.value,
                "mission_id": (ag.state.mission.mission_id
                               if ag.state.mission else None),
                "action_index": ag.state.action_index,
                "fault": ag.state.fault.value if ag.state.fault else None,
                "latched": self.world.is_stop_latched(vid),
                "radius": self.world.vehicle_spec(vid).footprint_radius + margin,
                "route": route_points if route_mid else [],
            })
        persons = []
        for pid in self.world.person_ids:
            x, y = self.world.person_position(pid)
            persons.append({"id": pid, "x": round(x, 3), "y": round(y, 3),
                            "radius": self.scenario.fleet.person_footprint
                            + margin})
        zones = []
        for z in self.scenario.zones:
            watch = self.fms._zone_watch.get(z.zone_id)
            zones.append({"id": z.zone_id,
                          "vertices": [list(v) for v in z.vertices],
                          "kind": z.kind.value,
                          "intruded": bool(watch and watch.active)})
        return {
            "type": "snapshot",
            "payload": {
                "sim_time": round(self.world.time, 4),
                "tick": self.world.tick,
                "agents": agents,
                "persons": persons,
                "zones": zones,
                "conflicts": [list(p) for p in
                              sorted(self.fms._known_conflicts)],
                "alerts": list(self.alerts),
            },
        }

    # -- terminal condition ----------------------------------------------------

    def _is_idle(self) -> bool:
        # pings and heartbeats never stop flowing, so channel traffic is not
        # part of the idleness test; in-flight stop presses are
        if (self._workflow_queue or self._script_queue or self._hw_failures
                or self.stop.pending):
            return False
        for agent in self.agents.values():
            if agent.state.mode not in (AcsMode.IDLE,
                                        AcsMode.STOPPED_NON_RECOVERABLE):
                return False
        # an open assignment still counts as work unless its vehicle is
        # hard-stopped and can never finish it
        for vid in self.fms.assignments:
            if self.agents[vid].state.mode is not AcsMode.STOPPED_NON_RECOVERABLE:
                return False
        return True

    # -- run --------------------------------------------------------------------

    def finalize(self) -> int:
        """Write the run footer and close the log; idempotent."""
        if self._finalized is not None:
            return self._finalized
        exit_code = 1 if self.safety_violated else 0
        with self._lock:
            self.log.append(self.world.time, "runner", "run_end",
                            {"digest": self.log.digest, "exit": exit_code,
                             "ticks": self.world.tick})
            self.log.close()
        self._finalized = exit_code
        return exit_code

    def run(self, on_tick: Optional[Callable[["ScenarioRunner"], None]] = None,
            ) -> int:
        """Run ticks to duration or early idle; returns the exit status."""
        idle_needed = int(round(1.0 / self.dt))
        for _ in range(self.n_ticks):
            self.step_tick()
            if on_tick is not None:
                on_tick(self)
            if self.scenario.stop_on_idle:
                self._idle_ticks = self._idle_ticks + 1 if self._is_idle() else 0
                if self._idle_ticks >= idle_needed:
                    break
        return self.finalize()


def run_scenario(scenario: Scenario, log_path: Optional[str] = None,
                 on_tick: Optional[Callable] = None) -> tuple[int, ScenarioRunner]:
    """Headless entry: build a runner, run to completion, return
    (exit status, runner)."""
    runner = ScenarioRunner(scenario, log_path=log_path)
    code = runner.run(on_tick=on_tick)
    return code, runner
