"""Scenario loading and validation.

Configs are YAML (JSON is a subset) checked against the published schema;
unknown fields are rejected. ``materialized()`` returns the config with
every default filled in, which goes into the log header so a log fully
describes its own run.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import yaml

from ..acs_agent import AgentConfig, ControlConfig, EstimatorConfig
from ..errors import ConfigInvalid
from ..fms_core import FleetConfig, Waypoint, Workflow, Zone, ZoneKind
from ..geom_planning import Pose2D
from ..net_sim import ChannelConfig
from ..world_sim import ScriptedWalk, SensorConfig, VehicleSpec


def _schema() -> dict:
    text = resources.files("sitefleet.service_api") \
        .joinpath("scenario_schema.json").read_text()
    return json.loads(text)


_SCHEMA = _schema()
_VALIDATOR = jsonschema.Draft202012Validator(_SCHEMA)


@dataclass(frozen=True)
class VehicleSetup:
    actor_id: str
    pose: Pose2D
    payload_mass: float
    spec: VehicleSpec
    sensors: SensorConfig
    hardware_failure_at: Optional[float] = None


@dataclass(frozen=True)
class PersonSetup:
    actor_id: str
    walk: ScriptedWalk
    gnss_tag: bool = True


@dataclass(frozen=True)
class WorkflowSetup:
    workflow: Workflow
    start_at: float = 0.0


@dataclass(frozen=True)
class ScriptedCommand:
    at: float
    command: str
    vehicle: Optional[str] = None
    targets: tuple[str, ...] = ()
    waypoints: tuple[Waypoint, ...] = ()


@dataclass(frozen=True)
class Scenario:
    seed: int
    timestep: float
    duration: float
    vehicles: tuple[VehicleSetup, ...]
    persons: tuple[PersonSetup, ...] = ()
    zones: tuple[Zone, ...] = ()
    workflows: tuple[WorkflowSetup, ...] = ()
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    script: tuple[ScriptedCommand, ...] = ()
    stop_on_idle: bool = True
    telemetry_every: int = 5


def _fail(message: str, path: str) -> None:
    raise ConfigInvalid(f"{path}: {message}", field_path=path)


def _pose(raw) -> Pose2D:
    return Pose2D(float(raw[0]), float(raw[1]), float(raw[2]))


def _windows(raw) -> tuple[tuple[float, float], ...]:
    return tuple((float(a), float(b)) for a, b in raw)


def _build_dc(cls, raw: dict, path: str, windows_keys=()):
    """Construct a config dataclass from a raw dict, mapping value errors
    back to the offending field."""
    kwargs = dict(raw)
    for key in windows_keys:
        if key in kwargs:
            kwargs[key] = _windows(kwargs[key])
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        _fail(str(exc), path)


def parse_scenario(raw: dict) -> Scenario:
    """Validate a plain dict and build the typed scenario."""
    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(raw))
    if error is not None:
        path = "".join(
            f"[{p}]" if isinstance(p, int) else (f".{p}" if i else p)
            for i, p in enumerate(error.absolute_path))
        _fail(error.message, path or "<root>")

    vehicles = []
    seen: set[str] = set()
    for i, v in enumerate(raw["vehicles"]):
        vid = v["id"]
        if vid in seen:
            _fail(f"duplicate actor id {vid!r}", f"vehicles[{i}].id")
        seen.add(vid)
        spec = _build_dc(VehicleSpec, v.get("spec", {}),
                         f"vehicles[{i}].spec")
        sensors = _build_dc(SensorConfig, v.get("sensors", {}),
                            f"vehicles[{i}].sensors",
                            windows_keys=("gnss_outages",
                                          "gnss_float_windows"))
        vehicles.append(VehicleSetup(
            actor_id=vid, pose=_pose(v["pose"]),
            payload_mass=float(v.get("payload_mass", 0.0)),
            spec=spec, sensors=sensors,
            hardware_failure_at=v.get("hardware_failure_at")))

    persons = []
    for i, p in enumerate(raw.get("persons", [])):
        pid = p["id"]
        if pid in seen:
            _fail(f"duplicate actor id {pid!r}", f"persons[{i}].id")
        seen.add(pid)
        walk = _build_dc(ScriptedWalk, {
            "waypoints": tuple((float(x), float(y))
                               for x, y in p["waypoints"]),
            "speed": p.get("speed", 1.2),
            "start_time": p.get("start_time", 0.0),
            "loop": p.get("loop", False)}, f"persons[{i}]")
        persons.append(PersonSetup(actor_id=pid, walk=walk,
                                   gnss_tag=p.get("gnss_tag", True)))

    zones = []
    zone_ids: set[str] = set()
    for i, z in enumerate(raw.get("zones", [])):
        if z["id"] in zone_ids:
            _fail(f"duplicate zone id {z['id']!r}", f"zones[{i}].id")
        zone_ids.add(z["id"])
        try:
            zones.append(Zone(
                zone_id=z["id"],
                vertices=tuple((float(x), float(y))
                               for x, y in z["vertices"]),
                kind=ZoneKind(z.get("kind", "Operational"))))
        except ValueError as exc:
            _fail(str(exc), f"zones[{i}].vertices")

    vehicle_ids = {v.actor_id for v in vehicles}
    workflows = []
    for i, w in enumerate(raw.get("workflows", [])):
        for j, vid in enumerate(w["vehicles"]):
            if vid not in vehicle_ids:
                _fail(f"unknown vehicle {vid!r}",
                      f"workflows[{i}].vehicles[{j}]")
        for j, zid in enumerate(w.get("zones", [])):
            if zid not in zone_ids:
                _fail(f"unknown zone {zid!r}", f"workflows[{i}].zones[{j}]")
        waypoints = {}
        for vid, wps in w["waypoints"].items():
            if vid not in set(w["vehicles"]):
                _fail(f"waypoints for vehicle {vid!r} not in workflow",
                      f"workflows[{i}].waypoints.{vid}")
            waypoints[vid] = tuple(
                Waypoint(pose=_pose(wp["pose"]),
                         rotate_to=wp.get("rotate_to"),
                         dwell=wp.get("dwell")) for wp in wps)
        for vid in w["vehicles"]:
            if vid not in waypoints:
                _fail(f"no waypoints for vehicle {vid!r}",
                      f"workflows[{i}].waypoints")
        try:
            workflow = Workflow(
                workflow_id=w["id"], vehicle_ids=tuple(w["vehicles"]),
                waypoints=waypoints, zone_ids=tuple(w.get("zones", [])),
                cruise_speed=float(w.get("cruise_speed", 2.0)),
                loop=w.get("loop", False))
        except ValueError as exc:
            _fail(str(exc), f"workflows[{i}]")
        workflows.append(WorkflowSetup(workflow=workflow,
                                       start_at=float(w.get("start_at", 0.0))))

    script = []
    for i, s in enumerate(raw.get("script", [])):
        command = s["command"]
        vehicle = s.get("vehicle")
        if command in ("Pause", "Resume", "Restart", "RemoteStop",
                       "TransitionRoute"):
            if vehicle is None:
                _fail(f"{command} needs a vehicle", f"script[{i}]")
            if vehicle not in vehicle_ids:
                _fail(f"unknown vehicle {vehicle!r}", f"script[{i}].vehicle")
        if command == "TransitionRoute" and not s.get("waypoints"):
            _fail("TransitionRoute needs waypoints", f"script[{i}]")
        for j, t in enumerate(s.get("targets", [])):
            if t not in vehicle_ids:
                _fail(f"unknown vehicle {t!r}", f"script[{i}].targets[{j}]")
        script.append(ScriptedCommand(
            at=float(s["at"]), command=command, vehicle=vehicle,
            targets=tuple(s.get("targets", [])),
            waypoints=tuple(Waypoint(pose=_pose(wp["pose"]),
                                     rotate_to=wp.get("rotate_to"),
                                     dwell=wp.get("dwell"))
                            for wp in s.get("waypoints", []))))

    channel = _build_dc(ChannelConfig, raw.get("channel", {}), "channel",
                        windows_keys=("outages",))
    control = _build_dc(ControlConfig, raw.get("control", {}), "control")
    agent = _build_dc(AgentConfig, dict(raw.get("agent", {}), control=control),
                      "agent")
    estimator = _build_dc(EstimatorConfig, raw.get("estimator", {}),
                          "estimator")
    fleet = _build_dc(FleetConfig, raw.get("fleet", {}), "fleet")

    return Scenario(
        seed=int(raw["seed"]), timestep=float(raw["timestep"]),
        duration=float(raw["duration"]), vehicles=tuple(vehicles),
        persons=tuple(persons), zones=tuple(zones),
        workflows=tuple(workflows), channel=channel, agent=agent,
        estimator=estimator, fleet=fleet, script=tuple(script),
        stop_on_idle=raw.get("stop_on_idle", True),
        telemetry_every=int(raw.get("telemetry_every", 5)))


def load_scenario(path: str | Path, seed: Optional[int] = None) -> Scenario:
    """Load and validate a scenario file; ``seed`` overrides the file's."""
    p = Path(path)
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"unparseable scenario file: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("scenario file must contain a mapping")
    scenario = parse_scenario(raw)
    if seed is not None:
        scenario = replace(scenario, seed=int(seed))
    return scenario


def _plain(value: Any) -> Any:
    if isinstance(value, Pose2D):
        return [value.x, value.y, value.theta]
    if isinstance(value, ZoneKind):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _dc_dict(obj) -> dict:
    return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}


def materialized(scenario: Scenario) -> dict:
    """Full config with all defaults filled in, as plain JSON-able data."""
    out: dict[str, Any] = {
        "seed": scenario.seed,
        "timestep": scenario.timestep,
        "duration": scenario.duration,
        "stop_on_idle": scenario.stop_on_idle,
        "telemetry_every": scenario.telemetry_every,
        "vehicles": [],
        "persons": [],
        "zones": [],
        "workflows": [],
        "channel": _dc_dict(scenario.channel),
        "agent": {},
        "control": _dc_dict(scenario.agent.control),
        "estimator": _dc_dict(scenario.estimator),
        "fleet": _dc_dict(scenario.fleet),
        "script": [],
    }
    agent = _dc_dict(scenario.agent)
    agent.pop("control")
    out["agent"] = agent
    for v in scenario.vehicles:
        out["vehicles"].append({
            "id": v.actor_id, "pose": _plain(v.pose),
            "payload_mass": v.payload_mass,
            "spec": _dc_dict(v.spec), "sensors": _dc_dict(v.sensors),
            "hardware_failure_at": v.hardware_failure_at})
    for p in scenario.persons:
        out["persons"].append({
            "id": p.actor_id, "waypoints": _plain(p.walk.waypoints),
            "speed": p.walk.speed, "start_time": p.walk.start_time,
            "loop": p.walk.loop, "gnss_tag": p.gnss_tag})
    for z in scenario.zones:
        out["zones"].append({"id": z.zone_id, "vertices": _plain(z.vertices),
                             "kind": z.kind.value})
    for ws in scenario.workflows:
        w = ws.workflow
        out["workflows"].append({
            "id": w.workflow_id, "vehicles": list(w.vehicle_ids),
            "zones": list(w.zone_ids), "cruise_speed": w.cruise_speed,
            "loop": w.loop, "start_at": ws.start_at,
            "waypoints": {vid: [{"pose": _plain(wp.pose),
                                 "rotate_to": wp.rotate_to,
                                 "dwell": wp.dwell} for wp in wps]
                          for vid, wps in w.waypoints.items()}})
    for s in scenario.script:
        out["script"].append({
            "at": s.at, "command": s.command, "vehicle": s.vehicle,
            "targets": list(s.targets),
            "waypoints": [{"pose": _plain(wp.pose),
                           "rotate_to": wp.rotate_to, "dwell": wp.dwell}
                          for wp in s.waypoints]})
    return out
