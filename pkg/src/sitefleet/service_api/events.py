"""Append-only event log: ndjson records, pure state reducer, digest.

Every record is {seq, sim_time, source, kind, payload} with contiguous
seq starting at 1. The run-time digest is a sha256 over the canonical JSON
of the reduced fleet state; replaying the log through the same reducer must
reproduce it exactly.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional

from ..errors import TruncatedLog


def canonical(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def initial_state() -> dict:
    return {"sim_time": 0.0, "agents": {}, "conflicts": [], "zones": {},
            "alerts": 0, "events": 0}


def _agent(state: dict, actor_id: str) -> dict:
    return state["agents"].setdefault(actor_id, {
        "x": 0.0, "y": 0.0, "theta": 0.0, "v": 0.0, "mode": "Idle",
        "mission_id": None, "action_index": 0, "fault": None,
        "latched": False})


def reduce_event(state: dict, record: dict) -> dict:
    """Fold one record into the fleet state. Pure given (state, record)."""
    state["events"] += 1
    state["sim_time"] = record["sim_time"]
    kind = record["kind"]
    source = record["source"]
    payload = record.get("payload", {})

    if kind == "Telemetry":
        a = _agent(state, source)
        for key in ("x", "y", "theta", "v", "mode", "action_index"):
            if key in payload:
                a[key] = payload[key]
        a["mission_id"] = payload.get("mission_id")
    elif kind == "ModeChanged":
        a = _agent(state, source)
        a["mode"] = payload["to"]
    elif kind == "FaultRaised":
        _agent(state, source)["fault"] = payload["fault"]
    elif kind == "FaultCleared":
        _agent(state, source)["fault"] = None
    elif kind == "StopEngaged":
        _agent(state, source)["latched"] = True
    elif kind == "StopReleased":
        _agent(state, source)["latched"] = False
    elif kind == "MissionAccepted":
        _agent(state, source)["mission_id"] = payload.get("mission_id")
    elif kind == "MissionComplete":
        _agent(state, source)["mission_id"] = None
    elif kind == "ConflictDetected":
        pair = payload["pair"]
        if pair not in state["conflicts"]:
            state["conflicts"].append(pair)
    elif kind == "ConflictCleared":
        pair = payload["pair"]
        if pair in state["conflicts"]:
            state["conflicts"].remove(pair)
    elif kind == "ZoneIntrusion":
        zone = state["zones"].setdefault(payload["zone"],
                                         {"intruders": [], "clear": True})
        zone["clear"] = False
        if payload["intruder"] not in zone["intruders"]:
            zone["intruders"].append(payload["intruder"])
    elif kind == "ZoneClear":
        zone = state["zones"].setdefault(payload["zone"],
                                         {"intruders": [], "clear": True})
        zone["clear"] = True
        zone["intruders"] = []
    elif kind == "OperatorAlert" or kind == "SafetyViolation":
        state["alerts"] += 1
    return state


def state_digest(state: dict) -> str:
    return hashlib.sha256(canonical(state).encode()).hexdigest()


class EventLog:
    """Sequential writer. Keeps records in memory, optionally streaming
    each line to a file, and folds the reducer as it goes so the digest is
    computed from exactly what was written."""

    def __init__(self, path: Optional[str | Path] = None) -> None:
        self.records: list[dict] = []
        self.state = initial_state()
        self._seq = 0
        self._fh = open(path, "w") if path is not None else None

    def append(self, sim_time: float, source: str, kind: str,
               payload: Optional[dict] = None) -> dict:
        self._seq += 1
        record = {"seq": self._seq, "sim_time": sim_time, "source": source,
                  "kind": kind, "payload": payload or {}}
        self.records.append(record)
        # header/footer framing stays out of the fold, mirroring replay()
        if kind not in ("run_start", "run_end"):
            reduce_event(self.state, record)
        if self._fh is not None:
            self._fh.write(canonical(record) + "\n")
        return record

    @property
    def digest(self) -> str:
        return state_digest(self.state)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def iter_records(lines: Iterable[str]):
    for line in lines:
        line = line.strip()
        if line:
            yield line


def replay(source: str | Path | Iterable[str]) -> tuple[dict, str]:
    """Fold a log back into (final state, digest), verifying structure.

    Raises TruncatedLog if the log is cut off before its run_end record or
    a trailing line is unparseable; raises ValueError if the recorded
    digest does not match the replayed one.
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = list(source)

    state = initial_state()
    last_seq = 0
    run_end_payload = None
    for line in iter_records(lines):
        try:
            record = json.loads(line)
            seq = record["seq"]
            kind = record["kind"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise TruncatedLog(
                f"unparseable record after seq {last_seq}: {exc}",
                last_seq=last_seq) from None
        if seq != last_seq + 1:
            raise ValueError(
                f"seq must increase by 1: got {seq} after {last_seq}")
        last_seq = seq
        if kind == "run_end":
            run_end_payload = record.get("payload", {})
            break
        if kind != "run_start":
            reduce_event(state, record)

    if run_end_payload is None:
        raise TruncatedLog(f"log ends without run_end at seq {last_seq}",
                           last_seq=last_seq)
    digest = state_digest(state)
    recorded = run_end_payload.get("digest")
    if recorded != digest:
        raise ValueError(
            f"digest mismatch: log says {recorded}, replay gives {digest}")
    return state, digest
