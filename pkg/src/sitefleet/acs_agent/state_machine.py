"""Mission-planner state machine and the fleet-manager wire vocabulary.

The mode table is deliberately small and total: five remote commands, four
modes, and every unlisted (mode, command) pair is a rejected no-op. Fault
entry is a separate transition driven by the local monitors, not by messages.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .missions import Mission


class AcsMode(str, enum.Enum):
    IDLE = "Idle"
    EXECUTING = "Executing"
    PAUSED_RECOVERABLE = "PausedRecoverable"
    STOPPED_NON_RECOVERABLE = "StoppedNonRecoverable"


class FaultKind(str, enum.Enum):
    CONNECTION_LOSS = "ConnectionLoss"
    SENSOR_TIMEOUT = "SensorTimeout"
    LOCALIZATION_DIVERGENCE = "LocalizationDivergence"
    HARDWARE_FAILURE = "HardwareFailure"

    @property
    def recoverable(self) -> bool:
        return self in (FaultKind.CONNECTION_LOSS, FaultKind.SENSOR_TIMEOUT)


class FmsCommandKind(str, enum.Enum):
    ASSIGN_MISSION = "AssignMission"
    PAUSE = "Pause"
    RESUME = "Resume"
    REMOTE_STOP = "RemoteStop"
    RESTART = "Restart"
    # UpdateMission swaps the remaining route without a mode transition and
    # Ping only refreshes liveness; neither participates in the mode table.
    UPDATE_MISSION = "UpdateMission"
    PING = "Ping"


MODE_COMMANDS = (
    FmsCommandKind.ASSIGN_MISSION,
    FmsCommandKind.PAUSE,
    FmsCommandKind.RESUME,
    FmsCommandKind.REMOTE_STOP,
    FmsCommandKind.RESTART,
)


@dataclass(frozen=True)
class FmsCommand:
    kind: FmsCommandKind
    mission: Optional[Mission] = None
    # cause travels with the command so logs can attribute the decision
    # ("operator", "interference", "intrusion", "heartbeat_timeout", ...).
    cause: str = ""
    # UpdateMission only: the replacement route takes over once the action at
    # this index completes, anchoring the new plan to a known boundary pose.
    after_index: Optional[int] = None


@dataclass(frozen=True)
class Heartbeat:
    actor_id: str
    stamp: float
    x: float
    y: float
    theta: float
    v: float
    mode: AcsMode
    mission_id: Optional[str]
    action_index: int
    fault: Optional[FaultKind]


@dataclass
class AcsState:
    mode: AcsMode = AcsMode.IDLE
    mission: Optional[Mission] = None
    action_index: int = 0
    fault: Optional[FaultKind] = None
    # Why the pause happened: "fault" enables local auto-resume once the
    # condition clears; anything else waits for a remote Resume.
    pause_cause: Optional[str] = None


_MESSAGE_TABLE: dict[tuple[AcsMode, FmsCommandKind], AcsMode] = {
    (AcsMode.IDLE, FmsCommandKind.ASSIGN_MISSION): AcsMode.EXECUTING,
    (AcsMode.EXECUTING, FmsCommandKind.PAUSE): AcsMode.PAUSED_RECOVERABLE,
    (AcsMode.PAUSED_RECOVERABLE, FmsCommandKind.RESUME): AcsMode.EXECUTING,
    (AcsMode.IDLE, FmsCommandKind.REMOTE_STOP): AcsMode.STOPPED_NON_RECOVERABLE,
    (AcsMode.EXECUTING, FmsCommandKind.REMOTE_STOP): AcsMode.STOPPED_NON_RECOVERABLE,
    (AcsMode.PAUSED_RECOVERABLE, FmsCommandKind.REMOTE_STOP): AcsMode.STOPPED_NON_RECOVERABLE,
    (AcsMode.STOPPED_NON_RECOVERABLE, FmsCommandKind.REMOTE_STOP): AcsMode.STOPPED_NON_RECOVERABLE,
    (AcsMode.STOPPED_NON_RECOVERABLE, FmsCommandKind.RESTART): AcsMode.IDLE,
}


def message_transition(mode: AcsMode, kind: FmsCommandKind) -> tuple[AcsMode, bool]:
    """Declared mode table. Returns (new_mode, accepted).

    A repeated RemoteStop is accepted but idempotent; everything outside the
    table leaves the mode untouched and reports rejection.
    """
    if kind not in MODE_COMMANDS:
        raise ValueError(f"{kind.value} is not a mode-table command")
    new_mode = _MESSAGE_TABLE.get((mode, kind))
    if new_mode is None:
        return mode, False
    return new_mode, True


def fault_transition(mode: AcsMode, fault: FaultKind) -> AcsMode:
    """Mode after a locally detected fault.

    Non-recoverable faults latch the stop from any mode. Recoverable faults
    pause execution; an idle or already-paused vehicle keeps its mode and
    only records the fault.
    """
    if mode is AcsMode.STOPPED_NON_RECOVERABLE:
        return mode
    if not fault.recoverable:
        return AcsMode.STOPPED_NON_RECOVERABLE
    if mode is AcsMode.EXECUTING:
        return AcsMode.PAUSED_RECOVERABLE
    return mode


def handle_fms_message(state: AcsState, cmd: FmsCommand) -> tuple[bool, list[dict]]:
    """Apply one remote command to the planner state.

    Mutates `state` and returns (accepted, events). Rejection is an event,
    never an error; the caller decides what to do with side effects such as
    engaging or releasing the physical stop.
    """
    prev = state.mode
    new_mode, accepted = message_transition(prev, cmd.kind)
    if not accepted:
        return False, [
            {"kind": "Rejected", "command": cmd.kind.value, "mode": prev.value}
        ]

    events: list[dict] = []
    if cmd.kind is FmsCommandKind.ASSIGN_MISSION:
        if cmd.mission is None:
            return False, [
                {"kind": "Rejected", "command": cmd.kind.value, "mode": prev.value,
                 "reason": "missing mission"}
            ]
        state.mission = cmd.mission
        state.action_index = 0
        state.fault = None
        state.pause_cause = None
        events.append({"kind": "MissionAccepted", "mission_id": cmd.mission.mission_id,
                       "n_actions": len(cmd.mission.actions)})
    elif cmd.kind is FmsCommandKind.PAUSE:
        state.pause_cause = cmd.cause or "remote"
    elif cmd.kind is FmsCommandKind.RESUME:
        state.fault = None
        state.pause_cause = None
    elif cmd.kind is FmsCommandKind.RESTART:
        state.mission = None
        state.action_index = 0
        state.fault = None
        state.pause_cause = None

    if new_mode is not prev:
        state.mode = new_mode
        events.append({"kind": "ModeChanged", "from": prev.value, "to": new_mode.value,
                       "cause": cmd.cause or cmd.kind.value})
    return True, events
