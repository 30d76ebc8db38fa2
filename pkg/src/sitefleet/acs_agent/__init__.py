"""Per-vehicle autonomy: mission planner, localization filter, controllers."""
from .agent import Agent, AgentConfig, AgentOutput, detect_faults
from .control import ControlConfig, PidState, longitudinal_control, pure_pursuit, upper_body_pid
from .estimator import EstimatorConfig, Ekf, GnssUpdateResult
from .missions import Action, Dwell, FollowPath, Mission, RotateUpper
from .state_machine import (
    AcsMode,
    AcsState,
    FaultKind,
    FmsCommand,
    FmsCommandKind,
    Heartbeat,
    MODE_COMMANDS,
    fault_transition,
    handle_fms_message,
    message_transition,
)

__all__ = [
    "Action",
    "AcsMode",
    "AcsState",
    "Agent",
    "AgentConfig",
    "AgentOutput",
    "ControlConfig",
    "Dwell",
    "Ekf",
    "EstimatorConfig",
    "FaultKind",
    "FmsCommand",
    "FmsCommandKind",
    "FollowPath",
    "GnssUpdateResult",
    "Heartbeat",
    "MODE_COMMANDS",
    "Mission",
    "PidState",
    "RotateUpper",
    "detect_faults",
    "fault_transition",
    "handle_fms_message",
    "longitudinal_control",
    "message_transition",
    "pure_pursuit",
    "upper_body_pid",
]
