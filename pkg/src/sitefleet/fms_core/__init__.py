"""Fleet management service: compilation, supervision, dispatch."""
from .fleet import (AgentRecord, Conflict, FleetConfig, FleetManager,
                    SafetyCircle, TickResult, Waypoint, Workflow,
                    check_interference, check_path_in_zones,
                    check_zone_intrusion, compile_workflow)
from .zones import (Zone, ZoneKind, point_in_polygon, point_on_boundary,
                    polygon_area)

__all__ = [
    "AgentRecord",
    "Conflict",
    "FleetConfig",
    "FleetManager",
    "SafetyCircle",
    "TickResult",
    "Waypoint",
    "Workflow",
    "Zone",
    "ZoneKind",
    "check_interference",
    "check_path_in_zones",
    "check_zone_intrusion",
    "compile_workflow",
    "point_in_polygon",
    "point_on_boundary",
    "polygon_area",
]
