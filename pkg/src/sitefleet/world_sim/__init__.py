"""Deterministic fixed-timestep ground-truth world and sensor emulation."""
from .sensors import GnssFix, GnssQuality, ImuSample, ResolverSample, SensorConfig
from .vehicle import Command, VehicleSpec, VehicleState, payload_factor
from .world import ScriptedWalk, World

__all__ = [
    "Command",
    "GnssFix",
    "GnssQuality",
    "ImuSample",
    "ResolverSample",
    "ScriptedWalk",
    "SensorConfig",
    "VehicleSpec",
    "VehicleState",
    "World",
    "payload_factor",
]
