"""Deterministic fleet-management and autonomous-transport simulation.

Subpackages:
  geom_planning   planar geometry and bounded-curvature path planning
  world_sim       ground-truth world, vehicle plant, sensor emulation
  acs_agent       on-vehicle control stack (missions, estimation, control)
  fms_core        fleet service (workflow compilation, safety supervision)
  net_sim         simulated lossy transport plus the dedicated stop channel
  service_api     scenario runner, event log, CLI, live console endpoint
"""

__version__ = "0.1.0"
