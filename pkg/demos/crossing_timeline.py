"""Replay the bundled crossing scenario and plot the yield episode.

Shows the centre distance between the two carriers against the safety
limit, with the yielder's paused interval shaded. Writes crossing.png.
"""
import math
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sitefleet.acs_agent import AcsMode
from sitefleet.service_api import ScenarioRunner, load_scenario

root = pathlib.Path(__file__).resolve().parent.parent
scenario = load_scenario(root / "scenarios" / "crossing_paths.yaml")
runner = ScenarioRunner(scenario)

times, dists, b_paused = [], [], []


def sample():
    a = runner.world.vehicle_state("a")
    b = runner.world.vehicle_state("b")
    times.append(runner.world.time)
    dists.append(math.hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y))
    b_paused.append(
        runner.agents["b"].state.mode is AcsMode.PAUSED_RECOVERABLE)


code = runner.run(on_tick=lambda *a, **k: sample())
margin = scenario.fleet.safety_margin
limit = sum(v.spec.footprint_radius + margin for v in scenario.vehicles)

fig, ax = plt.subplots(figsize=(9, 4.5))
ax.plot(times, dists, lw=1.4, label="centre distance")
ax.axhline(limit, color="r", ls="--", lw=1, label=f"safety limit {limit:.2f} m")
ax.fill_between(times, 0, max(dists), where=b_paused, alpha=0.15,
                color="orange", label="b paused (yielding)")
for rec in runner.log.records:
    if rec["kind"] in ("ConflictDetected", "ConflictCleared"):
        ax.axvline(rec["sim_time"], color="gray", lw=0.8, ls=":")
ax.set_xlabel("sim time [s]")
ax.set_ylabel("distance [m]")
ax.set_title(f"crossing_paths: exit {code}, "
             f"min distance {min(dists):.2f} m")
ax.legend(loc="upper right", fontsize=8)
ax.grid(alpha=0.3)
out = pathlib.Path(__file__).with_name("crossing.png")
fig.savefig(out, dpi=130, bbox_inches="tight")
print(f"wrote {out}")
