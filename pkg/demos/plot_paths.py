"""Gallery of curvature-constrained paths to a ring of goal poses.

Writes paths.png next to this script.
"""
import math
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sitefleet.geom_planning import Pose2D, plan_rs_path, sample_path

R_MIN = 7.0
start = Pose2D(0.0, 0.0, 0.0)

fig, ax = plt.subplots(figsize=(8, 8))
for k in range(12):
    ang = 2 * math.pi * k / 12
    goal = Pose2D(22 * math.cos(ang), 22 * math.sin(ang), ang + math.pi / 2)
    path = plan_rs_path(start, goal, R_MIN)
    pts = sample_path(path, 0.25)
    xs = [s.pose.x for s in pts]
    ys = [s.pose.y for s in pts]
    ax.plot(xs, ys, lw=1.2)
    ax.annotate(f"{path.total_length:.1f} m", (goal.x, goal.y),
                fontsize=7, ha="center")

ax.plot(0, 0, "k^", ms=10)
ax.set_aspect("equal")
ax.set_title(f"shortest paths, minimum turning radius {R_MIN} m")
ax.grid(alpha=0.3)
out = pathlib.Path(__file__).with_name("paths.png")
fig.savefig(out, dpi=130, bbox_inches="tight")
print(f"wrote {out}")
