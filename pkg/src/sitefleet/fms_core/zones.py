"""Operational zones: simple polygons with a strict interior membership test.

Intrusion decisions use the strict interior (boundary contact does not
count); path-containment checks accept the boundary, since a path hugging
the fence is still inside the permitted area.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class ZoneKind(str, enum.Enum):
    OPERATIONAL = "Operational"
    FORBIDDEN = "Forbidden"


def _segments_intersect(p1, p2, p3, p4) -> bool:
    """Proper crossing test for non-adjacent polygon edges."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def polygon_area(vertices) -> float:
    """Signed shoelace area."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def point_on_boundary(x: float, y: float, vertices, tol: float = 1e-9) -> bool:
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        seg_len = math.hypot(ex, ey)
        cross = ex * (y - ay) - ey * (x - ax)
        if abs(cross) > tol * max(1.0, seg_len):
            continue
        dot = (x - ax) * ex + (y - ay) * ey
        if -tol * seg_len <= dot <= seg_len * seg_len + tol * seg_len:
            return True
    return False


def point_in_polygon(x: float, y: float, vertices) -> bool:
    """Strict interior test (ray casting); boundary points are outside."""
    if point_on_boundary(x, y, vertices):
        return False
    inside = False
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        # half-open rule keeps vertex-on-ray cases counted exactly once
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < x_cross:
                inside = not inside
    return inside


@dataclass(frozen=True)
class Zone:
    zone_id: str
    vertices: tuple[tuple[float, float], ...]
    kind: ZoneKind = ZoneKind.OPERATIONAL

    def __post_init__(self) -> None:
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError(f"zone {self.zone_id!r}: polygon needs >= 3 vertices")
        if abs(polygon_area(verts)) < 1e-12:
            raise ValueError(f"zone {self.zone_id!r}: polygon area must be > 0")
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            if math.hypot(b[0] - a[0], b[1] - a[1]) < 1e-12:
                raise ValueError(f"zone {self.zone_id!r}: repeated vertex {a}")
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                c, d = verts[j], verts[(j + 1) % n]
                if _segments_intersect(a, b, c, d):
                    raise ValueError(
                        f"zone {self.zone_id!r}: polygon self-intersects "
                        f"(edges {i} and {j})")

    def contains(self, x: float, y: float) -> bool:
        """Strict interior membership."""
        return point_in_polygon(x, y, self.vertices)

    def covers(self, x: float, y: float) -> bool:
        """Interior or boundary membership, for path containment."""
        return point_on_boundary(x, y, self.vertices) or point_in_polygon(
            x, y, self.vertices)
