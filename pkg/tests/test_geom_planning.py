"""Geometry, planner, and path-query tests."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitefleet.errors import InvalidRadius, OutOfRange
from sitefleet.geom_planning import (
    Direction,
    Pose2D,
    Steer,
    advance,
    angle_diff,
    direction_runs,
    nearest_on_path,
    plan_rs_path,
    pose_along,
    sample_path,
    wrap_angle,
)

from planner_check import cross_check, generate_instances

# Shortest length for start (0,0,0), goal (0,0,pi), r_min 1, confirmed by the
# numeric word-family oracle before the planner existed.
GOLDEN_U_TURN = math.pi


finite_angle = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestAngles:
    @given(finite_angle)
    def test_wrap_range(self, theta):
        w = wrap_angle(theta)
        assert -math.pi < w <= math.pi

    @given(finite_angle)
    def test_wrap_congruent(self, theta):
        w = wrap_angle(theta)
        assert math.isclose(
            math.cos(w), math.cos(theta), abs_tol=1e-9
        ) and math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-9)

    def test_wrap_boundary(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi

    def test_angle_diff(self):
        assert angle_diff(0.1, -0.1) == pytest.approx(0.2)
        assert angle_diff(-3.0, 3.0) == pytest.approx(2 * math.pi - 6.0)


class TestPose:
    def test_normalizes_theta(self):
        p = Pose2D(0, 0, 3 * math.pi)
        assert p.theta == pytest.approx(math.pi)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Pose2D(math.nan, 0, 0)

    def test_to_local_roundtrip(self):
        a = Pose2D(3, -2, 0.7)
        b = Pose2D(-1, 5, -2.1)
        local = a.to_local(b)
        # rebuild b from local coordinates
        c, s = math.cos(a.theta), math.sin(a.theta)
        bx = a.x + c * local.x - s * local.y
        by = a.y + s * local.x + c * local.y
        assert bx == pytest.approx(b.x, abs=1e-12)
        assert by == pytest.approx(b.y, abs=1e-12)
        assert wrap_angle(a.theta + local.theta) == pytest.approx(b.theta)


class TestAdvance:
    def test_straight(self):
        p = advance(Pose2D(0, 0, 0), 5.0, 0.0, 1)
        assert (p.x, p.y, p.theta) == (5.0, 0.0, 0.0)

    def test_reverse_straight(self):
        p = advance(Pose2D(0, 0, 0), 5.0, 0.0, -1)
        assert p.x == pytest.approx(-5.0)

    def test_quarter_left_arc(self):
        r = 10.0
        p = advance(Pose2D(0, 0, 0), math.pi * r / 2, 1 / r, 1)
        assert p.x == pytest.approx(r, abs=1e-9)
        assert p.y == pytest.approx(r, abs=1e-9)
        assert p.theta == pytest.approx(math.pi / 2, abs=1e-9)

    def test_reverse_arc_retraces(self):
        start = Pose2D(1.0, 2.0, 0.5)
        fwd = advance(start, 3.0, 1 / 7.0, 1)
        back = advance(fwd, 3.0, 1 / 7.0, -1)
        assert back.is_close(start, pos_tol=1e-12, ang_tol=1e-12)


class TestPlanner:
    def test_straight_trivial(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(5, 0, 0), 6.0)
        assert len(path.segments) == 1
        seg = path.segments[0]
        assert seg.steer is Steer.STRAIGHT
        assert seg.direction is Direction.FORWARD
        assert seg.length == pytest.approx(5.0, abs=1e-9)

    def test_identity_trivial(self):
        path = plan_rs_path(Pose2D(2, 3, 1.0), Pose2D(2, 3, 1.0), 4.0)
        assert path.segments == ()
        assert path.total_length == 0.0
        assert path.end_pose == Pose2D(2, 3, 1.0)

    def test_golden_u_turn(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(0, 0, math.pi), 1.0)
        assert path.total_length == pytest.approx(GOLDEN_U_TURN, abs=1e-9)

    def test_invalid_radius(self):
        with pytest.raises(InvalidRadius):
            plan_rs_path(Pose2D(0, 0, 0), Pose2D(1, 0, 0), 0.0)
        with pytest.raises(InvalidRadius):
            plan_rs_path(Pose2D(0, 0, 0), Pose2D(1, 0, 0), -2.0)

    def test_structure_invariants(self):
        for start, goal, r in generate_instances(150, seed=77):
            path = plan_rs_path(start, goal, r)
            assert len(path.segments) <= 5
            assert path.total_length == pytest.approx(
                sum(s.length for s in path.segments), abs=1e-9
            )
            pose = start
            for seg in path.segments:
                assert seg.length >= 0.0
                if seg.steer is Steer.STRAIGHT:
                    assert seg.curvature == 0.0
                else:
                    assert abs(seg.curvature) == pytest.approx(1 / r, abs=1e-12)
                assert seg.start_pose.is_close(pose, pos_tol=1e-9, ang_tol=1e-9)
                pose = advance(pose, seg.length, seg.curvature, seg.direction.value)
            assert pose.is_close(goal, pos_tol=1e-6, ang_tol=1e-6)

    def test_matches_oracle_sample(self):
        max_diff, _ = cross_check(200, seed=41)
        assert max_diff <= 1e-6

    def test_symmetry(self):
        for start, goal, r in generate_instances(60, seed=5):
            fwd = plan_rs_path(start, goal, r).total_length
            rev = plan_rs_path(goal, start, r).total_length
            assert fwd == pytest.approx(rev, abs=1e-6)

    def test_scale_covariance(self):
        for start, goal, r in generate_instances(60, seed=9):
            base = plan_rs_path(start, goal, r).total_length
            k = 3.7
            scaled = plan_rs_path(
                Pose2D(start.x * k, start.y * k, start.theta),
                Pose2D(goal.x * k, goal.y * k, goal.theta),
                r * k,
            ).total_length
            assert scaled == pytest.approx(base * k, rel=1e-9, abs=1e-6)


class TestSamplePath:
    def test_straight_spacing(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(5, 0, 0), 6.0)
        samples = sample_path(path, 1.0)
        assert [round(s.s, 9) for s in samples] == [0, 1, 2, 3, 4, 5]
        assert all(s.pose.theta == 0 for s in samples)

    def test_empty_path(self):
        path = plan_rs_path(Pose2D(1, 1, 0.5), Pose2D(1, 1, 0.5), 3.0)
        samples = sample_path(path, 1.0)
        assert len(samples) == 1
        assert samples[0].pose == Pose2D(1, 1, 0.5)

    def test_arc_final_heading(self):
        r = 10.0
        goal = advance(Pose2D(0, 0, 0), math.pi * r / 2, 1 / r, 1)
        path = plan_rs_path(Pose2D(0, 0, 0), goal, r)
        samples = sample_path(path, 0.1)
        assert samples[-1].pose.theta == pytest.approx(math.pi / 2, abs=1e-6)
        assert samples[-1].s == pytest.approx(path.total_length, abs=1e-9)
        diffs = np.diff([s.s for s in samples])
        assert np.all(diffs > 0)
        assert np.all(diffs <= 0.1 + 1e-12)

    def test_endpoints_exact(self):
        for start, goal, r in generate_instances(20, seed=3):
            path = plan_rs_path(start, goal, r)
            samples = sample_path(path, 0.5)
            assert samples[0].pose.is_close(start, pos_tol=1e-9, ang_tol=1e-9)
            assert samples[-1].pose.is_close(path.end_pose, pos_tol=1e-9, ang_tol=1e-9)


class TestPoseAlong:
    def test_ends(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(7, 3, 1.2), 7.0)
        assert pose_along(path, 0.0).pose.is_close(Pose2D(0, 0, 0))
        end = pose_along(path, path.total_length).pose
        assert end.is_close(path.end_pose, pos_tol=1e-9, ang_tol=1e-9)

    def test_straight_midpoint(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(5, 0, 0), 6.0)
        sample = pose_along(path, 2.5)
        assert (sample.pose.x, sample.pose.y, sample.pose.theta) == (2.5, 0.0, 0.0)

    def test_out_of_range(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(5, 0, 0), 6.0)
        with pytest.raises(OutOfRange):
            pose_along(path, -0.5)
        with pytest.raises(OutOfRange):
            pose_along(path, path.total_length + 0.5)

    def test_matches_sampling(self):
        for start, goal, r in generate_instances(10, seed=21):
            path = plan_rs_path(start, goal, r)
            for sample in sample_path(path, 0.37):
                direct = pose_along(path, sample.s)
                assert direct.pose.is_close(sample.pose, pos_tol=1e-9, ang_tol=1e-9)


class TestNearestOnPath:
    def test_on_path_point(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(10, 0, 0), 6.0)
        p = pose_along(path, 3.0).pose
        assert nearest_on_path(path, p, 2.9) == pytest.approx(3.0, abs=1e-3)

    def test_lateral_offset_projects(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(10, 0, 0), 6.0)
        assert nearest_on_path(path, Pose2D(3.0, -0.5, 0), 2.9) == pytest.approx(
            3.0, abs=1e-3
        )

    def test_hint_at_end_clamps(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(10, 0, 0), 6.0)
        total = path.total_length
        assert nearest_on_path(path, Pose2D(4, 0, 0), total) == pytest.approx(total)

    def test_never_backtracks(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(10, 0, 0), 6.0)
        assert nearest_on_path(path, Pose2D(1.0, 0.2, 0), 4.0) >= 4.0

    def test_arc_projection(self):
        r = 10.0
        goal = advance(Pose2D(0, 0, 0), math.pi * r / 2, 1 / r, 1)
        path = plan_rs_path(Pose2D(0, 0, 0), goal, r)
        on = pose_along(path, 5.0).pose
        # offset radially outward from the turn center at (0, r)
        cx, cy = 0.0, r
        ux = (on.x - cx) / r
        uy = (on.y - cy) / r
        off = Pose2D(on.x + 0.4 * ux, on.y + 0.4 * uy, on.theta)
        assert nearest_on_path(path, off, 4.5) == pytest.approx(5.0, abs=1e-6)


class TestDirectionRuns:
    def test_single_run(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(10, 0, 0), 6.0)
        runs = direction_runs(path)
        assert len(runs) == 1
        assert runs[0] == (0.0, path.total_length, Direction.FORWARD)

    def test_u_turn_runs_partition(self):
        path = plan_rs_path(Pose2D(0, 0, 0), Pose2D(0, 0, math.pi), 1.0)
        runs = direction_runs(path)
        assert len(runs) == path.n_reversals + 1
        assert runs[0][0] == 0.0
        assert runs[-1][1] == pytest.approx(path.total_length)
        for (a, b, _), (c, d, _) in zip(runs, runs[1:]):
            assert b == pytest.approx(c)
