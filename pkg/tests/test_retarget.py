import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viewvr.geom import (
    Pose,
    Quat,
    RollPitch,
    Vec3,
    quat_angle,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    rotate_point,
    to_roll_pitch,
)
from viewvr.retarget import (
    Camera,
    Calibration,
    Clutch,
    GripperState,
    InvalidCalibrationError,
    PinchConfig,
    RollPitchBounds,
    calibrate,
    map_hand,
    map_head,
    map_pinch,
    toggle_camera,
)

IDENT = Quat(1.0, 0.0, 0.0, 0.0)


def random_quat(rng) -> Quat:
    v = [rng.gauss(0, 1) for _ in range(4)]
    return quat_normalize(Quat(*v))


def random_pose(rng) -> Pose:
    return Pose(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)), random_quat(rng))


class TestCalibrate:
    def test_identity_calibration_maps_identity(self):
        ident_pose = Pose(Vec3(0, 0, 0), IDENT)
        cal = calibrate(ident_pose, ident_pose, IDENT)
        got = map_hand(cal, ident_pose)
        assert got.position == Vec3(0, 0, 0)
        assert quat_angle(got.orientation, IDENT) < 1e-12

    def test_fixed_point_any_pair(self):
        rng = random.Random(1)
        for _ in range(50):
            hand, ee = random_pose(rng), random_pose(rng)
            cal = calibrate(hand, ee, random_quat(rng), random_quat(rng), rng.uniform(0.2, 3.0))
            got = map_hand(cal, hand)
            assert got.position == ee.position  # exact: zero displacement in, anchor out
            assert quat_angle(got.orientation, ee.orientation) < 1e-12

    def test_zero_scale_rejected(self):
        p = Pose(Vec3(0, 0, 0), IDENT)
        with pytest.raises(InvalidCalibrationError):
            calibrate(p, p, IDENT, IDENT, 0.0)

    def test_negative_scale_rejected(self):
        p = Pose(Vec3(0, 0, 0), IDENT)
        with pytest.raises(InvalidCalibrationError):
            calibrate(p, p, IDENT, IDENT, -1.0)

    def test_origins_stored_exactly(self):
        rng = random.Random(2)
        hand, ee = random_pose(rng), random_pose(rng)
        head = random_quat(rng)
        cal = calibrate(hand, ee, head)
        assert cal.hand_origin is hand and cal.ee_origin is ee and cal.head_origin is head


class TestMapHand:
    def test_translation_passthrough_identity_align(self):
        rng = random.Random(3)
        hand0, ee0 = random_pose(rng), random_pose(rng)
        cal = calibrate(hand0, ee0, IDENT, IDENT, 1.0)
        moved = Pose(hand0.position + Vec3(0.10, 0, 0), hand0.orientation)
        got = map_hand(cal, moved)
        want = ee0.position + Vec3(0.10, 0, 0)
        assert (got.position - want).norm() < 1e-15

    def test_scale_halves_displacement(self):
        rng = random.Random(4)
        hand0, ee0 = random_pose(rng), random_pose(rng)
        align = random_quat(rng)
        cal1 = calibrate(hand0, ee0, IDENT, align, 1.0)
        cal05 = calibrate(hand0, ee0, IDENT, align, 0.5)
        moved = Pose(hand0.position + Vec3(0.3, -0.2, 0.12), hand0.orientation)
        d1 = map_hand(cal1, moved).position - ee0.position
        d05 = map_hand(cal05, moved).position - ee0.position
        assert (d05 - d1 * 0.5).norm() < 1e-15
        assert quat_angle(map_hand(cal05, moved).orientation, map_hand(cal1, moved).orientation) < 1e-12

    def test_equivariance_under_translation(self):
        rng = random.Random(5)
        for _ in range(25):
            hand0, ee0 = random_pose(rng), random_pose(rng)
            align = random_quat(rng)
            scale = rng.uniform(0.3, 2.5)
            cal = calibrate(hand0, ee0, IDENT, align, scale)
            hand = random_pose(rng)
            delta = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
            shifted = Pose(hand.position + delta, hand.orientation)
            lhs = map_hand(cal, shifted).position
            rhs = map_hand(cal, hand).position + rotate_point(align, delta) * scale
            assert (lhs - rhs).norm() < 1e-12

    def test_relative_rotation_transported_through_alignment(self):
        # rotating the hand 30 deg about operator x must rotate the tool
        # 30 deg about the robot axis that x aligns to
        align = quat_from_axis_angle(Vec3(0, 0, 1), math.pi / 2)  # op x -> robot y
        hand0 = Pose(Vec3(0, 0, 0), IDENT)
        ee0 = Pose(Vec3(0.3, 0.0, 0.3), IDENT)
        cal = calibrate(hand0, ee0, IDENT, align, 1.0)
        hand = Pose(Vec3(0, 0, 0), quat_from_axis_angle(Vec3(1, 0, 0), math.radians(30)))
        got = map_hand(cal, hand)
        want = quat_mul(quat_from_axis_angle(Vec3(0, 1, 0), math.radians(30)), ee0.orientation)
        assert quat_angle(got.orientation, want) < 1e-12


class TestMapHead:
    BOUNDS = RollPitchBounds()

    def test_anchor_maps_to_zero(self):
        rng = random.Random(6)
        head0 = random_quat(rng)
        cal = calibrate(Pose(Vec3(0, 0, 0), IDENT), Pose(Vec3(0, 0, 0), IDENT), head0)
        rp, degen = map_head(cal, head0, self.BOUNDS)
        assert abs(rp.roll) < 1e-12 and abs(rp.pitch) < 1e-12
        assert not degen

    def test_pitch_clamped(self):
        bounds = RollPitchBounds(pitch_min=-1.0, pitch_max=1.0)
        cal = calibrate(Pose(Vec3(0, 0, 0), IDENT), Pose(Vec3(0, 0, 0), IDENT), IDENT)
        # 2.0 rad pure pitch: decomposition folds it to pi - 2.0, but a
        # clamp-worthy pitch of 1.2 rad stays in asin range and must clamp
        head = quat_from_axis_angle(Vec3(0, 1, 0), 1.2)
        rp, _ = map_head(cal, head, bounds)
        assert rp.pitch == 1.0

    def test_output_always_within_limits(self):
        rng = random.Random(7)
        bounds = RollPitchBounds()
        cal = calibrate(Pose(Vec3(0, 0, 0), IDENT), Pose(Vec3(0, 0, 0), IDENT), random_quat(rng))
        for _ in range(200):
            rp, _ = map_head(cal, random_quat(rng), bounds)
            assert bounds.roll_min <= rp.roll <= bounds.roll_max
            assert bounds.pitch_min <= rp.pitch <= bounds.pitch_max

    def test_yaw_discarded_matches_geom_oracle(self):
        cal = calibrate(Pose(Vec3(0, 0, 0), IDENT), Pose(Vec3(0, 0, 0), IDENT), IDENT)
        roll, pitch, yaw = math.radians(15), math.radians(-20), math.radians(70)
        qz = quat_from_axis_angle(Vec3(0, 0, 1), yaw)
        qy = quat_from_axis_angle(Vec3(0, 1, 0), pitch)
        qx = quat_from_axis_angle(Vec3(1, 0, 0), roll)
        head = quat_mul(qz, quat_mul(qy, qx))
        rp, degen = map_head(cal, head, RollPitchBounds())
        oracle, _ = to_roll_pitch(head)
        assert abs(rp.roll - oracle.roll) < 1e-15 and abs(rp.pitch - oracle.pitch) < 1e-15
        assert abs(rp.roll - roll) < 1e-12 and abs(rp.pitch - pitch) < 1e-12
        assert not degen

    def test_gimbal_flagged_and_clamped(self):
        cal = calibrate(Pose(Vec3(0, 0, 0), IDENT), Pose(Vec3(0, 0, 0), IDENT), IDENT)
        head = quat_from_axis_angle(Vec3(0, 1, 0), math.pi / 2)
        rp, degen = map_head(cal, head, RollPitchBounds())
        assert degen
        assert rp.pitch == RollPitchBounds().pitch_max

    def test_yaw_remap_option(self):
        cal = calibrate(Pose(Vec3(0, 0, 0), IDENT), Pose(Vec3(0, 0, 0), IDENT), IDENT)
        head = quat_from_axis_angle(Vec3(0, 0, 1), math.radians(25))
        rp_default, _ = map_head(cal, head, RollPitchBounds())
        assert abs(rp_default.roll) < 1e-12  # yaw discarded
        rp_remap, _ = map_head(cal, head, RollPitchBounds(), use_yaw_as_roll=True)
        assert abs(rp_remap.roll - math.radians(25)) < 1e-12


class TestMapPinch:
    def test_open_endpoint(self):
        assert map_pinch(60.0) == 1.0

    def test_closed_endpoint(self):
        assert map_pinch(10.0) == 0.0

    def test_midpoint(self):
        assert abs(map_pinch(35.0) - 0.5) < 1e-15

    def test_clamped_outside(self):
        assert map_pinch(-20.0) == 0.0
        assert map_pinch(179.0) == 1.0

    @given(st.floats(-50, 150), st.floats(-50, 150))
    def test_monotone_and_bounded(self, a, b):
        fa, fb = map_pinch(a), map_pinch(b)
        assert 0.0 <= fa <= 1.0
        if a <= b:
            assert fa <= fb

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            PinchConfig(angle_closed=60.0, angle_open=10.0)


class TestToggleCamera:
    def test_flip(self):
        s = GripperState()
        s2 = toggle_camera(s, 1.0)
        assert s2.active_camera is Camera.HEAD
        assert s2.last_toggle_time == 1.0

    def test_involution_outside_debounce(self):
        s = GripperState()
        s2 = toggle_camera(toggle_camera(s, 1.0), 2.0)
        assert s2.active_camera is s.active_camera

    def test_debounced(self):
        s = toggle_camera(GripperState(), 1.0)
        s2 = toggle_camera(s, 1.05)
        assert s2 == s  # unchanged inside the 200 ms window

    def test_exact_window_boundary_allows(self):
        s = toggle_camera(GripperState(), 0.0)
        s2 = toggle_camera(s, 0.2)  # exactly the debounce width
        assert s2.active_camera is not s.active_camera


class TestClutch:
    def test_disengaged_passthrough(self):
        rng = random.Random(8)
        cal = calibrate(random_pose(rng), random_pose(rng), IDENT)
        hand = random_pose(rng)
        clutch = Clutch()
        a, b = clutch.apply(cal, hand), map_hand(cal, hand)
        assert a.position == b.position and a.orientation == b.orientation

    def test_engaged_freezes_output(self):
        rng = random.Random(9)
        cal = calibrate(random_pose(rng), random_pose(rng), IDENT)
        hand1, hand2 = random_pose(rng), random_pose(rng)
        clutch = Clutch()
        clutch.engage(cal, hand1)
        held = clutch.apply(cal, hand2)
        want = map_hand(cal, hand1)
        assert (held.position - want.position).norm() < 1e-15

    def test_release_reanchors_without_jump(self):
        rng = random.Random(10)
        cal = calibrate(random_pose(rng), random_pose(rng), IDENT, random_quat(rng), 1.5)
        hand1, hand2 = random_pose(rng), random_pose(rng)
        clutch = Clutch()
        clutch.engage(cal, hand1)
        cal2 = clutch.release(cal, hand2)
        got = map_hand(cal2, hand2)
        want = map_hand(cal, hand1)  # held pose
        assert (got.position - want.position).norm() < 1e-15
        assert quat_angle(got.orientation, want.orientation) < 1e-12
