"""Operator-to-robot retargeting: hand pose, head orientation, pinch grip.

A calibration snapshot anchors the operator's hand and the robot tool
flange at a common instant; afterwards the hand's displacement and
relative rotation are replayed around the flange anchor:

    position    = ee0 + scale * R_align (hand_pos - hand0_pos)
    orientation = q_align * hand_q * hand0_q^-1 * q_align^-1 * ee0_q

which keeps the calibration instant an exact fixed point (the hand at its
anchor commands exactly the flange anchor) and maps operator-frame motion
axes into robot-frame axes through the fixed alignment rotation.

Head orientation is taken relative to its own calibration anchor and
reduced to roll/pitch (yaw discarded -- the head has two axes).  For rigs
whose second axis is a pan (yaw) rather than roll, ``map_head`` accepts
``use_yaw_as_roll=True`` to feed the yaw channel into the roll output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .geom import (
    Pose,
    Quat,
    RollPitch,
    quat_inverse,
    quat_mul,
    rotate_point,
    to_roll_pitch,
)


class InvalidCalibrationError(ValueError):
    """Raised when a calibration is constructed with invalid parameters."""


@dataclass(frozen=True)
class Calibration:
    hand_origin: Pose
    ee_origin: Pose
    frame_align: Quat
    scale: float
    head_origin: Quat


def calibrate(
    hand_pose: Pose,
    ee_pose: Pose,
    head_quat: Quat,
    frame_align: Quat = Quat(1.0, 0.0, 0.0, 0.0),
    scale: float = 1.0,
) -> Calibration:
    """Anchor the retarget maps at the given instant; scale must be > 0."""
    if not (scale > 0.0) or not math.isfinite(scale):
        raise InvalidCalibrationError(f"scale must be positive and finite, got {scale}")
    return Calibration(hand_pose, ee_pose, frame_align, scale, head_quat)


def map_hand(cal: Calibration, hand: Pose) -> Pose:
    """Retarget an operator hand pose to a robot flange target pose."""
    disp = hand.position - cal.hand_origin.position
    position = cal.ee_origin.position + rotate_point(cal.frame_align, disp) * cal.scale
    rel = quat_mul(hand.orientation, quat_inverse(cal.hand_origin.orientation))
    rel_robot = quat_mul(quat_mul(cal.frame_align, rel), quat_inverse(cal.frame_align))
    orientation = quat_mul(rel_robot, cal.ee_origin.orientation)
    return Pose(position, orientation)


@dataclass(frozen=True)
class RollPitchBounds:
    """Inclusive per-channel head limits, radians."""

    roll_min: float = -math.radians(60.0)
    roll_max: float = math.radians(60.0)
    pitch_min: float = -math.radians(45.0)
    pitch_max: float = math.radians(60.0)

    def __post_init__(self):
        if not (self.roll_min < self.roll_max and self.pitch_min < self.pitch_max):
            raise ValueError("head limit min must be below max on both channels")

    def clamp(self, rp: RollPitch) -> RollPitch:
        return RollPitch(
            min(self.roll_max, max(self.roll_min, rp.roll)),
            min(self.pitch_max, max(self.pitch_min, rp.pitch)),
        )


def map_head(
    cal: Calibration,
    head: Quat,
    limits: RollPitchBounds,
    use_yaw_as_roll: bool = False,
) -> tuple[RollPitch, bool]:
    """Head orientation relative to its anchor, clamped to the rig limits.

    Returns ``(RollPitch, degenerate)``; ``degenerate`` is True near the
    pitch gimbal where the roll channel is ill-conditioned (the clamped
    value is still returned).
    """
    rel = quat_mul(head, quat_inverse(cal.head_origin))
    rp, degenerate = to_roll_pitch(rel)
    if use_yaw_as_roll:
        # pan-tilt rigs: drive the first axis from yaw instead of roll
        yaw = math.atan2(
            2.0 * (rel.w * rel.z + rel.x * rel.y),
            1.0 - 2.0 * (rel.y * rel.y + rel.z * rel.z),
        )
        rp = RollPitch(yaw, rp.pitch)
    return limits.clamp(rp), degenerate


@dataclass(frozen=True)
class PinchConfig:
    """Thumb-index angle to gripper aperture map; degrees in, [0,1] out."""

    angle_closed: float = 10.0
    angle_open: float = 60.0

    def __post_init__(self):
        if not self.angle_open > self.angle_closed:
            raise ValueError(
                f"angle_open ({self.angle_open}) must exceed angle_closed ({self.angle_closed})"
            )


def map_pinch(angle_deg: float, cfg: PinchConfig = PinchConfig()) -> float:
    """Linear map: angle_closed -> 0, angle_open -> 1, clamped to [0, 1]."""
    t = (angle_deg - cfg.angle_closed) / (cfg.angle_open - cfg.angle_closed)
    return min(1.0, max(0.0, t))


class Camera(Enum):
    WRIST = 0
    HEAD = 1


CAMERA_TOGGLE_DEBOUNCE_S = 0.2


@dataclass(frozen=True)
class GripperState:
    aperture: float = 1.0
    active_camera: Camera = Camera.WRIST
    last_toggle_time: float = -math.inf

    def __post_init__(self):
        if not 0.0 <= self.aperture <= 1.0:
            raise ValueError(f"aperture must be in [0, 1], got {self.aperture}")


def toggle_camera(state: GripperState, t: float) -> GripperState:
    """Flip the active camera unless inside the debounce window."""
    if t - state.last_toggle_time < CAMERA_TOGGLE_DEBOUNCE_S:
        return state
    flipped = Camera.HEAD if state.active_camera is Camera.WRIST else Camera.WRIST
    return replace(state, active_camera=flipped, last_toggle_time=t)


@dataclass
class Clutch:
    """Optional gate that freezes retargeting while the operator repositions.

    While engaged, :meth:`apply` keeps returning the pose held at engage
    time; releasing re-anchors the calibration so the hand's new position
    maps to the held pose (no jump on release).  Disengaged by default.
    """

    engaged: bool = False
    held: Pose | None = None

    def engage(self, cal: Calibration, hand: Pose) -> None:
        if not self.engaged:
            self.held = map_hand(cal, hand)
            self.engaged = True

    def release(self, cal: Calibration, hand: Pose) -> Calibration:
        """Re-anchor at the current hand position; returns the new calibration."""
        if not self.engaged:
            return cal
        assert self.held is not None
        self.engaged = False
        held, self.held = self.held, None
        return Calibration(
            hand_origin=Pose(hand.position, hand.orientation),
            ee_origin=held,
            frame_align=cal.frame_align,
            scale=cal.scale,
            head_origin=cal.head_origin,
        )

    def apply(self, cal: Calibration, hand: Pose) -> Pose:
        if self.engaged:
            assert self.held is not None
            return self.held
        return map_hand(cal, hand)
