"""Simulated robot-side hardware: arm servo, head motors, gripper.

These are deliberately simple, deterministic plants: the arm is a
rate-limited first-order position servo (the real arm is a position-
controlled black box), the head integrates velocity commands under
acceleration/velocity caps with hard stops at the range ends, and the
gripper follows its aperture command directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..headctl import (
    Axis,
    ENCODER_TICK,
    EncoderReading,
    HALL_MARK,
    HALL_WINDOW,
    HallReading,
    MotorCommand,
    MotorLimits,
)
from ..kinematics import JointConfig, JointLimits, UR3_LIMITS


@dataclass
class ArmPlant:
    """Six-joint position servo: first-order pull toward the target with
    per-joint velocity caps."""

    q: JointConfig = JointConfig(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    target: JointConfig | None = None
    limits: JointLimits = UR3_LIMITS
    gain: float = 20.0  # 1/s

    def step(self, dt: float) -> None:
        if self.target is None:
            return
        new = []
        for qi, ti, vmax in zip(self.q, self.target, self.limits.velocity):
            v = self.gain * (ti - qi)
            v = min(vmax, max(-vmax, v))
            new.append(qi + v * dt)
        self.q = JointConfig(*new)

    def halt(self) -> None:
        self.target = None


@dataclass
class _HeadAxis:
    angle: float = 0.0
    vel: float = 0.0


@dataclass
class HeadPlant:
    """Two velocity-commanded motor axes with encoders and Hall sensors.

    Velocity commands are followed under the acceleration/velocity caps;
    the hard stops at the range ends clamp the angle and kill velocity.
    Encoders are incremental with ``ENCODER_TICK`` quantization; the Hall
    level is true within ``HALL_WINDOW`` of the mark.  ``hall_stuck_false``
    simulates a missing/miswired sensor for fault-path tests.
    """

    limits: MotorLimits = field(default_factory=MotorLimits)
    axes: dict[Axis, _HeadAxis] = field(default_factory=dict)
    command: MotorCommand = MotorCommand(0.0, 0.0)
    hall_stuck_false: bool = False

    def __post_init__(self):
        if not self.axes:
            self.axes = {axis: _HeadAxis() for axis in Axis}

    def set_angles(self, roll: float, pitch: float) -> None:
        self.axes[Axis.ROLL].angle = roll
        self.axes[Axis.PITCH].angle = pitch

    def apply(self, command: MotorCommand) -> None:
        self.command = command

    def step(self, dt: float) -> None:
        for axis in Axis:
            st = self.axes[axis]
            cmd = self.command.roll_vel if axis is Axis.ROLL else self.command.pitch_vel
            cmd = min(self.limits.omega_max, max(-self.limits.omega_max, cmd))
            dv = cmd - st.vel
            max_dv = self.limits.alpha_max * dt
            st.vel += min(max_dv, max(-max_dv, dv))
            st.angle += st.vel * dt
            lo, hi = self.limits.range_of(axis)
            if st.angle <= lo:
                st.angle, st.vel = lo, 0.0
            elif st.angle >= hi:
                st.angle, st.vel = hi, 0.0

    def angle(self, axis: Axis) -> float:
        return self.axes[axis].angle

    def encoder(self, axis: Axis) -> float:
        return round(self.axes[axis].angle / ENCODER_TICK) * ENCODER_TICK

    def encoders(self) -> EncoderReading:
        return EncoderReading(self.encoder(Axis.ROLL), self.encoder(Axis.PITCH))

    def hall(self, axis: Axis) -> bool:
        if self.hall_stuck_false:
            return False
        return abs(self.axes[axis].angle - HALL_MARK) <= HALL_WINDOW

    def halls(self) -> HallReading:
        return HallReading(self.hall(Axis.ROLL), self.hall(Axis.PITCH))


@dataclass
class GripperPlant:
    """Aperture follower; [0, 1], 1 = fully open."""

    aperture: float = 1.0

    def apply(self, aperture: float) -> None:
        self.aperture = min(1.0, max(0.0, aperture))
