"""Operator-to-robot retargeting walkthrough.

Anchors a calibration, then shows how hand displacements, workspace
scaling, pinch angles and head orientation map into robot commands.
"""

import math

from viewvr.geom import Pose, Quat, Vec3, quat_from_axis_angle, to_roll_pitch
from viewvr.retarget import PinchConfig, RollPitchBounds, calibrate, map_hand, map_head, map_pinch

hand0 = Pose(Vec3(0.0, 0.0, 0.0), Quat(1, 0, 0, 0))
flange0 = Pose(Vec3(0.35, -0.10, 0.30), Quat(1, 0, 0, 0))
head0 = Quat(1, 0, 0, 0)

cal = calibrate(hand0, flange0, head0, scale=0.5)
print("calibrated with workspace scale 0.5")
print("  hand at its anchor ->", map_hand(cal, hand0).position, "(the flange anchor, exactly)")

moved = Pose(Vec3(0.20, 0.0, 0.0), hand0.orientation)
print("  hand +20 cm forward ->", map_hand(cal, moved).position, "(+10 cm after scaling)")

twist = Pose(hand0.position, quat_from_axis_angle(Vec3(1, 0, 0), math.radians(30)))
print("  hand rolled 30 deg  ->", map_hand(cal, twist).orientation)

print("\npinch angle -> gripper aperture (closed 10 deg, open 60 deg):")
for angle in (5, 10, 35, 60, 80):
    print(f"  {angle:3d} deg -> {map_pinch(angle, PinchConfig()):.2f}")

print("\nheadset orientation -> head roll/pitch (yaw is discarded, 2-DoF head):")
bounds = RollPitchBounds()
for deg in (10, 45, 80):
    q = quat_from_axis_angle(Vec3(0, 1, 0), math.radians(deg))
    rp, degenerate = map_head(cal, q, bounds)
    note = " (clamped)" if deg > 60 else ""
    print(f"  pitch {deg:3d} deg -> roll {rp.roll:+.3f}, pitch {rp.pitch:+.3f} rad{note}")
