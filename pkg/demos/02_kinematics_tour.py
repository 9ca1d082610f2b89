"""UR3 kinematics tour: forward, the eight inverse branches, safety checks."""

import math

from viewvr.collision import self_collision
from viewvr.kinematics import (
    JointConfig,
    UR3_LIMITS,
    check_limits,
    fk,
    ik,
    select_solution,
)

home = JointConfig(0.0, -1.2, 1.0, -1.37, -1.57, 0.0)
pose = fk(home)
print("home configuration:", [f"{q:+.2f}" for q in home])
print("flange pose:", pose.position, "\n            ", pose.orientation)

solutions = ik(pose)
print(f"\ninverse kinematics returns {len(solutions)} branch(es) for this pose:")
for i, s in enumerate(solutions):
    tag = " <- nearest to home" if s == select_solution(solutions, home) else ""
    print(f"  {i}: " + " ".join(f"{q:+.3f}" for q in s) + tag)

far = fk(JointConfig(0.4, -0.9, 0.5, -1.2, -1.3, 0.3))
print(f"\na generic pose yields {len(ik(far))} branches (shoulder x elbow x wrist)")

print("\njoint limit check (UR3 factory envelope):", check_limits(home, UR3_LIMITS) or "ok")
bad = JointConfig(7.0, 0.0, 0.0, 0.0, -9.0, 0.0)
print("violations for an out-of-range config:", check_limits(bad, UR3_LIMITS))

print("\nself-collision proxy (capsule envelope):")
print("  stretched out:", self_collision(JointConfig(0, -math.pi / 2, 0, 0, 0, 0)))
print("  folded elbow: ", self_collision(JointConfig(0, -math.pi / 2, 2.8, 0, 0, 0)))
