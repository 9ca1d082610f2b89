"""Hardware-free VR teleoperation stack.

Operator pose retargeting, UR3 analytic kinematics, a 2-DoF head
controller with homing, a CRC-framed UDP pose-streaming protocol, and a
deterministic fixed-timestep simulator with scripted manipulation
scenarios, session recording and a live console bridge.
"""

__version__ = "0.1.0"
