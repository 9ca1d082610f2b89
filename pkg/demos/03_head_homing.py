"""Closed-loop head homing, then a tracking step with the trapezoid profile.

The controller sees only Hall levels and incremental encoder counts; watch
it sweep, back off, re-approach slowly, zero, and move to neutral.
"""

from viewvr.geom import RollPitch
from viewvr.headctl import (
    Axis,
    HeadFsm,
    HeadState,
    MotorLimits,
    homing_step,
    track_step,
    trapezoid_settle_time,
)
from viewvr.simworld.plants import HeadPlant

lim = MotorLimits()
plant = HeadPlant(limits=lim)
plant.set_angles(-0.8, 0.45)  # roll starts below the mark: forces a reversal
state = HeadState()

print("homing from roll=-0.80, pitch=+0.45 rad")
t_us, last = 0, None
while state.fsm not in (HeadFsm.HOMED, HeadFsm.FAULTED):
    if t_us % 10_000 == 0:
        state, cmd = homing_step(state, plant.halls(), plant.encoders(), 0.01, lim)
        plant.apply(cmd)
        snapshot = (state.fsm, state.phase(Axis.ROLL), state.phase(Axis.PITCH))
        if snapshot != last:
            roll = state.phase(Axis.ROLL).value if state.phase(Axis.ROLL) else "-"
            pitch = state.phase(Axis.PITCH).value if state.phase(Axis.PITCH) else "-"
            print(f"  t={t_us/1e6:6.2f}s  {state.fsm.value:<12} roll:{roll:<13} pitch:{pitch}")
            last = snapshot
    plant.step(0.001)
    t_us += 1_000
print(f"homed in {t_us/1e6:.2f} s; residual plant error "
      f"{max(abs(plant.angle(Axis.ROLL)), abs(plant.angle(Axis.PITCH))):.2e} rad")

print("\ntracking a 0.5 rad roll step:")
print(f"  closed-form settle time: {trapezoid_settle_time(0.5, lim):.3f} s")
steps = 0
while not (state.roll == 0.5 and state.roll_vel == 0.0):
    track_step(state, RollPitch(0.5, 0.0), lim, 0.01)
    steps += 1
print(f"  discrete profile settled in {steps * 0.01:.3f} s")
