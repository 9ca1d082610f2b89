import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from viewvr.geom import RollPitch
from viewvr.headctl import (
    Axis,
    AxisPhase,
    EncoderReading,
    HallReading,
    HeadFsm,
    HeadState,
    MotorCommand,
    MotorLimits,
    NotHomedError,
    PeriodicScheduler,
    homing_step,
    reset_head,
    track_step,
    trapezoid_settle_time,
)
from viewvr.simworld.plants import HeadPlant

CTRL_DT = 0.01  # 100 Hz control period
PLANT_DT = 0.001  # 1 ms physics step


def run_homing(plant: HeadPlant, state: HeadState, lim: MotorLimits, max_s: float = 15.0):
    """Closed-loop homing: controller at 100 Hz, plant at 1 kHz."""
    steps = int(max_s / PLANT_DT)
    for i in range(steps):
        t = i * PLANT_DT
        if abs(t / CTRL_DT - round(t / CTRL_DT)) < 1e-9:
            state, cmd = homing_step(state, plant.halls(), plant.encoders(), CTRL_DT, lim)
            if state.fsm in (HeadFsm.HOMED, HeadFsm.FAULTED):
                return state, t
            plant.apply(cmd)
        plant.step(PLANT_DT)
    return state, steps * PLANT_DT


class TestHoming:
    def test_absorbing_when_homed(self):
        state = HeadState(fsm=HeadFsm.HOMED)
        out, cmd = homing_step(
            state, HallReading(False, False), EncoderReading(0, 0), CTRL_DT
        )
        assert out.fsm is HeadFsm.HOMED
        assert cmd == MotorCommand(0.0, 0.0)

    def test_homes_from_spec_example_offset(self):
        lim = MotorLimits()
        plant = HeadPlant(limits=lim)
        plant.set_angles(0.3, 0.3)
        state, t = run_homing(plant, HeadState(), lim)
        assert state.fsm is HeadFsm.HOMED
        assert t < 10.0
        assert abs(plant.angle(Axis.ROLL)) < 0.001
        assert abs(plant.angle(Axis.PITCH)) < 0.001

    def test_homes_from_below_the_mark_with_reversal(self):
        lim = MotorLimits()
        plant = HeadPlant(limits=lim)
        plant.set_angles(-0.9, -0.6)  # seek runs into the low stop first
        state, t = run_homing(plant, HeadState(), lim)
        assert state.fsm is HeadFsm.HOMED
        assert t < 10.0
        assert abs(plant.angle(Axis.ROLL)) < 0.001
        assert abs(plant.angle(Axis.PITCH)) < 0.001

    def test_random_offsets_home_in_budget(self):
        # the acceptance suite runs 1000; keep the unit test quick
        lim = MotorLimits()
        rng = random.Random(314)
        worst_t, worst_err = 0.0, 0.0
        for _ in range(40):
            plant = HeadPlant(limits=lim)
            plant.set_angles(
                rng.uniform(*lim.roll_range), rng.uniform(*lim.pitch_range)
            )
            state, t = run_homing(plant, HeadState(), lim)
            assert state.fsm is HeadFsm.HOMED
            err = max(abs(plant.angle(Axis.ROLL)), abs(plant.angle(Axis.PITCH)))
            worst_t, worst_err = max(worst_t, t), max(worst_err, err)
        assert worst_t < 10.0
        assert worst_err < 0.001

    def test_stuck_hall_faults_without_livelock(self):
        lim = MotorLimits()
        plant = HeadPlant(limits=lim, hall_stuck_false=True)
        plant.set_angles(0.2, 0.1)
        state, t = run_homing(plant, HeadState(), lim)
        assert state.fsm is HeadFsm.FAULTED
        assert t < 15.0

    def test_faulted_absorbing_until_reset(self):
        lim = MotorLimits()
        plant = HeadPlant(limits=lim, hall_stuck_false=True)
        state, _ = run_homing(plant, HeadState(), lim)
        assert state.fsm is HeadFsm.FAULTED
        out, cmd = homing_step(state, plant.halls(), plant.encoders(), CTRL_DT, lim)
        assert out.fsm is HeadFsm.FAULTED and cmd == MotorCommand(0.0, 0.0)
        reset_head(state)
        assert state.fsm is HeadFsm.UNHOMED
        plant.hall_stuck_false = False
        state, t = run_homing(plant, state, lim)
        assert state.fsm is HeadFsm.HOMED

    def test_passes_through_documented_phases(self):
        lim = MotorLimits()
        plant = HeadPlant(limits=lim)
        plant.set_angles(0.4, 0.3)
        state = HeadState()
        seen = set()
        for i in range(int(15.0 / PLANT_DT)):
            t = i * PLANT_DT
            if abs(t / CTRL_DT - round(t / CTRL_DT)) < 1e-9:
                state, cmd = homing_step(state, plant.halls(), plant.encoders(), CTRL_DT, lim)
                for axis in Axis:
                    if state.phase(axis):
                        seen.add((axis, state.phase(axis)))
                if state.fsm is HeadFsm.HOMED:
                    break
                plant.apply(cmd)
            plant.step(PLANT_DT)
        assert state.fsm is HeadFsm.HOMED
        for axis in Axis:
            for phase in (AxisPhase.SEEK_HALL, AxisPhase.BACKOFF, AxisPhase.SLOW_APPROACH):
                assert (axis, phase) in seen


class TestTrackStep:
    def homed_state(self) -> HeadState:
        return HeadState(fsm=HeadFsm.HOMED)

    def test_requires_homed(self):
        with pytest.raises(NotHomedError):
            track_step(HeadState(), RollPitch(0, 0), MotorLimits(), CTRL_DT)

    def test_fixed_point_at_target(self):
        state = self.homed_state()
        state.roll, state.pitch = 0.3, -0.2
        out, cmd = track_step(state, RollPitch(0.3, -0.2), MotorLimits(), CTRL_DT)
        assert out.roll == 0.3 and out.pitch == -0.2
        assert cmd == MotorCommand(0.0, 0.0)

    def test_settles_at_closed_form_time(self):
        lim = MotorLimits()
        state = self.homed_state()
        target = RollPitch(0.5, 0.0)
        want = trapezoid_settle_time(0.5, lim)
        assert abs(want - 0.45) < 1e-12  # delta/omega + omega/alpha
        settle = None
        for i in range(1, 200):
            track_step(state, target, lim, CTRL_DT)
            if state.roll == 0.5 and state.roll_vel == 0.0:
                settle = i * CTRL_DT
                break
        assert settle is not None
        assert abs(settle - want) <= CTRL_DT + 1e-9

    def test_target_clamped_to_range(self):
        lim = MotorLimits()
        state = self.homed_state()
        for _ in range(400):
            track_step(state, RollPitch(2.0, -3.0), lim, CTRL_DT)
        assert abs(state.roll - lim.roll_range[1]) < 1e-12
        assert abs(state.pitch - lim.pitch_range[0]) < 1e-12

    def test_velocity_and_accel_bounds_random_targets(self):
        lim = MotorLimits()
        rng = random.Random(99)
        state = self.homed_state()
        prev_vel = (0.0, 0.0)
        for i in range(3000):
            if i % 37 == 0:
                target = RollPitch(rng.uniform(-2, 2), rng.uniform(-2, 2))
            track_step(state, target, lim, CTRL_DT)
            for v, pv in zip((state.roll_vel, state.pitch_vel), prev_vel):
                assert abs(v) <= lim.omega_max + 1e-12
                assert abs(v - pv) <= lim.alpha_max * CTRL_DT + 1e-12
            prev_vel = (state.roll_vel, state.pitch_vel)

    @given(
        st.floats(-1.0, 1.0, allow_nan=False),
        st.floats(-0.7, 1.0, allow_nan=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_no_overshoot_and_monotone_settle(self, start, target):
        lim = MotorLimits()
        state = self.homed_state()
        state.roll = start
        clamped = lim.bounds().clamp(RollPitch(target, 0.0)).roll
        errs = []
        for _ in range(300):
            track_step(state, RollPitch(target, 0.0), lim, CTRL_DT)
            errs.append(abs(state.roll - clamped))
        assert errs[-1] < 1e-9
        # after the error starts shrinking it never grows again (no overshoot)
        shrinking = False
        for a, b in zip(errs, errs[1:]):
            if shrinking and b > a + 1e-12:
                pytest.fail(f"error grew from {a} to {b} after deceleration began")
            if b < a - 1e-15:
                shrinking = True

    def test_closed_loop_with_plant_converges(self):
        lim = MotorLimits()
        plant = HeadPlant(limits=lim)
        plant.set_angles(0.0, 0.0)
        state = self.homed_state()
        target = RollPitch(0.1, 0.2)
        for i in range(int(2.0 / PLANT_DT)):
            t = i * PLANT_DT
            if abs(t / CTRL_DT - round(t / CTRL_DT)) < 1e-9:
                _, cmd = track_step(state, target, lim, CTRL_DT)
                plant.apply(cmd)
            plant.step(PLANT_DT)
        # profile settles exactly; the plant trails it only by the motor's
        # own acceleration ramp on the zero-order-held velocity commands
        assert state.roll == 0.1 and state.pitch == 0.2
        assert abs(plant.angle(Axis.ROLL) - 0.1) < 1e-3
        assert abs(plant.angle(Axis.PITCH) - 0.2) < 1e-3


class TestScheduler:
    def test_emits_every_period(self):
        sched = PeriodicScheduler(10_000)
        assert sched.tick(0) == [0]
        assert sched.tick(10_000) == [10_000]
        assert sched.tick(20_000) == [20_000]

    def test_catch_up_after_jump(self):
        sched = PeriodicScheduler(10_000)
        sched.tick(0)
        assert sched.tick(35_000) == [10_000, 20_000, 30_000]

    def test_no_early_emission(self):
        sched = PeriodicScheduler(10_000)
        sched.tick(0)
        assert sched.tick(9_999) == []

    def test_ledger_spacing_over_a_minute(self):
        sched = PeriodicScheduler(10_000)
        emitted = []
        clock = 0
        rng = random.Random(5)
        while clock < 60_000_000:
            clock += rng.choice([1_000, 3_000, 10_000, 25_000])
            emitted.extend(sched.tick(min(clock, 60_000_000)))
        assert emitted[0] == 0
        assert all(b - a == 10_000 for a, b in zip(emitted, emitted[1:]))
        assert len(emitted) == 6_000 + 1

    def test_independent_channels(self):
        head = PeriodicScheduler(10_000)
        arm = PeriodicScheduler(20_000)
        head.tick(0), arm.tick(0)
        # arm channel stalls (never ticked); head keeps emitting
        assert head.tick(50_000) == [10_000, 20_000, 30_000, 40_000, 50_000]
        assert arm.tick(50_000) == [20_000, 40_000]
