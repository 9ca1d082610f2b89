"""2-DoF head controller: homing state machine, trapezoid tracking, scheduler.

The head runs on incremental encoders, so every power-up needs a homing
pass against the Hall reference marks before absolute angles exist.  Per
axis the sequence is:

    seek hall   -- sweep at 0.5 rad/s (reversing off the hard stops) until
                   the Hall sensor fires; a full-range sweep with no
                   trigger faults the head (missing/miswired sensor)
    backoff     -- retreat 5 degrees past the trigger point
    slow approach -- re-enter the window at 0.05 rad/s for a clean edge
    zero set    -- latch the encoder offset at the window edge

Both axes run their homing sequence concurrently; a strictly sequential
roll-then-pitch pass cannot finish inside the 10 s budget from the worst
starting offsets at these seek speeds.  Once both axes are zeroed the
head drives to neutral (0, 0) and parks in ``HOMED``.

Tracking uses a discrete trapezoidal profile: velocity capped at
``omega_max``, per-step velocity change capped at ``alpha_max * dt``, with
a braking bound that decelerates to a stop exactly on the (range-clamped)
target, no overshoot.

The controller is a single-owner state machine: exactly one actor may
call the step functions, which mutate the state in place and return it
along with the motor command for the plant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .geom import RollPitch
from .retarget import RollPitchBounds


class NotHomedError(RuntimeError):
    """track_step was called before the homing sequence completed."""


class Axis(Enum):
    ROLL = "roll"
    PITCH = "pitch"


class HeadFsm(Enum):
    UNHOMED = "unhomed"
    HOMING = "homing"
    MOVE_NEUTRAL = "move_neutral"
    HOMED = "homed"
    FAULTED = "faulted"


class AxisPhase(Enum):
    SEEK_HALL = "seek_hall"
    BACKOFF = "backoff"
    SLOW_APPROACH = "slow_approach"
    ZERO_SET = "zero_set"
    DONE = "done"


@dataclass(frozen=True)
class MotorLimits:
    """Velocity/acceleration caps and travel ranges of the head motors."""

    omega_max: float = 2.0  # rad/s
    alpha_max: float = 10.0  # rad/s^2
    roll_range: tuple[float, float] = (-math.radians(60.0), math.radians(60.0))
    pitch_range: tuple[float, float] = (-math.radians(45.0), math.radians(60.0))

    def __post_init__(self):
        if self.omega_max <= 0 or self.alpha_max <= 0:
            raise ValueError("omega_max and alpha_max must be positive")
        for lo, hi in (self.roll_range, self.pitch_range):
            if not lo < hi:
                raise ValueError(f"range min {lo} must be below max {hi}")

    def range_of(self, axis: Axis) -> tuple[float, float]:
        return self.roll_range if axis is Axis.ROLL else self.pitch_range

    def bounds(self) -> RollPitchBounds:
        return RollPitchBounds(
            roll_min=self.roll_range[0],
            roll_max=self.roll_range[1],
            pitch_min=self.pitch_range[0],
            pitch_max=self.pitch_range[1],
        )


@dataclass(frozen=True)
class HallReading:
    """Per-axis Hall sensor levels (True inside the home-mark window)."""

    roll: bool
    pitch: bool

    def of(self, axis: Axis) -> bool:
        return self.roll if axis is Axis.ROLL else self.pitch


@dataclass(frozen=True)
class EncoderReading:
    """Per-axis incremental encoder readings, radians (unknown absolute zero)."""

    roll: float
    pitch: float

    def of(self, axis: Axis) -> float:
        return self.roll if axis is Axis.ROLL else self.pitch


@dataclass(frozen=True)
class MotorCommand:
    """Velocity setpoints handed to the motor drivers, rad/s."""

    roll_vel: float = 0.0
    pitch_vel: float = 0.0


HOLD = MotorCommand(0.0, 0.0)

SEEK_SPEED = 0.5  # rad/s, initial direction negative
SLOW_SPEED = 0.05  # rad/s
BACKOFF_ANGLE = math.radians(5.0)
HALL_WINDOW = math.radians(0.5)  # plant triggers within +/- this of the mark
HALL_MARK = 0.0  # home mark angle, both axes
ENCODER_TICK = 0.0005  # rad, matches the simulated plant quantization
STALL_STEPS = 3  # control periods without encoder motion = hard stop


@dataclass
class _AxisHoming:
    phase: AxisPhase = AxisPhase.SEEK_HALL
    seek_dir: float = -1.0
    enc_last: float | None = None
    enc_min: float = math.inf
    enc_max: float = -math.inf
    stall_count: int = 0
    hall_seen: bool = False
    hall_prev: bool = False
    enc_trigger: float = 0.0
    approach_dir: float = -1.0


@dataclass
class HeadState:
    """Controller-side head state (profile position/velocity + homing FSM)."""

    roll: float = 0.0
    pitch: float = 0.0
    roll_vel: float = 0.0
    pitch_vel: float = 0.0
    fsm: HeadFsm = HeadFsm.UNHOMED
    encoder_offset: dict[Axis, float] = field(default_factory=dict)
    homing: dict[Axis, _AxisHoming] = field(default_factory=dict)

    def phase(self, axis: Axis) -> AxisPhase | None:
        h = self.homing.get(axis)
        return h.phase if h else None

    def pos(self, axis: Axis) -> float:
        return self.roll if axis is Axis.ROLL else self.pitch

    def vel(self, axis: Axis) -> float:
        return self.roll_vel if axis is Axis.ROLL else self.pitch_vel

    def set_pos(self, axis: Axis, value: float) -> None:
        if axis is Axis.ROLL:
            self.roll = value
        else:
            self.pitch = value

    def set_vel(self, axis: Axis, value: float) -> None:
        if axis is Axis.ROLL:
            self.roll_vel = value
        else:
            self.pitch_vel = value


def reset_head(state: HeadState) -> HeadState:
    """Clear faults and calibration; the head must re-home."""
    state.fsm = HeadFsm.UNHOMED
    state.homing = {}
    state.encoder_offset = {}
    state.roll = state.pitch = 0.0
    state.roll_vel = state.pitch_vel = 0.0
    return state


def _homing_axis_step(
    state: HeadState, axis: Axis, hall: bool, enc: float, lim: MotorLimits, dt: float
) -> float:
    """Advance one axis's homing phase; returns the axis velocity command."""
    h = state.homing[axis]
    rising = hall and not h.hall_prev
    h.hall_prev = hall
    if hall:
        h.hall_seen = True

    if h.phase is AxisPhase.SEEK_HALL:
        if hall:  # level-sensitive: starting inside the window counts
            h.enc_trigger = enc
            h.approach_dir = h.seek_dir
            h.phase = AxisPhase.BACKOFF
            return 0.0
        if h.enc_last is not None:
            if abs(enc - h.enc_last) < ENCODER_TICK / 2.0:
                h.stall_count += 1
            else:
                h.stall_count = 0
            if h.stall_count >= STALL_STEPS:
                h.seek_dir = -h.seek_dir  # hard stop: sweep back the other way
                h.stall_count = 0
        h.enc_last = enc
        h.enc_min = min(h.enc_min, enc)
        h.enc_max = max(h.enc_max, enc)
        lo, hi = lim.range_of(axis)
        if not h.hall_seen and (h.enc_max - h.enc_min) >= (hi - lo) - 2.0 * ENCODER_TICK:
            state.fsm = HeadFsm.FAULTED  # full sweep, sensor never fired
            return 0.0
        return h.seek_dir * SEEK_SPEED

    if h.phase is AxisPhase.BACKOFF:
        if abs(enc - h.enc_trigger) >= BACKOFF_ANGLE:
            h.phase = AxisPhase.SLOW_APPROACH
            return 0.0
        return -h.approach_dir * SEEK_SPEED

    if h.phase is AxisPhase.SLOW_APPROACH:
        if rising:
            # window edge: coming from direction d the level flips at
            # mark - d*window; assume the crossing was mid-step on average
            edge_angle = HALL_MARK - h.approach_dir * HALL_WINDOW
            crossing = edge_angle + h.approach_dir * (SLOW_SPEED * dt / 2.0)
            state.encoder_offset[axis] = enc - crossing
            h.phase = AxisPhase.ZERO_SET
            return 0.0
        return h.approach_dir * SLOW_SPEED

    if h.phase is AxisPhase.ZERO_SET:
        # adopt the calibrated absolute angle as the profile position
        state.set_pos(axis, enc - state.encoder_offset[axis])
        state.set_vel(axis, 0.0)
        h.phase = AxisPhase.DONE
        return 0.0

    return 0.0  # DONE: hold until the other axis finishes


def homing_step(
    state: HeadState,
    hall: HallReading,
    encoders: EncoderReading,
    dt: float,
    lim: MotorLimits = MotorLimits(),
) -> tuple[HeadState, MotorCommand]:
    """Drive the homing sequence one control period.

    ``HOMED`` and ``FAULTED`` are absorbing (zero command); call
    :func:`reset_head` to leave ``FAULTED``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.fsm in (HeadFsm.HOMED, HeadFsm.FAULTED):
        return state, HOLD

    if state.fsm is HeadFsm.UNHOMED:
        state.homing = {axis: _AxisHoming() for axis in Axis}
        state.encoder_offset = {}
        state.fsm = HeadFsm.HOMING

    if state.fsm is HeadFsm.HOMING:
        cmds = {}
        for axis in Axis:
            cmds[axis] = _homing_axis_step(
                state, axis, hall.of(axis), encoders.of(axis), lim, dt
            )
            if state.fsm is HeadFsm.FAULTED:
                return state, HOLD
        if all(state.homing[axis].phase is AxisPhase.DONE for axis in Axis):
            state.fsm = HeadFsm.MOVE_NEUTRAL
            return state, HOLD
        return state, MotorCommand(cmds[Axis.ROLL], cmds[Axis.PITCH])

    # MOVE_NEUTRAL: trapezoid both axes to (0, 0) on the calibrated estimates
    cmd = _track_towards(state, RollPitch(0.0, 0.0), lim, dt)
    if (
        state.roll == 0.0
        and state.pitch == 0.0
        and state.roll_vel == 0.0
        and state.pitch_vel == 0.0
    ):
        state.fsm = HeadFsm.HOMED
    return state, cmd


def _trapezoid_axis(pos: float, vel: float, target: float, lim: MotorLimits, dt: float):
    """One discrete trapezoid step; returns (new_pos, new_vel)."""
    err = target - pos
    if err == 0.0 and vel == 0.0:
        return pos, 0.0
    adt = lim.alpha_max * dt
    if abs(err) < 1e-12 and abs(vel) <= adt:
        return target, 0.0  # swallow terminal rounding crumbs in one step
    # largest speed from which decelerating by adt per step still stops
    # within |err|: v^2/(2a) + v*dt/2 <= |err|
    v_brake = -adt / 2.0 + math.sqrt(adt * adt / 4.0 + 2.0 * lim.alpha_max * abs(err))
    v_des = math.copysign(min(lim.omega_max, v_brake, abs(err) / dt), err)
    v_new = min(vel + adt, max(vel - adt, v_des))
    return pos + v_new * dt, v_new


def _track_towards(
    state: HeadState, target: RollPitch, lim: MotorLimits, dt: float
) -> MotorCommand:
    clamped = lim.bounds().clamp(target)
    new_roll, vr = _trapezoid_axis(state.roll, state.roll_vel, clamped.roll, lim, dt)
    new_pitch, vp = _trapezoid_axis(state.pitch, state.pitch_vel, clamped.pitch, lim, dt)
    state.roll, state.roll_vel = new_roll, vr
    state.pitch, state.pitch_vel = new_pitch, vp
    return MotorCommand(vr, vp)


def track_step(
    state: HeadState, target: RollPitch, lim: MotorLimits, dt: float
) -> tuple[HeadState, MotorCommand]:
    """Track a roll/pitch target with the trapezoid profile.

    The target is clamped to the motor ranges first.  Raises
    :class:`NotHomedError` unless the head is ``HOMED``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.fsm is not HeadFsm.HOMED:
        raise NotHomedError(f"track_step in state {state.fsm.value}")
    return state, _track_towards(state, target, lim, dt)


def trapezoid_settle_time(delta: float, lim: MotorLimits = MotorLimits()) -> float:
    """Closed-form settle time for a rest-to-rest move of ``delta`` radians."""
    delta = abs(delta)
    if delta <= lim.omega_max**2 / lim.alpha_max:
        return 2.0 * math.sqrt(delta / lim.alpha_max)  # triangular profile
    return delta / lim.omega_max + lim.omega_max / lim.alpha_max


class PeriodicScheduler:
    """Fixed-period emission ledger in simulation time.

    ``tick(now)`` returns every period boundary that has become due since
    the last call -- missed periods are caught up, never dropped, so the
    emission ledger is exactly ``start, start+p, start+2p, ...`` regardless
    of how the clock advances.
    """

    def __init__(self, period_us: int = 10_000, start_us: int = 0):
        if period_us <= 0:
            raise ValueError("period must be positive")
        self.period_us = period_us
        self.next_us = start_us

    def tick(self, now_us: int) -> list[int]:
        due = []
        while self.next_us <= now_us:
            due.append(self.next_us)
            self.next_us += self.period_us
        return due
