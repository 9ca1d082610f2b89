"""Deterministic fixed-timestep robot-side world.

``World`` owns the plants, the safety supervisor, the command-link
receive pipeline (decode -> freshness -> safety gate -> apply) and the
100 Hz head control / telemetry tick.  It advances only through
``step(dt_us=1000)``; with a fixed seed the full state trajectory is a
pure function of the initial state and the command byte stream.

Within one step the order is: deliver due packets, run due 100 Hz control
ticks, supervise, advance plants, advance the clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..collision import CapsuleModel, default_capsule_model
from ..geom import RollPitch
from ..headctl import (
    HeadFsm,
    HeadState,
    HOLD,
    MotorLimits,
    PeriodicScheduler,
    homing_step,
    track_step,
)
from ..kinematics import (
    DHParams,
    JointConfig,
    JointLimits,
    UR3_DH,
    UR3_LIMITS,
    ik,
    select_solution,
)
from ..proto import (
    ArmTarget,
    ChannelState,
    DecodeError,
    Decoded,
    EStop,
    EStopReason,
    GripperCmd,
    HeadTarget,
    Heartbeat,
    Telemetry,
    accept_fresh,
    decode,
    pack_status,
)
from ..retarget import Camera
from ..supervisor import SafetySupervisor
from .network import NetworkLink, NetworkModel
from .plants import ArmPlant, GripperPlant, HeadPlant

STEP_US = 1_000  # fixed physics step
CONTROL_PERIOD_US = 10_000  # 100 Hz head control + telemetry


@dataclass
class WorldCounters:
    malformed: int = 0
    stale: int = 0
    unreachable: int = 0
    blocked_by_latch: int = 0
    applied: int = 0
    applied_after_latch: int = 0
    telemetry_emitted: int = 0


class World:
    def __init__(
        self,
        *,
        dh: DHParams = UR3_DH,
        limits: JointLimits = UR3_LIMITS,
        capsule_model: CapsuleModel | None = None,
        motor_limits: MotorLimits | None = None,
        cmd_network: NetworkModel | None = None,
        seed: int = 0,
        home: JointConfig = JointConfig(0.0, -1.2, 1.0, -1.37, -1.57, 0.0),
        start_homed: bool = True,
        watchdog_timeout_us: int = 250_000,
        telemetry_sink: Callable[[Telemetry, int], None] | None = None,
    ):
        self.dh = dh
        self.limits = limits
        self.motor_limits = motor_limits or MotorLimits()
        self.clock_us = 0
        self.arm = ArmPlant(q=home, limits=limits)
        self.head_plant = HeadPlant(limits=self.motor_limits)
        self.gripper = GripperPlant()
        self.head_state = HeadState(fsm=HeadFsm.HOMED if start_homed else HeadFsm.UNHOMED)
        self.head_target = RollPitch(0.0, 0.0)
        self.camera = Camera.WRIST
        self.supervisor = SafetySupervisor(
            limits=limits,
            capsule_model=capsule_model or default_capsule_model(dh),
            watchdog_timeout_us=watchdog_timeout_us,
        )
        self.cmd_link = NetworkLink(cmd_network or NetworkModel(), seed)
        self.channels = ChannelState()
        self.control_sched = PeriodicScheduler(CONTROL_PERIOD_US)
        self.counters = WorldCounters()
        self.latency_samples_ms: list[float] = []
        self.estop_events: list[str] = []
        self.head_emission_log: list[int] = []
        self.telemetry_sink = telemetry_sink
        # last accepted command values (live-session recording reads these)
        self.last_arm_target = None
        self.last_head_target = RollPitch(0.0, 0.0)

    # -- command ingress ---------------------------------------------------

    def send_command(self, data: bytes, t_send_us: int | None = None) -> None:
        """Queue a command datagram through the simulated network."""
        self.cmd_link.send(data, self.clock_us if t_send_us is None else t_send_us)

    def _dispatch(self, dec: Decoded) -> None:
        msg = dec.msg
        sup = self.supervisor
        if isinstance(msg, EStop):
            self._latch(msg.reason)
            return
        if isinstance(msg, Heartbeat):
            sup.feed_watchdog(self.clock_us)
            return
        if isinstance(msg, ArmTarget):
            sup.feed_watchdog(self.clock_us)
            if sup.latched:
                self.counters.blocked_by_latch += 1
                return
            solutions = ik(_pose_of(msg), self.dh)
            if not solutions:
                self.counters.unreachable += 1
                return
            chosen = select_solution(solutions, self.arm.q)
            if sup.check_command(chosen) is not None:
                self._note_latch()
                self._brake()
                return
            self.arm.target = chosen
            self.last_arm_target = _pose_of(msg)
            self._count_apply(dec)
            return
        if isinstance(msg, HeadTarget):
            if sup.latched:
                self.counters.blocked_by_latch += 1
                return
            self.head_target = self.motor_limits.bounds().clamp(
                RollPitch(msg.roll, msg.pitch)
            )
            self.last_head_target = self.head_target
            self._count_apply(dec)
            return
        if isinstance(msg, GripperCmd):
            if sup.latched:
                self.counters.blocked_by_latch += 1
                return
            self.gripper.apply(msg.aperture)
            self.camera = msg.camera
            self._count_apply(dec)

    def _count_apply(self, dec: Decoded) -> None:
        self.counters.applied += 1
        if self.supervisor.latched:
            self.counters.applied_after_latch += 1
        self.latency_samples_ms.append((self.clock_us - dec.timestamp_us) / 1000.0)

    def _latch(self, reason: EStopReason) -> None:
        already = self.supervisor.latched
        self.supervisor.latch(reason)
        if not already:
            self._note_latch()
            self._brake()

    def _note_latch(self) -> None:
        reason = self.supervisor.latched_reason
        name = reason.name if reason else "UNKNOWN"
        if not self.estop_events or self.estop_events[-1] != name:
            self.estop_events.append(name)

    def _brake(self) -> None:
        """Stop fanning out motion: arm holds, head decelerates to zero."""
        self.arm.halt()
        self.head_plant.apply(HOLD)

    def reset_estop(self) -> None:
        """Explicit operator reset of the safety latch."""
        self.supervisor.reset()

    # -- control tick -------------------------------------------------------

    def _control_tick(self, t_us: int) -> None:
        dt = CONTROL_PERIOD_US / 1e6
        if self.supervisor.latched:
            self.head_plant.apply(HOLD)
        elif self.head_state.fsm in (HeadFsm.HOMED,):
            _, cmd = track_step(self.head_state, self.head_target, self.motor_limits, dt)
            self.head_plant.apply(cmd)
        else:
            _, cmd = homing_step(
                self.head_state,
                self.head_plant.halls(),
                self.head_plant.encoders(),
                dt,
                self.motor_limits,
            )
            if self.head_state.fsm is HeadFsm.FAULTED:
                self._latch(EStopReason.HEAD_FAULT)
                cmd = HOLD
            self.head_plant.apply(cmd)
        self.head_emission_log.append(t_us)
        self.counters.telemetry_emitted += 1
        if self.telemetry_sink is not None:
            self.telemetry_sink(self.telemetry(), t_us)

    def telemetry(self) -> Telemetry:
        sup = self.supervisor
        status = pack_status(
            self.head_state.fsm is HeadFsm.HOMED,
            sup.latched,
            self.head_state.fsm is HeadFsm.FAULTED,
            sup.latched_reason or EStopReason.NONE,
        )
        return Telemetry(
            joints=tuple(self.arm.q),
            roll=self.head_state.roll,
            pitch=self.head_state.pitch,
            aperture=self.gripper.aperture,
            status=status,
        )

    # -- world advance ------------------------------------------------------

    def step(self, dt_us: int = STEP_US) -> None:
        if dt_us != STEP_US:
            raise ValueError(f"world advances in fixed {STEP_US} us steps, got {dt_us}")
        for data in self.cmd_link.poll(self.clock_us):
            try:
                dec = decode(data)
            except DecodeError:
                self.counters.malformed += 1
                continue
            if not accept_fresh(self.channels, type(dec.msg).TYPE, dec.seq):
                self.counters.stale += 1
                continue
            self._dispatch(dec)

        for t in self.control_sched.tick(self.clock_us):
            self._control_tick(t)
            if not self.supervisor.latched:
                self.supervisor.supervise(self.arm.q, self.clock_us)
                if self.supervisor.latched:
                    self._note_latch()
                    self._brake()

        # watchdog fires between control ticks too
        if not self.supervisor.latched:
            sup = self.supervisor
            if sup.watchdog_deadline_us is not None and self.clock_us > sup.watchdog_deadline_us:
                self._latch(EStopReason.WATCHDOG)

        dt = dt_us / 1e6
        self.arm.step(dt)
        self.head_plant.step(dt)
        self.clock_us += dt_us


def _pose_of(msg: ArmTarget):
    from ..geom import Pose

    return Pose(msg.position, msg.orientation)
