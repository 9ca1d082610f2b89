"""Scenario and replay execution: operator model -> wire -> world -> metrics.

The operator side samples the script keyframes at the arm command rate
(hand pose + pinch) and at 100 Hz for the head, retargets them, encodes
datagrams and sends them through the seeded network into the world.  The
robot side lives entirely in :class:`~viewvr.simworld.world.World`.

Tracking errors are sampled every 10 ms against the zero-latency ideal
(the freshly retargeted operator sample), so network delay, command
cadence and motor inertia all show up in the RMS numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geom import Pose, RollPitch, quat_angle
from ..headctl import Axis, PeriodicScheduler
from ..kinematics import (
    DHParams,
    JointConfig,
    JointLimits,
    UR3_DH,
    UR3_LIMITS,
    fk,
)
from ..proto import ArmTarget, GripperCmd, HeadTarget, Heartbeat, encode
from ..recorder import Frame, SessionWriter
from ..retarget import (
    Calibration,
    GripperState,
    PinchConfig,
    calibrate,
    map_hand,
    map_head,
    map_pinch,
    toggle_camera,
)
from .metrics import MetricsReport, percentile_nearest_rank, rms
from .network import NetworkModel
from .scenario import Goal, ScenarioScript
from .world import CONTROL_PERIOD_US, STEP_US, World

HEARTBEAT_PERIOD_US = 100_000  # 10 Hz keepalive


def apply_limit_overrides(base: JointLimits, overrides: dict[int, tuple[float, float]]) -> JointLimits:
    if not overrides:
        return base
    lower = list(base.lower)
    upper = list(base.upper)
    for joint, (lo, hi) in overrides.items():
        lower[joint - 1] = lo
        upper[joint - 1] = hi
    return JointLimits(tuple(lower), tuple(upper), base.velocity)


def _goal_met(goal: Goal, world: World) -> bool:
    if goal.kind in ("ee_at", "ee_pose"):
        pose = fk(world.arm.q, world.dh)
        if (pose.position - goal.position).norm() > goal.pos_eps:
            return False
        if goal.kind == "ee_pose" and quat_angle(pose.orientation, goal.orientation) > goal.ang_eps:
            return False
        return True
    if goal.kind == "gripper_below":
        return world.gripper.aperture <= goal.value
    if goal.kind == "gripper_above":
        return world.gripper.aperture >= goal.value
    if goal.kind == "head_at":
        droll = world.head_plant.angle(Axis.ROLL) - goal.roll
        dpitch = world.head_plant.angle(Axis.PITCH) - goal.pitch
        return math.hypot(droll, dpitch) <= goal.ang_eps
    raise ValueError(f"unknown goal kind {goal.kind}")


@dataclass
class _Seq:
    """Per-channel sequence counters for the operator side."""

    arm: int = 0
    head: int = 0
    grip: int = 0
    beat: int = 0


class OperatorSource:
    """Keyframe-driven operator model producing wire-ready datagrams."""

    def __init__(self, script: ScenarioScript, cal: Calibration, world: World):
        self.script = script
        self.cal = cal
        self.world = world
        self.arm_sched = PeriodicScheduler(round(1_000_000 / script.arm_rate_hz))
        self.head_sched = PeriodicScheduler(CONTROL_PERIOD_US)
        self.beat_sched = PeriodicScheduler(HEARTBEAT_PERIOD_US)
        self.seq = _Seq()
        self.grip_state = GripperState()
        self.pinch_cfg = PinchConfig()
        self._toggles = list(script.toggles)
        # held values between arm-rate samples (also what the recorder sees)
        self.held_hand: Pose = script.keyframes[0].hand
        self.held_pinch: float = script.keyframes[0].pinch_deg
        self.head_bounds = world.motor_limits.bounds()

    def emit(self, t_us: int) -> None:
        """Send every datagram due at sim time t_us (respecting blackouts)."""
        t = t_us / 1e6
        script = self.script
        arm_due = self.arm_sched.tick(t_us)
        head_due = self.head_sched.tick(t_us)
        beat_due = self.beat_sched.tick(t_us)
        while self._toggles and self._toggles[0] <= t:
            toggle_t = self._toggles.pop(0)
            next_state = toggle_camera(self.grip_state, toggle_t)
            changed = next_state.active_camera is not self.grip_state.active_camera
            self.grip_state = next_state
            if changed and not script.in_blackout(t):
                self._send_gripper(t_us)
        if script.in_blackout(t):
            return
        if arm_due:
            hand, _, pinch = script.operator_sample(t)
            self.held_hand, self.held_pinch = hand, pinch
            target = map_hand(self.cal, hand)
            self.world.send_command(
                encode(ArmTarget(target.position, target.orientation), self.seq.arm, t_us),
                t_us,
            )
            self.seq.arm += 1
            self._send_gripper(t_us)
        if head_due:
            _, head_quat, _ = script.operator_sample(t)
            rp, _ = map_head(self.cal, head_quat, self.head_bounds)
            self.world.send_command(encode(HeadTarget(rp.roll, rp.pitch), self.seq.head, t_us), t_us)
            self.seq.head += 1
        if beat_due:
            self.world.send_command(encode(Heartbeat(), self.seq.beat, t_us), t_us)
            self.seq.beat += 1

    def _send_gripper(self, t_us: int) -> None:
        aperture = map_pinch(self.held_pinch, self.pinch_cfg)
        msg = GripperCmd(aperture, self.grip_state.active_camera)
        self.world.send_command(encode(msg, self.seq.grip, t_us), t_us)
        self.seq.grip += 1

    def ideal_targets(self, t_us: int) -> tuple[Pose, RollPitch]:
        """Zero-latency retargeted operator sample (for tracking metrics)."""
        hand, head_quat, _ = self.script.operator_sample(t_us / 1e6)
        rp, _ = map_head(self.cal, head_quat, self.head_bounds)
        return map_hand(self.cal, hand), rp


def build_world(
    script: ScenarioScript,
    *,
    seed: int | None = None,
    net: NetworkModel | None = None,
    dh: DHParams = UR3_DH,
    base_limits: JointLimits = UR3_LIMITS,
) -> tuple[World, Calibration]:
    limits = apply_limit_overrides(base_limits, script.limit_overrides)
    home = JointConfig(*script.home)
    world = World(
        dh=dh,
        limits=limits,
        cmd_network=net if net is not None else script.network,
        seed=seed if seed is not None else script.seed,
        home=home,
    )
    first = script.keyframes[0]
    cal = calibrate(first.hand, fk(home, dh), first.head, script.align, script.scale)
    return world, cal


def run_scenario(
    script: ScenarioScript,
    *,
    seed: int | None = None,
    net: NetworkModel | None = None,
    dh: DHParams = UR3_DH,
    base_limits: JointLimits = UR3_LIMITS,
    record_path=None,
) -> MetricsReport:
    """Play a scenario to completion and return its metrics report."""
    world, cal = build_world(script, seed=seed, net=net, dh=dh, base_limits=base_limits)
    operator = OperatorSource(script, cal, world)
    recorder = SessionWriter(record_path) if record_path else None
    sample_sched = PeriodicScheduler(CONTROL_PERIOD_US)

    ee_errors: list[float] = []
    head_errors: list[float] = []
    goal_done = [False] * len(script.goals)
    end_us = round(script.end_time * 1e6)

    try:
        for t_us in range(0, end_us + STEP_US, STEP_US):
            operator.emit(t_us)
            if sample_sched.tick(t_us):
                ideal_pose, ideal_rp = operator.ideal_targets(t_us)
                actual = fk(world.arm.q, dh)
                ee_errors.append((actual.position - ideal_pose.position).norm())
                head_errors.append(
                    math.hypot(
                        world.head_plant.angle(Axis.ROLL) - ideal_rp.roll,
                        world.head_plant.angle(Axis.PITCH) - ideal_rp.pitch,
                    )
                )
                if recorder is not None:
                    recorder.append(_frame(world, operator, t_us))
            world.step(STEP_US)
            for i, goal in enumerate(script.goals):
                if goal_done[i]:
                    continue
                if not _goal_met(goal, world):
                    break
                goal_done[i] = True
    finally:
        if recorder is not None:
            recorder.close()

    return _report(script, world, seed, ee_errors, head_errors, goal_done, end_us)


def _frame(world: World, operator: OperatorSource, t_us: int) -> Frame:
    # camera is the operator-side selector (like op_*), so a replay
    # re-sends exactly the original command stream; the numeric robot
    # fields are the world's plant state at the frame instant
    return Frame(
        t_us=t_us,
        op_hand=operator.held_hand,
        op_head=operator.script.operator_sample(t_us / 1e6)[1],
        pinch=operator.held_pinch,
        joints=world.arm.q,
        head=RollPitch(world.head_plant.angle(Axis.ROLL), world.head_plant.angle(Axis.PITCH)),
        aperture=world.gripper.aperture,
        camera=operator.grip_state.active_camera,
        estop=world.supervisor.latched,
    )


def _report(script, world, seed, ee_errors, head_errors, goal_done, end_us) -> MetricsReport:
    latencies = world.latency_samples_ms or [0.0]
    goals = tuple((g.label, done) for g, done in zip(script.goals, goal_done))
    success = all(done for _, done in goals) and not world.estop_events
    return MetricsReport(
        scenario=script.name,
        seed=seed if seed is not None else script.seed,
        ee_rms_m=rms(ee_errors),
        head_rms_rad=rms(head_errors),
        latency_p50_ms=percentile_nearest_rank(latencies, 50),
        latency_p95_ms=percentile_nearest_rank(latencies, 95),
        packets_sent=world.cmd_link.sent,
        packets_dropped=world.cmd_link.dropped,
        packets_stale=world.counters.stale,
        packets_delivered=world.cmd_link.delivered,
        estop_events=tuple(world.estop_events),
        goals=goals,
        success=success,
        sim_duration_s=end_us / 1e6,
    )


def run_replay(
    frames: list[Frame],
    script: ScenarioScript | None = None,
    *,
    seed: int | None = None,
    net: NetworkModel | None = None,
    dh: DHParams = UR3_DH,
    base_limits: JointLimits = UR3_LIMITS,
) -> tuple[list[Frame], World]:
    """Re-drive a recorded operator stream through a fresh world.

    With the original scenario's configuration (calibration anchors, seed,
    jitter/drop-free network, command times on the 10 ms frame grid) the
    replayed robot-side fields match the recording exactly.  Returns the
    replayed frames and the final world.
    """
    if script is not None:
        world, cal = build_world(script, seed=seed, net=net, dh=dh, base_limits=base_limits)
    else:
        world = World(dh=dh, limits=base_limits, seed=seed or 0, cmd_network=net)
        if not frames:
            return [], world
        cal = calibrate(frames[0].op_hand, fk(world.arm.q, dh), frames[0].op_head)
    pinch_cfg = PinchConfig()
    head_bounds = world.motor_limits.bounds()

    out: list[Frame] = []
    seq = _Seq()
    idx = 0
    if not frames:
        return out, world
    end_us = frames[-1].t_us
    for t_us in range(0, end_us + STEP_US, STEP_US):
        while idx < len(frames) and frames[idx].t_us <= t_us:
            f = frames[idx]
            target = map_hand(cal, f.op_hand)
            world.send_command(encode(ArmTarget(target.position, target.orientation), seq.arm, t_us), t_us)
            seq.arm += 1
            world.send_command(
                encode(GripperCmd(map_pinch(f.pinch, pinch_cfg), f.camera), seq.grip, t_us), t_us
            )
            seq.grip += 1
            rp, _ = map_head(cal, f.op_head, head_bounds)
            world.send_command(encode(HeadTarget(rp.roll, rp.pitch), seq.head, t_us), t_us)
            seq.head += 1
            out.append(
                Frame(
                    t_us=f.t_us,
                    op_hand=f.op_hand,
                    op_head=f.op_head,
                    pinch=f.pinch,
                    joints=world.arm.q,
                    head=RollPitch(
                        world.head_plant.angle(Axis.ROLL), world.head_plant.angle(Axis.PITCH)
                    ),
                    aperture=world.gripper.aperture,
                    camera=f.camera,
                    estop=world.supervisor.latched,
                )
            )
            idx += 1
        world.step(STEP_US)
    return out, world
