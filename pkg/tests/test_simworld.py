import math
import random
from pathlib import Path

import pytest

from viewvr.geom import Pose, Quat, Vec3
from viewvr.kinematics import JointConfig, fk
from viewvr.proto import ArmTarget, EStop, EStopReason, HeadTarget, Heartbeat, encode
from viewvr.simworld import (
    EmptyMetricsError,
    NetworkLink,
    NetworkModel,
    ScriptError,
    World,
    deliver_time,
    load_scenario,
    parse_scenario,
    percentile_nearest_rank,
    rms,
    run_scenario,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class TestNetworkModel:
    def test_always_drop(self):
        rng = random.Random(1)
        model = NetworkModel(drop_prob=1.0)
        assert all(deliver_time(model, rng, 0) is None for _ in range(100))

    def test_pure_latency(self):
        rng = random.Random(2)
        model = NetworkModel(latency_ms=10.0)
        assert deliver_time(model, rng, 5_000) == 15_000

    def test_seeded_schedule_identical(self):
        model = NetworkModel(latency_ms=20.0, jitter_ms=5.0, drop_prob=0.2, duplicate_prob=0.1)

        def schedule():
            link = NetworkLink(model, seed=42)
            for i in range(1_000):
                link.send(bytes([i % 256]), i * 1_000)
            arrivals = []
            t = 0
            while link.in_flight:
                t += 500
                arrivals.extend((t, d) for d in link.poll(t))
            return link.sent, link.dropped, link.delivered, arrivals

        assert schedule() == schedule()

    def test_jitter_within_band(self):
        rng = random.Random(3)
        model = NetworkModel(latency_ms=30.0, jitter_ms=10.0)
        for _ in range(500):
            arrival = deliver_time(model, rng, 0)
            assert 20_000 <= arrival <= 40_000

    def test_packet_conservation(self):
        model = NetworkModel(latency_ms=5.0, drop_prob=0.3)
        link = NetworkLink(model, seed=9)
        for i in range(2_000):
            link.send(b"x", i * 100)
        delivered = len(link.poll(10**9))
        assert link.sent == 2_000
        assert delivered + link.dropped == link.sent  # no duplicates configured
        assert link.in_flight == 0

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            NetworkModel(drop_prob=1.5)
        with pytest.raises(ValueError):
            NetworkModel(latency_ms=-1.0)


class TestMetricsFns:
    def test_constant_error(self):
        assert rms([0.02] * 50) == pytest.approx(0.02, abs=1e-15)

    def test_all_zero(self):
        assert rms([0.0] * 10) == 0.0

    def test_hand_computed(self):
        assert rms([3.0, 4.0]) == pytest.approx(math.sqrt(12.5), abs=1e-12)

    def test_empty_raises(self):
        with pytest.raises(EmptyMetricsError):
            rms([])
        with pytest.raises(EmptyMetricsError):
            percentile_nearest_rank([], 50)

    def test_nearest_rank(self):
        vals = [15.0, 20.0, 35.0, 40.0, 50.0]
        assert percentile_nearest_rank(vals, 30) == 20.0
        assert percentile_nearest_rank(vals, 40) == 20.0
        assert percentile_nearest_rank(vals, 50) == 35.0
        assert percentile_nearest_rank(vals, 100) == 50.0


class TestScenarioParsing:
    def test_canonical_scripts_load(self):
        for name in ("pickplace", "connector", "pour"):
            script = load_scenario(SCENARIO_DIR / f"{name}.scn")
            assert script.name == name
            assert script.keyframes and script.goals

    def test_unknown_directive(self):
        with pytest.raises(ScriptError) as exc:
            parse_scenario("keyframe 0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\nbogus 1\n")
        assert exc.value.line_no == 2

    def test_nonmonotone_keyframes(self):
        text = (
            "keyframe 1.0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
            "keyframe 0.5 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
        )
        with pytest.raises(ScriptError, match="strictly increasing"):
            parse_scenario(text)

    def test_bad_number_reports_line_and_field(self):
        with pytest.raises(ScriptError) as exc:
            parse_scenario("keyframe zero hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n")
        assert exc.value.line_no == 1
        assert "keyframe" in exc.value.field

    def test_bad_goal_eps(self):
        base = "keyframe 0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
        with pytest.raises(ScriptError, match="positive"):
            parse_scenario(base + "goal ee_at 0 0 0 eps 0\n")

    def test_no_keyframes(self):
        with pytest.raises(ScriptError, match="no keyframes"):
            parse_scenario("seed 1\n")

    def test_interpolation_endpoints_and_midpoint(self):
        text = (
            "keyframe 0.0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 10\n"
            "keyframe 2.0 hand 0.2 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
        )
        script = parse_scenario(text)
        hand, _, pinch = script.operator_sample(1.0)
        assert abs(hand.position.x - 0.1) < 1e-12
        assert abs(pinch - 35.0) < 1e-12
        hand0, _, _ = script.operator_sample(-1.0)
        assert hand0.position.x == 0.0
        hand1, _, _ = script.operator_sample(99.0)
        assert hand1.position.x == 0.2


def make_world(**kw) -> World:
    return World(seed=1, **kw)


def arm_target_bytes(world: World, pose: Pose, seq: int, t_us: int) -> bytes:
    return encode(ArmTarget(pose.position, pose.orientation), seq, t_us)


class TestWorld:
    def test_clock_only_when_idle(self):
        w = make_world()
        q0 = w.arm.q
        for _ in range(50):
            w.step()
        assert w.clock_us == 50_000
        assert w.arm.q == q0

    def test_fixed_step_enforced(self):
        w = make_world()
        with pytest.raises(ValueError):
            w.step(2_000)

    def test_arm_tracks_reachable_target(self):
        w = make_world()
        target = fk(JointConfig(0.1, -1.1, 0.9, -1.3, -1.5, 0.1))
        w.send_command(arm_target_bytes(w, target, 0, 0), 0)
        for i in range(2_000):
            if i % 100 == 0:  # keepalives so the watchdog stays quiet
                w.send_command(encode(Heartbeat(), i, w.clock_us), w.clock_us)
            w.step()
        assert not w.supervisor.latched
        got = fk(w.arm.q)
        assert (got.position - target.position).norm() < 1e-6

    def test_malformed_and_stale_counted(self):
        w = make_world()
        w.send_command(b"garbage", 0)
        msg = encode(HeadTarget(0.1, 0.1), 5, 0)
        w.send_command(msg, 0)
        w.send_command(msg, 0)  # duplicate seq -> stale
        w.step()
        assert w.counters.malformed == 1
        assert w.counters.stale == 1

    def test_estop_datagram_latches_and_brakes(self):
        w = make_world()
        w.send_command(encode(HeadTarget(0.5, 0.2), 0, 0), 0)
        for _ in range(100):
            w.step()
        w.send_command(encode(EStop(EStopReason.OPERATOR), 0, w.clock_us), w.clock_us)
        w.step()
        assert w.supervisor.latched_reason is EStopReason.OPERATOR
        applied_before = w.counters.applied
        w.send_command(encode(HeadTarget(-0.5, 0.0), 1, w.clock_us), w.clock_us)
        for _ in range(200):
            w.step()
        assert w.counters.applied == applied_before
        assert w.counters.applied_after_latch == 0
        assert w.counters.blocked_by_latch >= 1
        # head motors braked to rest
        from viewvr.headctl import Axis

        assert w.head_plant.axes[Axis.ROLL].vel == 0.0

    def test_estop_reset_restores_flow(self):
        w = make_world()
        w.send_command(encode(EStop(EStopReason.OPERATOR), 0, 0), 0)
        w.step()
        assert w.supervisor.latched
        w.reset_estop()
        assert not w.supervisor.latched
        w.send_command(encode(HeadTarget(0.2, 0.1), 7, w.clock_us), w.clock_us)
        w.step()
        assert w.counters.applied == 1

    def test_watchdog_trips_after_silence(self):
        w = make_world()
        w.send_command(encode(Heartbeat(), 0, 0), 0)
        for _ in range(600):  # 600 ms >> 250 ms timeout
            w.step()
        assert w.supervisor.latched_reason is EStopReason.WATCHDOG

    def test_watchdog_fed_by_heartbeats(self):
        w = make_world()
        for i in range(6):
            w.send_command(encode(Heartbeat(), i, w.clock_us), w.clock_us)
            for _ in range(100):
                w.step()
        assert not w.supervisor.latched

    def test_unreachable_target_counted_not_estopped(self):
        w = make_world()
        far = Pose(Vec3(2.0, 0.0, 0.0), Quat(1, 0, 0, 0))
        w.send_command(arm_target_bytes(w, far, 0, 0), 0)
        w.step()
        assert w.counters.unreachable == 1
        assert not w.supervisor.latched

    def test_head_emission_ledger_exact(self):
        w = make_world()
        for _ in range(60_000):
            w.step()
        log = w.head_emission_log
        assert log[0] == 0
        assert len(log) == 6_000
        assert all(b - a == 10_000 for a, b in zip(log, log[1:]))


class TestScenarioRuns:
    def test_pickplace_succeeds(self):
        script = load_scenario(SCENARIO_DIR / "pickplace.scn")
        report = run_scenario(script)
        assert report.success
        assert not report.estop_events
        assert report.packets_dropped == 0

    def test_determinism_bitwise(self):
        script = load_scenario(SCENARIO_DIR / "pickplace.scn")
        a = run_scenario(script)
        b = run_scenario(script)
        assert a == b
        assert a.render_kv() == b.render_kv()
        assert a.render_text() == b.render_text()

    def test_lossy_still_succeeds_with_larger_rms(self):
        script = load_scenario(SCENARIO_DIR / "pickplace.scn")
        clean = run_scenario(script)
        lossy = run_scenario(script, net=NetworkModel(50.0, 20.0, 0.05, 0.0))
        assert lossy.success
        assert lossy.ee_rms_m > clean.ee_rms_m
        assert lossy.packets_dropped > 0

    def test_trivial_hold_scenario_near_zero_rms(self):
        text = (
            "scenario hold\nseed 3\nduration 3.0\n"
            "keyframe 0.0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
            "goal gripper_above 0.9\n"
        )
        report = run_scenario(parse_scenario(text))
        assert report.success
        assert report.ee_rms_m < 1e-6
        assert report.head_rms_rad < 1e-6

    def test_seed_changes_lossy_schedule(self):
        script = load_scenario(SCENARIO_DIR / "pickplace.scn")
        net = NetworkModel(30.0, 10.0, 0.1, 0.0)
        a = run_scenario(script, net=net, seed=1)
        b = run_scenario(script, net=net, seed=2)
        assert a.packets_dropped != b.packets_dropped or a.ee_rms_m != b.ee_rms_m


class TestSafetyScenarios:
    BASE = (
        "scenario adversarial\nseed 5\nduration 4.0\n"
        "keyframe 0.0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
        "keyframe 3.0 hand {dx} {dy} {dz} 1 0 0 0 head 1 0 0 0 pinch 60\n"
        "{extra}"
        "goal gripper_above 0.9\n"
    )

    def test_limit_violation_latches(self):
        # tight elbow limit: the descent path demands q3 beyond it
        text = self.BASE.format(dx=0.05, dy=0.0, dz=-0.25, extra="limit joint3 -0.1 1.05\n")
        report = run_scenario(parse_scenario(text))
        assert "LIMIT_VIOLATION" in report.estop_events
        assert not report.success

    def test_watchdog_latches_on_blackout(self):
        text = self.BASE.format(dx=0.02, dy=0.0, dz=0.0, extra="blackout 1.0 1.4\n")
        report = run_scenario(parse_scenario(text))
        assert "WATCHDOG" in report.estop_events
        assert not report.success

    # hand path whose nearest-branch IK folds the elbow through the
    # capsule threshold around two thirds of the way in
    FOLD = (
        "scenario fold\nseed 5\nduration 6.0\n"
        "home 0.0 -1.2 1.0 -1.37 -1.57 0.0\n"
        "keyframe 0.0 hand 0 0 0 1 0 0 0 head 1 0 0 0 pinch 60\n"
        "keyframe 5.0 hand 0.148270 0.0 -0.216176 "
        "0.99090133 0.0 -0.13459031 0.0 head 1 0 0 0 pinch 60\n"
        "goal gripper_above 0.9\n"
    )

    def test_self_collision_latches_before_contact(self):
        report = run_scenario(parse_scenario(self.FOLD))
        assert "SELF_COLLISION" in report.estop_events
        assert not report.success

    def test_self_collision_latch_precedes_plant_contact(self):
        from viewvr.collision import self_collision
        from viewvr.simworld import STEP_US
        from viewvr.simworld.runner import OperatorSource, build_world

        script = parse_scenario(self.FOLD)
        world, cal = build_world(script)
        operator = OperatorSource(script, cal, world)
        plant_collided_before_latch = False
        latched_at = None
        for t_us in range(0, int(6.0e6), STEP_US):
            operator.emit(t_us)
            world.step()
            if latched_at is None:
                if self_collision(world.arm.q, world.supervisor.capsule_model):
                    plant_collided_before_latch = True
                if world.supervisor.latched:
                    latched_at = t_us
        assert latched_at is not None
        assert not plant_collided_before_latch

    def test_post_latch_commands_zero(self):
        text = self.BASE.format(dx=0.02, dy=0.0, dz=0.0, extra="blackout 1.0 1.4\n")
        script = parse_scenario(text)
        from viewvr.simworld.runner import build_world, OperatorSource
        from viewvr.simworld import STEP_US

        world, cal = build_world(script)
        operator = OperatorSource(script, cal, world)
        applied_at_latch = None
        for t_us in range(0, int(4.0e6), STEP_US):
            operator.emit(t_us)
            world.step()
            if world.supervisor.latched and applied_at_latch is None:
                applied_at_latch = world.counters.applied
        assert applied_at_latch is not None
        assert world.counters.applied == applied_at_latch
        assert world.counters.applied_after_latch == 0
