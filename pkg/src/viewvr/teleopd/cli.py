"""teleopd command line: scenario simulation, replay, homing demo, live serve.

Exit codes are a stable contract: 0 success, 2 scenario goal failure,
64 usage error, 65 malformed input file, 66 missing file, 3 homing fault.

Ports honor the VIEWVR_CMD_PORT / VIEWVR_TLM_PORT / VIEWVR_BRIDGE_PORT
environment variables unless overridden by flags.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

from ..geom import RollPitch, from_roll_pitch, POSE_IDENTITY
from ..headctl import Axis, HeadFsm, HeadState, MotorLimits, homing_step
from ..kinematics import JointConfig
from ..proto import COMMAND_PORT, TELEMETRY_PORT
from ..recorder import Frame, ParseError, SessionWriter, load_session
from ..simworld import NetworkModel, ScriptError, load_scenario, run_replay, run_scenario
from ..simworld.plants import HeadPlant
from .service import DEFAULT_BRIDGE_PORT, ServiceConfig, TeleopService

EX_OK = 0
EX_GOAL_FAILURE = 2
EX_HOMING_FAULT = 3
EX_USAGE = 64
EX_DATA = 65
EX_NOINPUT = 66


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we own the code
        raise _UsageError(message)


def _env_port(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise _UsageError(f"environment variable {name}={value!r} is not a port") from None


def _parse_net(spec: str) -> NetworkModel:
    parts = spec.split(",")
    if len(parts) not in (3, 4):
        raise _UsageError(f"--net expects 'latency_ms,jitter_ms,drop[,duplicate]', got {spec!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise _UsageError(f"--net has a non-numeric field: {spec!r}") from None
    try:
        return NetworkModel(*vals)
    except ValueError as exc:
        raise _UsageError(f"--net: {exc}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="teleopd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario script and print its metrics")
    sim.add_argument("scenario", help="path to a .scn scenario file")
    sim.add_argument("--seed", type=int, default=None, help="override the script seed")
    sim.add_argument("--net", type=str, default=None, metavar="L,J,p[,dup]")
    sim.add_argument("--record", type=str, default=None, help="write a session file")
    sim.add_argument("--timing", action="store_true", help="report wall time on stderr")

    rep = sub.add_parser("replay", help="re-drive a recorded session through the stack")
    rep.add_argument("session", help="path to a recorded session file")
    rep.add_argument("--scenario", type=str, default=None, help="original scenario for config")
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--net", type=str, default=None, metavar="L,J,p[,dup]")
    rep.add_argument("--record", type=str, default=None, help="re-record the replayed run")

    home = sub.add_parser("home-demo", help="run the head homing sequence in simulation")
    home.add_argument("--roll", type=float, default=0.3, help="initial roll offset, rad")
    home.add_argument("--pitch", type=float, default=-0.2, help="initial pitch offset, rad")
    home.add_argument("--stuck-hall", action="store_true", help="simulate a dead hall sensor")
    home.add_argument("--record", type=str, default=None)

    srv = sub.add_parser("serve", help="run the live service (UDP + console bridge)")
    srv.add_argument("--bridge-port", type=int, default=None)
    srv.add_argument("--cmd-port", type=int, default=None)
    srv.add_argument("--tlm-port", type=int, default=None)
    srv.add_argument("--dh", type=str, default=None, help="DH parameter file")
    srv.add_argument("--limits", type=str, default=None, help="joint limits file")
    srv.add_argument("--seed", type=int, default=0)
    srv.add_argument("--net", type=str, default=None, metavar="L,J,p[,dup]")
    srv.add_argument("--duration", type=float, default=None, help="stop after N seconds")
    srv.add_argument("--record", type=str, default=None)
    return parser


def _cmd_simulate(args) -> int:
    try:
        script = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"scenario file not found: {args.scenario}", file=sys.stderr)
        return EX_NOINPUT
    except ScriptError as exc:
        print(f"malformed scenario: {exc}", file=sys.stderr)
        return EX_DATA
    net = _parse_net(args.net) if args.net else None
    t0 = time.perf_counter()
    report = run_scenario(script, seed=args.seed, net=net, record_path=args.record)
    wall = time.perf_counter() - t0
    sys.stdout.write(report.render_text())
    sys.stdout.write(report.render_kv())
    if args.timing:
        print(f"wall {wall:.3f} s", file=sys.stderr)
    return EX_OK if report.success else EX_GOAL_FAILURE


def _cmd_replay(args) -> int:
    try:
        frames = load_session(args.session)
    except FileNotFoundError:
        print(f"session file not found: {args.session}", file=sys.stderr)
        return EX_NOINPUT
    except ParseError as exc:
        print(f"corrupt session: {exc}", file=sys.stderr)
        return EX_DATA
    script = None
    if args.scenario:
        try:
            script = load_scenario(args.scenario)
        except FileNotFoundError:
            print(f"scenario file not found: {args.scenario}", file=sys.stderr)
            return EX_NOINPUT
        except ScriptError as exc:
            print(f"malformed scenario: {exc}", file=sys.stderr)
            return EX_DATA
    net = _parse_net(args.net) if args.net else None
    replayed, world = run_replay(frames, script, seed=args.seed, net=net)
    max_dev = 0.0
    for orig, new in zip(frames, replayed):
        max_dev = max(max_dev, *(abs(a - b) for a, b in zip(orig.joints, new.joints)))
    print(f"replayed {len(replayed)} frames, {world.clock_us / 1e6:.3f} s sim time")
    print(f"max joint deviation vs recording: {max_dev:.3e} rad")
    if world.estop_events:
        print(f"e-stops during replay: {', '.join(world.estop_events)}")
    if args.record:
        with SessionWriter(args.record) as w:
            for frame in replayed:
                w.append(frame)
        print(f"re-recorded to {args.record}")
    return EX_OK


def _cmd_home_demo(args) -> int:
    lim = MotorLimits()
    plant = HeadPlant(limits=lim, hall_stuck_false=args.stuck_hall)
    plant.set_angles(
        min(max(args.roll, lim.roll_range[0]), lim.roll_range[1]),
        min(max(args.pitch, lim.pitch_range[0]), lim.pitch_range[1]),
    )
    state = HeadState()
    recorder = SessionWriter(args.record) if args.record else None
    last_desc = None
    t_us = 0
    print(f"homing from roll={plant.angle(Axis.ROLL):+.3f} pitch={plant.angle(Axis.PITCH):+.3f} rad")
    try:
        while t_us <= 20_000_000:
            if t_us % 10_000 == 0:
                state, cmd = homing_step(state, plant.halls(), plant.encoders(), 0.01, lim)
                plant.apply(cmd)
                desc = (state.fsm, state.phase(Axis.ROLL), state.phase(Axis.PITCH))
                if desc != last_desc:
                    roll_phase = desc[1].value if desc[1] else "-"
                    pitch_phase = desc[2].value if desc[2] else "-"
                    print(
                        f"t={t_us / 1e6:7.3f}s  fsm={state.fsm.value:<12} "
                        f"roll={roll_phase:<13} pitch={pitch_phase:<13}"
                    )
                    last_desc = desc
                if recorder is not None:
                    recorder.append(_demo_frame(t_us, plant, state))
                if state.fsm in (HeadFsm.HOMED, HeadFsm.FAULTED):
                    break
            plant.step(0.001)
            t_us += 1_000
    finally:
        if recorder is not None:
            recorder.close()
    err = max(abs(plant.angle(Axis.ROLL)), abs(plant.angle(Axis.PITCH)))
    print(f"final: {state.fsm.value} at t={t_us / 1e6:.3f}s, residual error {err:.2e} rad")
    return EX_OK if state.fsm is HeadFsm.HOMED else EX_HOMING_FAULT


def _demo_frame(t_us: int, plant: HeadPlant, state: HeadState) -> Frame:
    from ..retarget import Camera

    return Frame(
        t_us=t_us if t_us > 0 else 1,
        op_hand=POSE_IDENTITY,
        op_head=from_roll_pitch(RollPitch(0.0, 0.0)),
        pinch=60.0,
        joints=JointConfig(0.0, -1.2, 1.0, -1.37, -1.57, 0.0),
        head=RollPitch(plant.angle(Axis.ROLL), plant.angle(Axis.PITCH)),
        aperture=1.0,
        camera=Camera.WRIST,
        estop=state.fsm is HeadFsm.FAULTED,
    )


def _cmd_serve(args) -> int:
    cfg = ServiceConfig(
        cmd_port=args.cmd_port or _env_port("VIEWVR_CMD_PORT", COMMAND_PORT),
        tlm_port=args.tlm_port or _env_port("VIEWVR_TLM_PORT", TELEMETRY_PORT),
        bridge_port=args.bridge_port or _env_port("VIEWVR_BRIDGE_PORT", DEFAULT_BRIDGE_PORT),
        dh_path=args.dh,
        limits_path=args.limits,
        network=_parse_net(args.net) if args.net else NetworkModel(),
        seed=args.seed,
    )
    try:
        cfg.validate()
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except ValueError as exc:
        print(f"bad service config: {exc}", file=sys.stderr)
        return EX_USAGE
    service = TeleopService(cfg)
    recorder = SessionWriter(args.record) if args.record else None
    if recorder is not None:
        _attach_live_recorder(service, recorder)
    service.start()
    print(
        f"teleopd serving: udp cmd :{cfg.cmd_port}, telemetry :{cfg.tlm_port}, "
        f"bridge ws://{cfg.bind_host}:{cfg.bridge_port}",
        flush=True,
    )
    try:
        if args.duration is not None:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
        if recorder is not None:
            recorder.close()
    return EX_OK


def _attach_live_recorder(service: TeleopService, recorder: SessionWriter) -> None:
    from ..retarget import PinchConfig, Camera

    cfg = PinchConfig()
    inner = service._telemetry_tick

    def sink(tlm, t_us: int) -> None:
        inner(tlm, t_us)
        if t_us <= 0:
            return
        world = service.world
        pose = world.last_arm_target or POSE_IDENTITY
        rp = world.last_head_target
        pinch = cfg.angle_closed + world.gripper.aperture * (cfg.angle_open - cfg.angle_closed)
        try:
            recorder.append(
                Frame(
                    t_us=t_us,
                    op_hand=pose,
                    op_head=from_roll_pitch(rp),
                    pinch=pinch,
                    joints=world.arm.q,
                    head=RollPitch(
                        world.head_plant.angle(Axis.ROLL), world.head_plant.angle(Axis.PITCH)
                    ),
                    aperture=world.gripper.aperture,
                    camera=world.camera,
                    estop=world.supervisor.latched,
                )
            )
        except Exception:
            pass

    service.world.telemetry_sink = sink


def cli_run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "home-demo":
            return _cmd_home_demo(args)
        if args.command == "serve":
            return _cmd_serve(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EX_USAGE


def main() -> None:
    sys.exit(cli_run(sys.argv[1:]))


if __name__ == "__main__":
    main()
