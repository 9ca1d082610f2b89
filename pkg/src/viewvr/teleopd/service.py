"""Live teleoperation service: UDP command path, WebSocket console bridge.

Three actors, message-passing only:

* the control loop owns the world (plants + supervisor) and is the only
  thread that mutates it; it paces simulation time against the wall clock
  and drains the inbound command queue each iteration,
* the UDP receiver turns raw datagrams from the command port into queue
  items,
* the bridge acceptor owns the console connections, converting line-JSON
  mirrors of the wire messages into real datagrams (so bridge traffic
  passes the exact same decode, freshness and safety gates as UDP) and
  fanning telemetry out to every client at the 100 Hz control cadence.

Bridge message mirror (one JSON object per WebSocket text message; field
names match the datagram fields):

    -> {"type": "arm_target", "seq": n, "position": [x,y,z],
        "orientation": [w,x,y,z]}
    -> {"type": "head_target", "seq": n, "roll": r, "pitch": p}
    -> {"type": "gripper", "seq": n, "aperture": a, "camera": "Wrist"|"Head"}
    -> {"type": "heartbeat", "seq": n}
    -> {"type": "estop", "reason": "OPERATOR"}
    -> {"type": "estop_reset"}
    -> {"type": "get_dh"}
    <- {"type": "hello", "version": 1}
    <- {"type": "dh", "a": [...], "d": [...], "alpha": [...]}
    <- {"type": "telemetry", "seq": n, "t_us": t, "joints": [...6],
        "roll": r, "pitch": p, "aperture": a, "status": s,
        "homed": b, "estop": b, "head_faulted": b, "estop_reason": name}
    <- {"type": "error", "message": m}

Invalid client messages get an error reply and the connection stays open;
nothing reaches the world.  Slow clients lose telemetry frames from their
own queue only.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..geom import Quat, Vec3
from ..kinematics import (
    DHParams,
    JointLimits,
    UR3_DH,
    UR3_LIMITS,
    load_dh_file,
    load_limits_file,
)
from ..proto import (
    ArmTarget,
    COMMAND_PORT,
    ChannelState,
    EStop,
    EStopReason,
    GripperCmd,
    HeadTarget,
    Heartbeat,
    TELEMETRY_PORT,
    accept_fresh,
    encode,
    unpack_status,
)
from ..retarget import Camera
from ..simworld.network import NetworkModel
from ..simworld.world import STEP_US, World
from .wsbridge import BridgeClient, WebSocketServer

log = logging.getLogger(__name__)

DEFAULT_BRIDGE_PORT = 46080


class ServiceMode(Enum):
    SCENARIO = "scenario"
    REPLAY = "replay"
    LIVE = "live"


@dataclass
class ServiceConfig:
    cmd_port: int = COMMAND_PORT
    tlm_port: int = TELEMETRY_PORT
    bridge_port: int = DEFAULT_BRIDGE_PORT
    dh_path: str | None = None
    limits_path: str | None = None
    network: NetworkModel = field(default_factory=NetworkModel)
    scenario_path: str | None = None
    seed: int = 0
    mode: ServiceMode = ServiceMode.LIVE
    bind_host: str = "127.0.0.1"

    def validate(self) -> None:
        ports = [self.cmd_port, self.tlm_port, self.bridge_port]
        if len(set(ports)) != len(ports):
            raise ValueError(f"ports must be distinct, got {ports}")
        for p in ports:
            if not 0 < p < 65536:
                raise ValueError(f"port {p} out of range")
        for path in (self.dh_path, self.limits_path, self.scenario_path):
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(path)

    def load_dh(self) -> DHParams:
        return load_dh_file(self.dh_path) if self.dh_path else UR3_DH

    def load_limits(self) -> JointLimits:
        return load_limits_file(self.limits_path) if self.limits_path else UR3_LIMITS


_CAMERA_NAMES = {"Wrist": Camera.WRIST, "Head": Camera.HEAD}


class BridgeProtocolError(ValueError):
    pass


def _num(obj, key, lo=None, hi=None) -> float:
    try:
        v = float(obj[key])
    except (KeyError, TypeError, ValueError):
        raise BridgeProtocolError(f"missing or non-numeric field {key!r}") from None
    if not math.isfinite(v):
        raise BridgeProtocolError(f"field {key!r} is not finite")
    if lo is not None and not (lo <= v <= hi):
        raise BridgeProtocolError(f"field {key!r}={v} outside [{lo}, {hi}]")
    return v


def _vec(obj, key, n) -> list[float]:
    v = obj.get(key)
    if not isinstance(v, list) or len(v) != n:
        raise BridgeProtocolError(f"field {key!r} must be a list of {n} numbers")
    out = []
    for x in v:
        try:
            f = float(x)
        except (TypeError, ValueError):
            raise BridgeProtocolError(f"field {key!r} has non-numeric entry") from None
        if not math.isfinite(f):
            raise BridgeProtocolError(f"field {key!r} has non-finite entry")
        out.append(f)
    return out


def bridge_message_to_datagram(obj: dict, seq: int, t_us: int) -> bytes:
    """Convert a validated bridge JSON object to a wire datagram."""
    kind = obj.get("type")
    if kind == "arm_target":
        pos = _vec(obj, "position", 3)
        quat = Quat(*_vec(obj, "orientation", 4))
        if abs(quat.norm() - 1.0) > 1e-6:
            raise BridgeProtocolError(f"orientation norm {quat.norm():.6f} not unit")
        return encode(ArmTarget(Vec3(*pos), quat), seq, t_us)
    if kind == "head_target":
        return encode(HeadTarget(_num(obj, "roll"), _num(obj, "pitch")), seq, t_us)
    if kind == "gripper":
        aperture = _num(obj, "aperture", 0.0, 1.0)
        camera = obj.get("camera")
        if camera not in _CAMERA_NAMES:
            raise BridgeProtocolError(f"camera must be one of {sorted(_CAMERA_NAMES)}")
        return encode(GripperCmd(aperture, _CAMERA_NAMES[camera]), seq, t_us)
    if kind == "heartbeat":
        return encode(Heartbeat(), seq, t_us)
    if kind == "estop":
        reason = obj.get("reason", "OPERATOR")
        try:
            code = EStopReason[reason] if isinstance(reason, str) else EStopReason(int(reason))
        except (KeyError, ValueError):
            raise BridgeProtocolError(f"unknown e-stop reason {reason!r}") from None
        return encode(EStop(code), seq, t_us)
    raise BridgeProtocolError(f"unknown message type {kind!r}")


_BRIDGE_TYPE_IDS = {
    "arm_target": ArmTarget.TYPE,
    "head_target": HeadTarget.TYPE,
    "gripper": GripperCmd.TYPE,
    "heartbeat": Heartbeat.TYPE,
    "estop": EStop.TYPE,
}


class TeleopService:
    """Holds the live world and its three actors; start()/stop() lifecycle."""

    def __init__(self, cfg: ServiceConfig, *, time_scale: float = 1.0):
        cfg.validate()
        self.cfg = cfg
        self.world = World(
            dh=cfg.load_dh(),
            limits=cfg.load_limits(),
            cmd_network=cfg.network,
            seed=cfg.seed,
            telemetry_sink=self._telemetry_tick,
        )
        self.time_scale = time_scale
        self._inbound: queue.Queue = queue.Queue()
        self._running = False
        self._control_thread: threading.Thread | None = None
        self._udp_thread: threading.Thread | None = None
        self._udp_sock: socket.socket | None = None
        self._tlm_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._tlm_peer: tuple[str, int] | None = None
        self._tlm_seq = 0
        self._service_seq: dict[int, int] = {}
        self._client_channels: dict[int, ChannelState] = {}
        self.bridge = WebSocketServer(
            cfg.bind_host, cfg.bridge_port, self._on_bridge_message, self._on_bridge_connect
        )

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "TeleopService":
        self._running = True
        self._udp_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._udp_sock.bind((self.cfg.bind_host, self.cfg.cmd_port))
        self._udp_sock.settimeout(0.25)
        self.bridge.start()
        self._udp_thread = threading.Thread(target=self._udp_loop, daemon=True)
        self._udp_thread.start()
        self._control_thread = threading.Thread(target=self._control_loop, daemon=True)
        self._control_thread.start()
        return self

    def stop(self) -> None:
        self._running = False
        if self._udp_sock is not None:
            self._udp_sock.close()
        self.bridge.stop()
        if self._control_thread is not None:
            self._control_thread.join(timeout=2.0)

    # -- actors ---------------------------------------------------------------

    def _udp_loop(self) -> None:
        while self._running:
            try:
                data, addr = self._udp_sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                return
            self._tlm_peer = (addr[0], self.cfg.tlm_port)
            self._inbound.put(("datagram", data))

    def _control_loop(self) -> None:
        start = time.monotonic()
        while self._running:
            target_us = int((time.monotonic() - start) * 1e6 * self.time_scale)
            while self.world.clock_us <= target_us:
                self._drain_inbound()
                self.world.step(STEP_US)
            time.sleep(0.002)

    def _drain_inbound(self) -> None:
        while True:
            try:
                kind, payload = self._inbound.get_nowait()
            except queue.Empty:
                return
            if kind == "datagram":
                self.world.send_command(payload, self.world.clock_us)
            elif kind == "reset":
                self.world.reset_estop()

    # -- bridge ----------------------------------------------------------------

    def _on_bridge_connect(self, client: BridgeClient) -> None:
        client.send(json.dumps({"type": "hello", "version": 1}))
        client.send(self._dh_message())

    def _dh_message(self) -> str:
        dh = self.world.dh
        return json.dumps(
            {"type": "dh", "a": list(dh.a), "d": list(dh.d), "alpha": list(dh.alpha)}
        )

    def _on_bridge_message(self, client: BridgeClient, text: str) -> None:
        try:
            obj = json.loads(text)
            if not isinstance(obj, dict):
                raise BridgeProtocolError("message must be a JSON object")
        except json.JSONDecodeError as exc:
            client.send(json.dumps({"type": "error", "message": f"bad JSON: {exc.msg}"}))
            return
        kind = obj.get("type")
        try:
            if kind == "estop_reset":
                self._inbound.put(("reset", None))
                return
            if kind == "get_dh":
                client.send(self._dh_message())
                return
            if kind not in _BRIDGE_TYPE_IDS:
                raise BridgeProtocolError(f"unknown message type {kind!r}")
            msg_type = _BRIDGE_TYPE_IDS[kind]
            channels = self._client_channels.setdefault(client.id, ChannelState())
            client_seq = int(obj.get("seq", 0)) & 0xFFFFFFFF
            if not accept_fresh(channels, msg_type, client_seq):
                return  # reordered/duplicated console message: drop silently
            service_seq = self._service_seq.get(msg_type, 0)
            self._service_seq[msg_type] = (service_seq + 1) & 0xFFFFFFFF
            data = bridge_message_to_datagram(obj, service_seq, self.world.clock_us)
        except BridgeProtocolError as exc:
            client.send(json.dumps({"type": "error", "message": str(exc)}))
            return
        self._inbound.put(("datagram", data))

    # -- telemetry ------------------------------------------------------------

    def _telemetry_tick(self, tlm, t_us: int) -> None:
        seq = self._tlm_seq
        self._tlm_seq = (self._tlm_seq + 1) & 0xFFFFFFFF
        if self._tlm_peer is not None:
            try:
                self._tlm_sock.sendto(encode(tlm, seq, t_us), self._tlm_peer)
            except OSError:
                pass
        homed, estopped, faulted, reason = unpack_status(tlm.status)
        self.bridge.broadcast(
            json.dumps(
                {
                    "type": "telemetry",
                    "seq": seq,
                    "t_us": t_us,
                    "joints": list(tlm.joints),
                    "roll": tlm.roll,
                    "pitch": tlm.pitch,
                    "aperture": tlm.aperture,
                    "status": tlm.status,
                    "homed": homed,
                    "estop": estopped,
                    "head_faulted": faulted,
                    "estop_reason": reason.name,
                }
            )
        )
