"""Datagram wire format and freshness filtering for the UDP control link.

Every datagram is laid out little-endian as:

    offset  size  field
    0       4     magic "VVR1" (ASCII)
    4       1     msg_type
    5       1     flags (reserved, 0)
    6       4     seq, uint32
    10      8     timestamp_us, uint64 (microseconds from session start)
    18      n     payload (fixed size per msg_type, see below)
    18+n    4     crc32 (IEEE), over bytes [0, 18+n)

    msg_type  payload                                              n
    0x01      ArmTarget: position 3xf64, orientation 4xf64 wxyz    56
    0x02      HeadTarget: roll f64, pitch f64                      16
    0x03      GripperCmd: aperture f64, camera u8 (0 wrist/1 head)  9
    0x04      Telemetry: joints 6xf64, roll f64, pitch f64,
              aperture f64, status u8                              73
    0x05      EStop: reason u8                                      1
    0x06      Heartbeat                                             0

Commands and telemetry are connectionless and unacknowledged; receivers
keep a per-msg_type freshness filter (:func:`accept_fresh`) so reordered
or duplicated datagrams can never roll a channel backwards.  Timestamps
are session-relative, not wall clock, which keeps replays deterministic.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from enum import IntEnum

from .geom import Quat, Vec3
from .retarget import Camera

MAGIC = b"VVR1"
HEADER = struct.Struct("<4sBBIQ")  # magic, msg_type, flags, seq, timestamp_us
CRC = struct.Struct("<I")
HEADER_SIZE = HEADER.size  # 18
MIN_SIZE = HEADER_SIZE + CRC.size  # empty-payload datagram: 22 bytes

COMMAND_PORT = 46001
TELEMETRY_PORT = 46002

QUAT_UNIT_TOL = 1e-6


class EStopReason(IntEnum):
    NONE = 0
    LIMIT_VIOLATION = 1
    SELF_COLLISION = 2
    WATCHDOG = 3
    OPERATOR = 4
    HEAD_FAULT = 5


# telemetry status byte: low nibble flags, high nibble last e-stop reason
STATUS_HOMED = 0x01
STATUS_ESTOPPED = 0x02
STATUS_HEAD_FAULTED = 0x04


def pack_status(homed: bool, estopped: bool, head_faulted: bool, reason: EStopReason) -> int:
    b = (STATUS_HOMED if homed else 0) | (STATUS_ESTOPPED if estopped else 0)
    b |= STATUS_HEAD_FAULTED if head_faulted else 0
    return b | (int(reason) & 0x0F) << 4


def unpack_status(status: int) -> tuple[bool, bool, bool, EStopReason]:
    return (
        bool(status & STATUS_HOMED),
        bool(status & STATUS_ESTOPPED),
        bool(status & STATUS_HEAD_FAULTED),
        EStopReason((status >> 4) & 0x0F),
    )


class ProtoError(Exception):
    """Base for all encode/decode failures."""


class EncodeError(ProtoError):
    pass


class DecodeError(ProtoError):
    pass


class BadMagic(DecodeError):
    pass


class BadLength(DecodeError):
    pass


class BadCrc(DecodeError):
    pass


class UnknownType(DecodeError):
    pass


class InvalidField(DecodeError):
    pass


@dataclass(frozen=True)
class ArmTarget:
    position: Vec3
    orientation: Quat

    TYPE = 0x01


@dataclass(frozen=True)
class HeadTarget:
    roll: float
    pitch: float

    TYPE = 0x02


@dataclass(frozen=True)
class GripperCmd:
    aperture: float
    camera: Camera

    TYPE = 0x03


@dataclass(frozen=True)
class Telemetry:
    joints: tuple[float, float, float, float, float, float]
    roll: float
    pitch: float
    aperture: float
    status: int

    TYPE = 0x04


@dataclass(frozen=True)
class EStop:
    reason: EStopReason

    TYPE = 0x05


@dataclass(frozen=True)
class Heartbeat:
    TYPE = 0x06


Message = ArmTarget | HeadTarget | GripperCmd | Telemetry | EStop | Heartbeat

_ARM = struct.Struct("<7d")
_HEAD = struct.Struct("<2d")
_GRIP = struct.Struct("<dB")
_TLM = struct.Struct("<9dB")
_ESTOP = struct.Struct("<B")

PAYLOAD_SIZES = {0x01: 56, 0x02: 16, 0x03: 9, 0x04: 73, 0x05: 1, 0x06: 0}


def _require_finite(name: str, *values: float, exc=EncodeError):
    for v in values:
        if not math.isfinite(v):
            raise exc(f"{name} contains non-finite value {v!r}")


def _check_quat(q: Quat, exc) -> None:
    _require_finite("orientation", q.w, q.x, q.y, q.z, exc=exc)
    if abs(q.norm() - 1.0) > QUAT_UNIT_TOL:
        raise exc(f"orientation norm {q.norm():.9f} not unit within {QUAT_UNIT_TOL}")


def _check_aperture(a: float, exc) -> None:
    _require_finite("aperture", a, exc=exc)
    if not 0.0 <= a <= 1.0:
        raise exc(f"aperture {a!r} outside [0, 1]")


def _pack_payload(msg: Message) -> bytes:
    if isinstance(msg, ArmTarget):
        _require_finite("position", *msg.position.as_tuple())
        _check_quat(msg.orientation, EncodeError)
        return _ARM.pack(*msg.position.as_tuple(), *msg.orientation.as_tuple())
    if isinstance(msg, HeadTarget):
        _require_finite("head target", msg.roll, msg.pitch)
        return _HEAD.pack(msg.roll, msg.pitch)
    if isinstance(msg, GripperCmd):
        _check_aperture(msg.aperture, EncodeError)
        return _GRIP.pack(msg.aperture, msg.camera.value)
    if isinstance(msg, Telemetry):
        if len(msg.joints) != 6:
            raise EncodeError(f"telemetry needs 6 joints, got {len(msg.joints)}")
        _require_finite("telemetry", *msg.joints, msg.roll, msg.pitch)
        _check_aperture(msg.aperture, EncodeError)
        if not 0 <= msg.status <= 255:
            raise EncodeError(f"status byte {msg.status} out of range")
        return _TLM.pack(*msg.joints, msg.roll, msg.pitch, msg.aperture, msg.status)
    if isinstance(msg, EStop):
        return _ESTOP.pack(int(msg.reason))
    if isinstance(msg, Heartbeat):
        return b""
    raise EncodeError(f"unknown message {type(msg).__name__}")


def _unpack_payload(msg_type: int, payload: bytes) -> Message:
    if msg_type == ArmTarget.TYPE:
        vals = _ARM.unpack(payload)
        _require_finite("position", *vals[:3], exc=InvalidField)
        q = Quat(*vals[3:])
        _check_quat(q, InvalidField)
        return ArmTarget(Vec3(*vals[:3]), q)
    if msg_type == HeadTarget.TYPE:
        roll, pitch = _HEAD.unpack(payload)
        _require_finite("head target", roll, pitch, exc=InvalidField)
        return HeadTarget(roll, pitch)
    if msg_type == GripperCmd.TYPE:
        aperture, camera = _GRIP.unpack(payload)
        _check_aperture(aperture, InvalidField)
        if camera not in (0, 1):
            raise InvalidField(f"camera selector {camera} not in {{0, 1}}")
        return GripperCmd(aperture, Camera(camera))
    if msg_type == Telemetry.TYPE:
        vals = _TLM.unpack(payload)
        _require_finite("telemetry", *vals[:9], exc=InvalidField)
        _check_aperture(vals[8], InvalidField)
        return Telemetry(tuple(vals[:6]), vals[6], vals[7], vals[8], vals[9])
    if msg_type == EStop.TYPE:
        (reason,) = _ESTOP.unpack(payload)
        try:
            return EStop(EStopReason(reason))
        except ValueError:
            raise InvalidField(f"unknown e-stop reason {reason}") from None
    if msg_type == Heartbeat.TYPE:
        return Heartbeat()
    raise UnknownType(f"message type 0x{msg_type:02x}")


def encode(msg: Message, seq: int, timestamp_us: int, flags: int = 0) -> bytes:
    """Serialize a message into a framed, CRC-trailed datagram."""
    if not 0 <= seq < 2**32:
        raise EncodeError(f"seq {seq} outside uint32")
    if not 0 <= timestamp_us < 2**64:
        raise EncodeError(f"timestamp_us {timestamp_us} outside uint64")
    if not 0 <= flags <= 255:
        raise EncodeError(f"flags {flags} outside byte range")
    payload = _pack_payload(msg)
    head = HEADER.pack(MAGIC, type(msg).TYPE, flags, seq, timestamp_us)
    body = head + payload
    return body + CRC.pack(zlib.crc32(body))


@dataclass(frozen=True)
class Decoded:
    msg: Message
    seq: int
    timestamp_us: int
    flags: int


def decode(data: bytes) -> Decoded:
    """Parse and validate a datagram.

    Raises exactly one of :class:`BadLength`, :class:`BadMagic`,
    :class:`UnknownType`, :class:`BadCrc`, :class:`InvalidField` (in that
    precedence) on malformed input; never anything else, for any bytes.
    """
    if len(data) < MIN_SIZE:
        raise BadLength(f"datagram of {len(data)} bytes, minimum is {MIN_SIZE}")
    magic, msg_type, flags, seq, timestamp_us = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"magic {magic!r}")
    if msg_type not in PAYLOAD_SIZES:
        raise UnknownType(f"message type 0x{msg_type:02x}")
    expected = MIN_SIZE + PAYLOAD_SIZES[msg_type]
    if len(data) != expected:
        raise BadLength(
            f"type 0x{msg_type:02x} datagram must be {expected} bytes, got {len(data)}"
        )
    (crc,) = CRC.unpack_from(data, len(data) - 4)
    body = data[:-4]
    actual = zlib.crc32(body)
    if crc != actual:
        raise BadCrc(f"crc 0x{crc:08x}, computed 0x{actual:08x}")
    msg = _unpack_payload(msg_type, data[HEADER_SIZE:-4])
    return Decoded(msg, seq, timestamp_us, flags)


HALF_SEQ_SPACE = 2**31


@dataclass
class ChannelState:
    """Per-msg_type freshness tracker (RFC 1982 style serial arithmetic)."""

    last_seq: dict[int, int] = field(default_factory=dict)

    def reset(self) -> None:
        self.last_seq.clear()


def accept_fresh(state: ChannelState, msg_type: int, seq: int) -> bool:
    """Accept iff the channel is empty or seq is serially newer than the last.

    On acceptance the channel's high-water mark advances to ``seq``.
    """
    last = state.last_seq.get(msg_type)
    if last is not None:
        delta = (seq - last) % 2**32
        if not 0 < delta < HALF_SEQ_SPACE:
            return False
    state.last_seq[msg_type] = seq
    return True
