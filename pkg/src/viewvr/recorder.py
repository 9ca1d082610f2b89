"""Session capture and replay: line-delimited JSON records.

One frame per line, UTF-8, with exactly these fields:

    t_us      microseconds from session start (strictly increasing)
    op_hand   operator hand pose [x, y, z, qw, qx, qy, qz]
    op_head   operator head orientation [qw, qx, qy, qz]
    pinch     thumb-index angle, degrees
    joints    arm joint angles [q1..q6], radians
    head      robot head [roll, pitch], radians
    aperture  gripper aperture [0, 1]
    camera    "Wrist" | "Head"
    estop     bool

Robot-side fields are captured alongside the operator inputs so a session
is a self-contained dataset (the robot trajectory is not derivable from
the inputs without the scenario seed).  Floats serialize at full
round-trip precision.  Replaying a recorded deterministic run through the
same scenario configuration reproduces the robot-side fields exactly when
the network is jitter/drop-free (each delivery draw then has a fixed
outcome, so the differing send cadence cannot shift the schedule).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .geom import Pose, Quat, RollPitch, Vec3
from .kinematics import JointConfig
from .retarget import Camera


class OrderError(ValueError):
    """Appended frame does not advance the session clock."""


class ParseError(ValueError):
    """Corrupt session line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class Frame:
    t_us: int
    op_hand: Pose
    op_head: Quat
    pinch: float
    joints: JointConfig
    head: RollPitch
    aperture: float
    camera: Camera
    estop: bool


def frame_to_json(frame: Frame) -> str:
    return json.dumps(
        {
            "t_us": frame.t_us,
            "op_hand": [*frame.op_hand.position.as_tuple(), *frame.op_hand.orientation.as_tuple()],
            "op_head": list(frame.op_head.as_tuple()),
            "pinch": frame.pinch,
            "joints": list(frame.joints),
            "head": [frame.head.roll, frame.head.pitch],
            "aperture": frame.aperture,
            "camera": frame.camera.name.capitalize(),
            "estop": frame.estop,
        },
        separators=(",", ":"),
    )


_CAMERAS = {"Wrist": Camera.WRIST, "Head": Camera.HEAD}


def frame_from_json(line: str, line_no: int = 0) -> Frame:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(line_no, f"bad JSON: {exc.msg}") from None
    try:
        hand = obj["op_hand"]
        if len(hand) != 7:
            raise ParseError(line_no, f"op_hand needs 7 numbers, got {len(hand)}")
        head_q = obj["op_head"]
        if len(head_q) != 4:
            raise ParseError(line_no, f"op_head needs 4 numbers, got {len(head_q)}")
        joints = obj["joints"]
        if len(joints) != 6:
            raise ParseError(line_no, f"joints needs 6 numbers, got {len(joints)}")
        rp = obj["head"]
        if len(rp) != 2:
            raise ParseError(line_no, f"head needs 2 numbers, got {len(rp)}")
        camera = obj["camera"]
        if camera not in _CAMERAS:
            raise ParseError(line_no, f"unknown camera {camera!r}")
        frame = Frame(
            t_us=int(obj["t_us"]),
            op_hand=Pose(Vec3(*map(float, hand[:3])), Quat(*map(float, hand[3:]))),
            op_head=Quat(*map(float, head_q)),
            pinch=float(obj["pinch"]),
            joints=JointConfig(*map(float, joints)),
            head=RollPitch(float(rp[0]), float(rp[1])),
            aperture=float(obj["aperture"]),
            camera=_CAMERAS[camera],
            estop=bool(obj["estop"]),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(line_no, f"bad field: {exc}") from None
    if not 0.0 <= frame.aperture <= 1.0 or not math.isfinite(frame.pinch):
        raise ParseError(line_no, "field out of range")
    return frame


class SessionWriter:
    """Single-writer, append-only session file with monotone timestamps."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")
        self._last_t: int | None = None

    def append(self, frame: Frame) -> None:
        if self._last_t is not None and frame.t_us <= self._last_t:
            raise OrderError(
                f"frame at {frame.t_us} us does not advance past {self._last_t} us"
            )
        self._fh.write(frame_to_json(frame) + "\n")
        self._last_t = frame.t_us

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "SessionWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def load_session(path: str | Path) -> list[Frame]:
    """Read a full session; raises :class:`ParseError` with the line number."""
    frames = []
    last_t: int | None = None
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        frame = frame_from_json(line, line_no)
        if last_t is not None and frame.t_us <= last_t:
            raise ParseError(line_no, f"timestamp {frame.t_us} not increasing")
        frames.append(frame)
        last_t = frame.t_us
    return frames


def replay(session: list[Frame]) -> Iterator[Frame]:
    """Re-emit the operator-side stream of a recorded session in order."""
    return iter(session)
