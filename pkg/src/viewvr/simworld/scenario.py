"""Scenario script files: timed operator keyframes, goals, network block.

A scenario is a line-oriented text file (``#`` starts a comment):

    scenario <name>
    seed <int>
    duration <seconds>                        # optional: last keyframe + 1 s
    arm_rate <hz>                             # optional, default 50
    network latency_ms <f> jitter_ms <f> drop <p> duplicate <p>
    home <q1..q6>                             # initial arm joints, radians
    scale <f>                                 # optional workspace scale
    align <qw qx qy qz>                       # optional operator->robot alignment
    limit <joint1..6> <min> <max>             # optional per-joint override
    keyframe <t> hand <x y z qw qx qy qz> head <qw qx qy qz> pinch <deg>
    toggle <t>                                # camera button press
    blackout <t0> <t1>                        # operator link silence window
    goal ee_at <x y z> eps <m>
    goal ee_pose <x y z qw qx qy qz> pos_eps <m> ang_eps <rad>
    goal gripper_below <v> | goal gripper_above <v>
    goal head_at <roll> <pitch> eps <rad>

Keyframe times must be strictly increasing; the operator stream between
keyframes is linearly interpolated in position/pinch and spherically in
orientation.  The hand and head poses of the first keyframe are the
calibration anchors; the flange anchor is the forward kinematics of the
``home`` configuration.  Goals are ordered milestones: each is checked
only after every earlier goal has been met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from ..geom import Pose, Quat, RollPitch, Vec3, quat_normalize, slerp
from .network import NetworkModel


class ScriptError(ValueError):
    """Malformed scenario script; carries the offending line and field."""

    def __init__(self, line_no: int, field_name: str, message: str):
        self.line_no = line_no
        self.field = field_name
        super().__init__(f"line {line_no}, {field_name}: {message}")


@dataclass(frozen=True)
class Keyframe:
    t: float
    hand: Pose
    head: Quat
    pinch_deg: float


@dataclass(frozen=True)
class Goal:
    label: str
    kind: str  # ee_at | ee_pose | gripper_below | gripper_above | head_at
    position: Vec3 | None = None
    orientation: Quat | None = None
    pos_eps: float = 0.0
    ang_eps: float = 0.0
    value: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0


@dataclass
class ScenarioScript:
    name: str
    seed: int
    keyframes: list[Keyframe]
    goals: list[Goal]
    network: NetworkModel = NetworkModel()
    duration: float | None = None
    arm_rate_hz: float = 50.0
    home: tuple[float, ...] = (0.0, -1.2, 1.0, -1.37, -1.57, 0.0)
    scale: float = 1.0
    align: Quat = Quat(1.0, 0.0, 0.0, 0.0)
    toggles: list[float] = field(default_factory=list)
    blackouts: list[tuple[float, float]] = field(default_factory=list)
    limit_overrides: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def end_time(self) -> float:
        if self.duration is not None:
            return self.duration
        return self.keyframes[-1].t + 1.0

    def operator_sample(self, t: float) -> tuple[Pose, Quat, float]:
        """Interpolated (hand pose, head quat, pinch angle) at time t."""
        frames = self.keyframes
        if t <= frames[0].t:
            k = frames[0]
            return k.hand, k.head, k.pinch_deg
        if t >= frames[-1].t:
            k = frames[-1]
            return k.hand, k.head, k.pinch_deg
        hi = 1
        while frames[hi].t < t:
            hi += 1
        a, b = frames[hi - 1], frames[hi]
        u = (t - a.t) / (b.t - a.t)
        pos = a.hand.position + (b.hand.position - a.hand.position) * u
        hand = Pose(pos, slerp(a.hand.orientation, b.hand.orientation, u))
        head = slerp(a.head, b.head, u)
        pinch = a.pinch_deg + (b.pinch_deg - a.pinch_deg) * u
        return hand, head, pinch

    def in_blackout(self, t: float) -> bool:
        return any(t0 <= t < t1 for t0, t1 in self.blackouts)


def _floats(line_no: int, fieldname: str, tokens: list[str], n: int) -> list[float]:
    if len(tokens) != n:
        raise ScriptError(line_no, fieldname, f"expected {n} numbers, got {len(tokens)}")
    out = []
    for tok in tokens:
        try:
            v = float(tok)
        except ValueError:
            raise ScriptError(line_no, fieldname, f"bad number {tok!r}") from None
        if not math.isfinite(v):
            raise ScriptError(line_no, fieldname, f"non-finite value {tok!r}")
        out.append(v)
    return out


def _unit_quat(line_no: int, fieldname: str, vals: list[float]) -> Quat:
    q = Quat(*vals)
    n = q.norm()
    if n < 1e-6:
        raise ScriptError(line_no, fieldname, "zero-norm quaternion")
    if abs(n - 1.0) > 1e-3:
        raise ScriptError(line_no, fieldname, f"quaternion norm {n:.6f} too far from 1")
    return quat_normalize(q)


def _parse_keyframe(line_no: int, tokens: list[str]) -> Keyframe:
    # keyframe <t> hand <7> head <4> pinch <1>
    if len(tokens) != 16 or tokens[1] != "hand" or tokens[9] != "head" or tokens[14] != "pinch":
        raise ScriptError(
            line_no, "keyframe", "expected 'keyframe t hand x y z qw qx qy qz head qw qx qy qz pinch deg'"
        )
    (t,) = _floats(line_no, "keyframe.t", tokens[0:1], 1)
    hand_vals = _floats(line_no, "keyframe.hand", tokens[2:9], 7)
    head_vals = _floats(line_no, "keyframe.head", tokens[10:14], 4)
    (pinch,) = _floats(line_no, "keyframe.pinch", tokens[15:16], 1)
    hand = Pose(Vec3(*hand_vals[:3]), _unit_quat(line_no, "keyframe.hand", hand_vals[3:]))
    return Keyframe(t, hand, _unit_quat(line_no, "keyframe.head", head_vals), pinch)


def _parse_goal(line_no: int, tokens: list[str], index: int) -> Goal:
    if not tokens:
        raise ScriptError(line_no, "goal", "missing goal kind")
    kind = tokens[0]
    label = f"{index + 1}:{kind}"
    rest = tokens[1:]
    if kind == "ee_at":
        if len(rest) != 5 or rest[3] != "eps":
            raise ScriptError(line_no, "goal.ee_at", "expected 'ee_at x y z eps m'")
        x, y, z = _floats(line_no, "goal.ee_at", rest[:3], 3)
        (eps,) = _floats(line_no, "goal.ee_at.eps", rest[4:5], 1)
        if eps <= 0:
            raise ScriptError(line_no, "goal.ee_at.eps", "eps must be positive")
        return Goal(label, kind, position=Vec3(x, y, z), pos_eps=eps)
    if kind == "ee_pose":
        if len(rest) != 11 or rest[7] != "pos_eps" or rest[9] != "ang_eps":
            raise ScriptError(
                line_no, "goal.ee_pose", "expected 'ee_pose x y z qw qx qy qz pos_eps m ang_eps rad'"
            )
        vals = _floats(line_no, "goal.ee_pose", rest[:7], 7)
        (pos_eps,) = _floats(line_no, "goal.ee_pose.pos_eps", rest[8:9], 1)
        (ang_eps,) = _floats(line_no, "goal.ee_pose.ang_eps", rest[10:11], 1)
        if pos_eps <= 0 or ang_eps <= 0:
            raise ScriptError(line_no, "goal.ee_pose", "tolerances must be positive")
        return Goal(
            label,
            kind,
            position=Vec3(*vals[:3]),
            orientation=_unit_quat(line_no, "goal.ee_pose", vals[3:]),
            pos_eps=pos_eps,
            ang_eps=ang_eps,
        )
    if kind in ("gripper_below", "gripper_above"):
        (v,) = _floats(line_no, f"goal.{kind}", rest, 1)
        if not 0.0 <= v <= 1.0:
            raise ScriptError(line_no, f"goal.{kind}", "threshold must be in [0, 1]")
        return Goal(label, kind, value=v)
    if kind == "head_at":
        if len(rest) != 4 or rest[2] != "eps":
            raise ScriptError(line_no, "goal.head_at", "expected 'head_at roll pitch eps rad'")
        roll, pitch = _floats(line_no, "goal.head_at", rest[:2], 2)
        (eps,) = _floats(line_no, "goal.head_at.eps", rest[3:4], 1)
        if eps <= 0:
            raise ScriptError(line_no, "goal.head_at.eps", "eps must be positive")
        return Goal(label, kind, roll=roll, pitch=pitch, ang_eps=eps)
    raise ScriptError(line_no, "goal", f"unknown goal kind {kind!r}")


def parse_scenario(text: str, name_hint: str = "scenario") -> ScenarioScript:
    name = name_hint
    seed = 0
    duration = None
    arm_rate = 50.0
    network = NetworkModel()
    home: tuple[float, ...] = (0.0, -1.2, 1.0, -1.37, -1.57, 0.0)
    scale = 1.0
    align = Quat(1.0, 0.0, 0.0, 0.0)
    keyframes: list[Keyframe] = []
    goals: list[Goal] = []
    toggles: list[float] = []
    blackouts: list[tuple[float, float]] = []
    limit_overrides: dict[int, tuple[float, float]] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, rest = tokens[0], tokens[1:]
        if directive == "scenario":
            if len(rest) != 1:
                raise ScriptError(line_no, "scenario", "expected a single name")
            name = rest[0]
        elif directive == "seed":
            try:
                seed = int(rest[0])
            except (IndexError, ValueError):
                raise ScriptError(line_no, "seed", "expected an integer") from None
        elif directive == "duration":
            (duration,) = _floats(line_no, "duration", rest, 1)
            if duration <= 0:
                raise ScriptError(line_no, "duration", "must be positive")
        elif directive == "arm_rate":
            (arm_rate,) = _floats(line_no, "arm_rate", rest, 1)
            if not 1.0 <= arm_rate <= 1000.0:
                raise ScriptError(line_no, "arm_rate", "must be in [1, 1000] Hz")
        elif directive == "network":
            if len(rest) != 8 or rest[0::2] != ["latency_ms", "jitter_ms", "drop", "duplicate"]:
                raise ScriptError(
                    line_no,
                    "network",
                    "expected 'network latency_ms f jitter_ms f drop p duplicate p'",
                )
            vals = _floats(line_no, "network", rest[1::2], 4)
            try:
                network = NetworkModel(*vals)
            except ValueError as exc:
                raise ScriptError(line_no, "network", str(exc)) from None
        elif directive == "home":
            home = tuple(_floats(line_no, "home", rest, 6))
        elif directive == "scale":
            (scale,) = _floats(line_no, "scale", rest, 1)
            if scale <= 0:
                raise ScriptError(line_no, "scale", "must be positive")
        elif directive == "align":
            align = _unit_quat(line_no, "align", _floats(line_no, "align", rest, 4))
        elif directive == "limit":
            if len(rest) != 3:
                raise ScriptError(line_no, "limit", "expected 'limit jointN min max'")
            if not rest[0].startswith("joint"):
                raise ScriptError(line_no, "limit", f"bad joint name {rest[0]!r}")
            try:
                joint = int(rest[0][5:])
            except ValueError:
                raise ScriptError(line_no, "limit", f"bad joint name {rest[0]!r}") from None
            if not 1 <= joint <= 6:
                raise ScriptError(line_no, "limit", "joint index must be 1..6")
            lo, hi = _floats(line_no, "limit", rest[1:], 2)
            if not lo < hi:
                raise ScriptError(line_no, "limit", "min must be below max")
            limit_overrides[joint] = (lo, hi)
        elif directive == "keyframe":
            keyframes.append(_parse_keyframe(line_no, rest))
            if len(keyframes) >= 2 and keyframes[-1].t <= keyframes[-2].t:
                raise ScriptError(line_no, "keyframe.t", "times must be strictly increasing")
        elif directive == "toggle":
            (t,) = _floats(line_no, "toggle", rest, 1)
            toggles.append(t)
        elif directive == "blackout":
            t0, t1 = _floats(line_no, "blackout", rest, 2)
            if not t0 < t1:
                raise ScriptError(line_no, "blackout", "start must precede end")
            blackouts.append((t0, t1))
        elif directive == "goal":
            goals.append(_parse_goal(line_no, rest, len(goals)))
        else:
            raise ScriptError(line_no, directive, "unknown directive")

    if not keyframes:
        raise ScriptError(0, "keyframe", "scenario has no keyframes")
    return ScenarioScript(
        name=name,
        seed=seed,
        keyframes=keyframes,
        goals=goals,
        network=network,
        duration=duration,
        arm_rate_hz=arm_rate,
        home=home,
        scale=scale,
        align=align,
        toggles=sorted(toggles),
        blackouts=sorted(blackouts),
        limit_overrides=limit_overrides,
    )


def load_scenario(path: str | Path) -> ScenarioScript:
    p = Path(path)
    return parse_scenario(p.read_text(), name_hint=p.stem)
