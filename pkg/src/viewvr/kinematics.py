"""UR3 serial-chain kinematics: forward, closed-form inverse, joint limits.

The chain is described by standard Denavit-Hartenberg rows
(Rz(q) Tz(d) Tx(a) Rx(alpha) per joint).  The shipped defaults are the
manufacturer constants for the UR3; loading a different parameter file
retargets everything here to other UR-family arms.

The inverse solver enumerates the analytic branches -- shoulder
{left, right} x wrist {flip, no-flip} x elbow {up, down} -- so a generic
non-singular pose yields exactly 8 solutions.  Branches that land on the
wrist singularity (|sin(q5)| ~ 0) are dropped and reported through the
module logger rather than being patched with an arbitrary q6.

Internally transforms are 3x4 row tuples rather than numpy arrays: the
solver sits on the 50 Hz command path and per-call numpy overhead on 4x4
matrices dominates the actual arithmetic at this size.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .geom import Pose, Quat, Vec3, quat_angle, quat_from_matrix, quat_normalize, quat_to_matrix

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# |sin(q5)| below this is treated as the wrist singularity
WRIST_SINGULARITY_EPS = 1e-8

# every returned IK solution must reproduce the target this tightly
IK_POSITION_TOL = 1e-9  # meters
IK_ANGLE_TOL = 1e-9  # radians


class NoSolutionError(ValueError):
    """Raised when a solution is requested from an empty candidate list."""


class InvalidTargetError(ValueError):
    """Raised for IK targets whose orientation is not a unit quaternion."""


class DHFileError(ValueError):
    """Raised when a DH or limits parameter file is malformed."""


class JointConfig(NamedTuple):
    q1: float
    q2: float
    q3: float
    q4: float
    q5: float
    q6: float


def wrap_angle(x: float) -> float:
    """Wrap to (-pi, pi]."""
    x = math.fmod(x, TWO_PI)
    if x > math.pi:
        x -= TWO_PI
    elif x <= -math.pi:
        x += TWO_PI
    return x


def normalize_config(q: JointConfig) -> JointConfig:
    return JointConfig(*(wrap_angle(v) for v in q))


def joint_distance(a: JointConfig, b: JointConfig, weights=None) -> float:
    """Weighted squared joint-space distance with per-joint angle wrapping."""
    if weights is None:
        weights = (1.0,) * 6
    return sum(w * wrap_angle(x - y) ** 2 for w, x, y in zip(weights, a, b))


@dataclass(frozen=True)
class DHParams:
    """Six standard-DH rows: a (m), d (m), alpha (rad) per joint."""

    a: tuple[float, ...]
    d: tuple[float, ...]
    alpha: tuple[float, ...]

    def __post_init__(self):
        for name, vals in (("a", self.a), ("d", self.d), ("alpha", self.alpha)):
            if len(vals) != 6:
                raise ValueError(f"DH field {name!r} needs 6 entries, got {len(vals)}")
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"DH field {name!r} contains non-finite values")


# Manufacturer kinematic constants for the UR3 (standard DH).
UR3_DH = DHParams(
    a=(0.0, -0.24365, -0.21325, 0.0, 0.0, 0.0),
    d=(0.1519, 0.0, 0.0, 0.11235, 0.08535, 0.0819),
    alpha=(math.pi / 2, 0.0, 0.0, math.pi / 2, -math.pi / 2, 0.0),
)


def load_dh_file(path: str | Path) -> DHParams:
    """Parse a flat key-value DH file.

    Format: one ``jointN.field value`` pair per line (N in 1..6, field one
    of a/d/alpha), ``#`` comments and blank lines ignored.
    """
    values = _read_kv_file(path)
    fields = {}
    for field in ("a", "d", "alpha"):
        fields[field] = _collect_joint_row(path, values, field)
    try:
        return DHParams(**fields)
    except ValueError as exc:
        raise DHFileError(f"{path}: {exc}") from None


def save_dh_file(path: str | Path, dh: DHParams) -> None:
    lines = ["# standard DH parameters: jointN.{a,d,alpha}, meters/radians"]
    for j in range(6):
        lines.append(f"joint{j + 1}.a {dh.a[j]!r}")
        lines.append(f"joint{j + 1}.d {dh.d[j]!r}")
        lines.append(f"joint{j + 1}.alpha {dh.alpha[j]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_kv_file(path: str | Path) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DHFileError(f"{path}:{lineno}: expected 'key value', got {raw!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise DHFileError(f"{path}:{lineno}: bad number {parts[1]!r}") from None
    return values


def _collect_joint_row(path, values: dict[str, float], field: str) -> tuple[float, ...]:
    row = []
    for j in range(1, 7):
        key = f"joint{j}.{field}"
        if key not in values:
            raise DHFileError(f"{path}: missing key {key!r}")
        row.append(values[key])
    return tuple(row)


# --- 3x4 rigid-transform helpers (row tuples, translation in column 3) ---


def _dh_rows(q: float, d: float, a: float, alpha: float):
    cq, sq = math.cos(q), math.sin(q)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return (
        (cq, -sq * ca, sq * sa, a * cq),
        (sq, cq * ca, -cq * sa, a * sq),
        (0.0, sa, ca, d),
    )


def _mul_rows(t, u):
    (a00, a01, a02, a03), (a10, a11, a12, a13), (a20, a21, a22, a23) = t
    (b00, b01, b02, b03), (b10, b11, b12, b13), (b20, b21, b22, b23) = u
    return (
        (
            a00 * b00 + a01 * b10 + a02 * b20,
            a00 * b01 + a01 * b11 + a02 * b21,
            a00 * b02 + a01 * b12 + a02 * b22,
            a00 * b03 + a01 * b13 + a02 * b23 + a03,
        ),
        (
            a10 * b00 + a11 * b10 + a12 * b20,
            a10 * b01 + a11 * b11 + a12 * b21,
            a10 * b02 + a11 * b12 + a12 * b22,
            a10 * b03 + a11 * b13 + a12 * b23 + a13,
        ),
        (
            a20 * b00 + a21 * b10 + a22 * b20,
            a20 * b01 + a21 * b11 + a22 * b21,
            a20 * b02 + a21 * b12 + a22 * b22,
            a20 * b03 + a21 * b13 + a22 * b23 + a23,
        ),
    )


def _inv_rows(t):
    (r00, r01, r02, px), (r10, r11, r12, py), (r20, r21, r22, pz) = t
    return (
        (r00, r10, r20, -(r00 * px + r10 * py + r20 * pz)),
        (r01, r11, r21, -(r01 * px + r11 * py + r21 * pz)),
        (r02, r12, r22, -(r02 * px + r12 * py + r22 * pz)),
    )


def _fk_rows(q, dh: DHParams):
    t = _dh_rows(q[0], dh.d[0], dh.a[0], dh.alpha[0])
    for i in range(1, 6):
        t = _mul_rows(t, _dh_rows(q[i], dh.d[i], dh.a[i], dh.alpha[i]))
    return t


def _rows_to_pose(t) -> Pose:
    return Pose(Vec3(t[0][3], t[1][3], t[2][3]), quat_from_matrix(t))


def _pose_to_rows(p: Pose):
    m = quat_to_matrix(p.orientation)
    return (
        (m[0][0], m[0][1], m[0][2], p.position.x),
        (m[1][0], m[1][1], m[1][2], p.position.y),
        (m[2][0], m[2][1], m[2][2], p.position.z),
    )


# --- public forward kinematics ---


def fk(q: JointConfig, dh: DHParams = UR3_DH) -> Pose:
    """Tool-flange pose in the base frame."""
    return _rows_to_pose(_fk_rows(q, dh))


def fk_matrix(q: JointConfig, dh: DHParams = UR3_DH) -> np.ndarray:
    """Tool-flange pose as a 4x4 homogeneous matrix."""
    t = np.eye(4)
    rows = _fk_rows(q, dh)
    t[:3, :] = rows
    return t


def fk_frames(q: JointConfig, dh: DHParams = UR3_DH) -> list[np.ndarray]:
    """Homogeneous transforms of frames 0..6 (base first, flange last)."""
    frames = [np.eye(4)]
    rows = _dh_rows(q[0], dh.d[0], dh.a[0], dh.alpha[0])
    for i in range(1, 7):
        m = np.eye(4)
        m[:3, :] = rows
        frames.append(m)
        if i < 6:
            rows = _mul_rows(rows, _dh_rows(q[i], dh.d[i], dh.a[i], dh.alpha[i]))
    return frames


def matrix_to_pose(t: np.ndarray) -> Pose:
    return Pose(Vec3(t[0][3], t[1][3], t[2][3]), quat_from_matrix(t))


def pose_to_matrix(p: Pose) -> np.ndarray:
    t = np.eye(4)
    t[:3, :] = _pose_to_rows(p)
    return t


def pose_difference(a: Pose, b: Pose) -> tuple[float, float]:
    """(position distance in meters, orientation angle in radians)."""
    return (a.position - b.position).norm(), quat_angle(a.orientation, b.orientation)


def _clamped_acos(c: float, eps: float = 1e-9) -> float | None:
    """acos tolerant of tiny domain overshoot; None when truly out of range."""
    if c > 1.0:
        return 0.0 if c - 1.0 < eps else None
    if c < -1.0:
        return math.pi if -1.0 - c < eps else None
    return math.acos(c)


def ik(target: Pose, dh: DHParams = UR3_DH) -> list[JointConfig]:
    """Closed-form inverse kinematics; 0 to 8 verified solutions.

    Unreachable targets return an empty list.  Targets whose orientation
    is not unit (beyond 1e-6) raise :class:`InvalidTargetError`.  Solutions
    are normalized to (-pi, pi] and each reproduces ``target`` through
    :func:`fk` within IK_POSITION_TOL meters / IK_ANGLE_TOL radians;
    branches failing that re-verification are dropped, never patched.
    """
    if abs(target.orientation.norm() - 1.0) > 1e-6:
        raise InvalidTargetError(
            f"target orientation norm {target.orientation.norm():.9f} is not unit"
        )
    target = Pose(target.position, quat_normalize(target.orientation))
    t06 = _pose_to_rows(target)
    d, a = dh.d, dh.a
    d1, d4, d5, d6 = d[0], d[3], d[4], d[5]
    a2, a3 = a[1], a[2]

    # wrist-center circle: frame-5 origin projected on the base plane
    p05x = -d6 * t06[0][2] + t06[0][3]
    p05y = -d6 * t06[1][2] + t06[1][3]
    r05 = math.hypot(p05x, p05y)
    phi = _clamped_acos(d4 / r05) if r05 > 0.0 else None
    if phi is None:
        return []  # target inside the shoulder offset cylinder
    psi = math.atan2(p05y, p05x)

    solutions: list[JointConfig] = []
    for sign1 in (1.0, -1.0):
        q1 = psi + sign1 * phi + math.pi / 2.0
        t01 = _dh_rows(q1, d1, a[0], dh.alpha[0])
        t16 = _mul_rows(_inv_rows(t01), t06)

        acos5 = _clamped_acos((t16[2][3] - d4) / d6)
        if acos5 is None:
            continue
        for sign5 in (1.0, -1.0):
            q5 = sign5 * acos5
            s5 = math.sin(q5)
            if abs(s5) < WRIST_SINGULARITY_EPS:
                log.debug(
                    "dropping wrist-singular IK branch (q1=%.6f, q5=%.6f): q6 undetermined",
                    q1,
                    q5,
                )
                break  # the two q5 signs coincide at the singularity
            t61 = _inv_rows(t16)
            q6 = math.atan2(-t61[1][2] / s5, t61[0][2] / s5)

            t45 = _dh_rows(q5, d5, a[4], dh.alpha[4])
            t56 = _dh_rows(q6, d6, a[5], dh.alpha[5])
            t14 = _mul_rows(t16, _inv_rows(_mul_rows(t45, t56)))
            p13x = t14[0][3] - d4 * t14[0][1]
            p13y = t14[1][3] - d4 * t14[1][1]
            lsq = p13x * p13x + p13y * p13y
            l13 = math.sqrt(lsq)
            acos3 = _clamped_acos((lsq - a2 * a2 - a3 * a3) / (2.0 * a2 * a3))
            if acos3 is None:
                continue  # planar 2R subchain cannot reach
            for sign3 in (1.0, -1.0):
                q3 = sign3 * acos3
                q2 = -math.atan2(p13y, -p13x) + math.asin(
                    max(-1.0, min(1.0, a3 * math.sin(q3) / l13))
                )
                t12 = _dh_rows(q2, d[1], a2, dh.alpha[1])
                t23 = _dh_rows(q3, d[2], a3, dh.alpha[2])
                t34 = _mul_rows(_inv_rows(t23), _mul_rows(_inv_rows(t12), t14))
                q4 = math.atan2(t34[1][0], t34[0][0])

                cand = normalize_config(JointConfig(q1, q2, q3, q4, q5, q6))
                dp, dang = pose_difference(fk(cand, dh), target)
                if dp < IK_POSITION_TOL and dang < IK_ANGLE_TOL:
                    solutions.append(cand)
                else:
                    log.debug(
                        "dropping unverified IK branch (%.2e m, %.2e rad): %s", dp, dang, cand
                    )

    # collapse duplicates from coincident branches at singular geometries
    unique: list[JointConfig] = []
    for cand in solutions:
        if not any(joint_distance(cand, u) < 1e-16 for u in unique):
            unique.append(cand)
    return unique


def select_solution(
    solutions: list[JointConfig], current: JointConfig, weights=None
) -> JointConfig:
    """Nearest solution to ``current`` by weighted wrapped joint distance.

    Ties keep the earliest list entry.  Raises :class:`NoSolutionError`
    on an empty list.
    """
    if not solutions:
        raise NoSolutionError("no IK solutions to select from")
    best = solutions[0]
    best_d = joint_distance(best, current, weights)
    for cand in solutions[1:]:
        dist = joint_distance(cand, current, weights)
        if dist < best_d:
            best, best_d = cand, dist
    return best


@dataclass(frozen=True)
class JointLimits:
    """Inclusive per-joint position bounds plus velocity caps."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    velocity: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.velocity) == 6):
            raise ValueError("joint limits need 6 entries per field")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"joint limit min {lo} must be below max {hi}")
        if any(v <= 0 for v in self.velocity):
            raise ValueError("velocity limits must be positive")


# UR3 factory envelope: +/-2pi travel; 180 deg/s base..elbow, 360 deg/s wrists.
UR3_LIMITS = JointLimits(
    lower=(-TWO_PI,) * 6,
    upper=(TWO_PI,) * 6,
    velocity=(math.pi, math.pi, math.pi, TWO_PI, TWO_PI, TWO_PI),
)


def load_limits_file(path: str | Path) -> JointLimits:
    """Parse a flat key-value limits file (jointN.{min,max,vel})."""
    values = _read_kv_file(path)
    rows = {}
    for field, attr in (("min", "lower"), ("max", "upper"), ("vel", "velocity")):
        rows[attr] = _collect_joint_row(path, values, field)
    try:
        return JointLimits(**rows)
    except ValueError as exc:
        raise DHFileError(f"{path}: {exc}") from None


def save_limits_file(path: str | Path, lim: JointLimits) -> None:
    lines = ["# joint limits: jointN.{min,max} radians, jointN.vel rad/s"]
    for j in range(6):
        lines.append(f"joint{j + 1}.min {lim.lower[j]!r}")
        lines.append(f"joint{j + 1}.max {lim.upper[j]!r}")
        lines.append(f"joint{j + 1}.vel {lim.velocity[j]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def check_limits(q: JointConfig, lim: JointLimits = UR3_LIMITS) -> tuple[int, ...]:
    """Indices (1-based) of joints outside their inclusive bounds; () when ok."""
    return tuple(
        i + 1 for i, (v, lo, hi) in enumerate(zip(q, lim.lower, lim.upper)) if not lo <= v <= hi
    )
