"""Spatial math primitives: vectors, unit quaternions, rigid poses.

Conventions used throughout the stack:

* Quaternion storage order is (w, x, y, z) with the Hamilton product, so
  ``quat_mul(a, b)`` is the rotation that applies ``b`` first and ``a``
  second (matches 3x3 matrix composition ``Ra @ Rb``).
* The operator head frame is x forward, y left, z up.  The roll/pitch
  decomposition is the intrinsic Z-Y-X (yaw-pitch-roll) factorization with
  the yaw term discarded, because the robotic head only has two actuated
  axes.
* Everything is double precision; angles are radians, distances meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DegenerateRotationError(ValueError):
    """Raised when a quaternion with (near-)zero norm is normalized."""


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


VEC3_ZERO = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class Quat:
    """Rotation quaternion, (w, x, y, z) storage, Hamilton convention."""

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def conjugate(self) -> "Quat":
        return Quat(self.w, -self.x, -self.y, -self.z)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


QUAT_IDENTITY = Quat(1.0, 0.0, 0.0, 0.0)


def quat_normalize(q: Quat) -> Quat:
    """Scale ``q`` to unit norm.

    Idempotent at the bit level: normalizing an already-normalized
    quaternion returns it unchanged.  Raises
    :class:`DegenerateRotationError` for (near-)zero input.
    """
    n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z
    if n2 < 1e-30 or not math.isfinite(n2):
        raise DegenerateRotationError(f"cannot normalize quaternion with norm^2 {n2}")
    # Tolerance short-circuit makes this bitwise idempotent: one division
    # puts the squared norm within a few ulp of 1, far inside the band, so
    # a second call returns its input unchanged.  (Chasing n2 == 1.0
    # exactly does not terminate for some denormal components.)
    if abs(n2 - 1.0) <= 1e-12:
        return q
    n = math.sqrt(n2)
    return Quat(q.w / n, q.x / n, q.y / n, q.z / n)


def quat_mul(a: Quat, b: Quat) -> Quat:
    """Hamilton product ``a * b`` (applies b first, then a), renormalized."""
    w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z
    x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y
    y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x
    z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w
    return quat_normalize(Quat(w, x, y, z))


def quat_inverse(q: Quat) -> Quat:
    """Inverse of a unit quaternion (its conjugate)."""
    return q.conjugate()


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    n = axis.norm()
    if n < 1e-30:
        raise DegenerateRotationError("rotation axis has zero length")
    half = 0.5 * angle
    s = math.sin(half) / n
    return quat_normalize(Quat(math.cos(half), axis.x * s, axis.y * s, axis.z * s))


def rotate_point(q: Quat, p: Vec3) -> Vec3:
    """Rotate ``p`` by unit quaternion ``q`` (q p q*), norm-preserving."""
    # t = 2 * (qv x p); p' = p + w*t + qv x t
    tx = 2.0 * (q.y * p.z - q.z * p.y)
    ty = 2.0 * (q.z * p.x - q.x * p.z)
    tz = 2.0 * (q.x * p.y - q.y * p.x)
    return Vec3(
        p.x + q.w * tx + (q.y * tz - q.z * ty),
        p.y + q.w * ty + (q.z * tx - q.x * tz),
        p.z + q.w * tz + (q.x * ty - q.y * tx),
    )


def quat_to_matrix(q: Quat) -> list[list[float]]:
    """3x3 rotation matrix of a unit quaternion (row-major nested lists)."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]


def quat_from_matrix(m) -> Quat:
    """Unit quaternion from a 3x3 rotation matrix (Shepperd's method).

    ``m`` is anything indexable as ``m[i][j]``; returns the w >= 0
    representative of the double cover.
    """
    t = m[0][0] + m[1][1] + m[2][2]
    if t > 0.0:
        r = math.sqrt(1.0 + t)
        s = 0.5 / r
        q = Quat(0.5 * r, (m[2][1] - m[1][2]) * s, (m[0][2] - m[2][0]) * s, (m[1][0] - m[0][1]) * s)
    elif m[0][0] >= m[1][1] and m[0][0] >= m[2][2]:
        r = math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2])
        s = 0.5 / r
        q = Quat((m[2][1] - m[1][2]) * s, 0.5 * r, (m[0][1] + m[1][0]) * s, (m[0][2] + m[2][0]) * s)
    elif m[1][1] >= m[2][2]:
        r = math.sqrt(1.0 - m[0][0] + m[1][1] - m[2][2])
        s = 0.5 / r
        q = Quat((m[0][2] - m[2][0]) * s, (m[0][1] + m[1][0]) * s, 0.5 * r, (m[1][2] + m[2][1]) * s)
    else:
        r = math.sqrt(1.0 - m[0][0] - m[1][1] + m[2][2])
        s = 0.5 / r
        q = Quat((m[1][0] - m[0][1]) * s, (m[0][2] + m[2][0]) * s, (m[1][2] + m[2][1]) * s, 0.5 * r)
    if q.w < 0.0:
        q = Quat(-q.w, -q.x, -q.y, -q.z)
    return quat_normalize(q)


def quat_angle(a: Quat, b: Quat) -> float:
    """Rotation angle (radians, in [0, pi]) taking ``a`` to ``b``.

    Sign-insensitive (q and -q denote the same rotation) and
    well-conditioned near zero, unlike the plain acos-of-dot form.
    """
    # relative rotation r = conj(a) * b; angle = 2 atan2(|vec(r)|, |w(r)|)
    rw = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z
    rx = a.w * b.x - a.x * b.w - a.y * b.z + a.z * b.y
    ry = a.w * b.y + a.x * b.z - a.y * b.w - a.z * b.x
    rz = a.w * b.z - a.x * b.y + a.y * b.x - a.z * b.w
    return 2.0 * math.atan2(math.sqrt(rx * rx + ry * ry + rz * rz), abs(rw))


def slerp(a: Quat, b: Quat, t: float) -> Quat:
    """Spherical interpolation from ``a`` (t=0) to ``b`` (t=1), shortest arc."""
    d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z
    bw, bx, by, bz = b.w, b.x, b.y, b.z
    if d < 0.0:
        d, bw, bx, by, bz = -d, -bw, -bx, -by, -bz
    if d > 1.0 - 1e-12:
        # nearly parallel: linear blend is accurate and avoids 0/0
        return quat_normalize(
            Quat(
                a.w + t * (bw - a.w),
                a.x + t * (bx - a.x),
                a.y + t * (by - a.y),
                a.z + t * (bz - a.z),
            )
        )
    theta = math.acos(min(1.0, d))
    s = math.sin(theta)
    ka = math.sin((1.0 - t) * theta) / s
    kb = math.sin(t * theta) / s
    return quat_normalize(
        Quat(ka * a.w + kb * bw, ka * a.x + kb * bx, ka * a.y + kb * by, ka * a.z + kb * bz)
    )


@dataclass(frozen=True, slots=True)
class Pose:
    """Rigid transform: rotate by ``orientation`` then translate by ``position``."""

    position: Vec3
    orientation: Quat


POSE_IDENTITY = Pose(VEC3_ZERO, QUAT_IDENTITY)


def compose_pose(a: Pose, b: Pose) -> Pose:
    """Pose composition a * b (apply b in a's frame)."""
    return Pose(
        a.position + rotate_point(a.orientation, b.position),
        quat_mul(a.orientation, b.orientation),
    )


def invert_pose(a: Pose) -> Pose:
    qi = quat_inverse(a.orientation)
    return Pose(-rotate_point(qi, a.position), qi)


@dataclass(frozen=True, slots=True)
class RollPitch:
    """Head orientation command: roll about x (forward), pitch about y (lateral)."""

    roll: float
    pitch: float


GIMBAL_EPS = 1e-6  # |pitch| this close to pi/2 flags the decomposition degenerate


def to_roll_pitch(q: Quat) -> tuple[RollPitch, bool]:
    """Decompose a unit quaternion intrinsic Z-Y-X and discard the yaw term.

    Returns ``(RollPitch, degenerate)`` where pitch is in [-pi/2, pi/2],
    roll in (-pi, pi], and ``degenerate`` is True within ``GIMBAL_EPS`` of
    the pitch = +/-pi/2 gimbal configuration (roll is then ill-defined and
    reported as the roll+yaw residue).
    """
    sp = 2.0 * (q.w * q.y - q.x * q.z)
    sp = max(-1.0, min(1.0, sp))
    pitch = math.asin(sp)
    roll = math.atan2(2.0 * (q.y * q.z + q.w * q.x), 1.0 - 2.0 * (q.x * q.x + q.y * q.y))
    if roll == -math.pi:
        roll = math.pi
    degenerate = (math.pi / 2.0 - abs(pitch)) < GIMBAL_EPS
    return RollPitch(roll, pitch), degenerate


def from_roll_pitch(rp: RollPitch) -> Quat:
    """Quaternion with the given roll and pitch and zero yaw (Ry(pitch) * Rx(roll))."""
    hr, hp = 0.5 * rp.roll, 0.5 * rp.pitch
    cr, sr = math.cos(hr), math.sin(hr)
    cp, sp = math.cos(hp), math.sin(hp)
    return quat_normalize(Quat(cp * cr, cp * sr, sp * cr, -sp * sr))
