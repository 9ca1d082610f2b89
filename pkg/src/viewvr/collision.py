"""Capsule-based self-collision proxy for the arm.

The default model wraps the arm in four capsules (base column, upper arm,
forearm, wrist cluster) attached to forward-kinematics frames.  It is a
conservative stand-in, not a physical mesh: capsule ends are pulled back
from shared joints just far enough that the elbow region does not touch
at rest, which makes a deeply folded elbow register as a collision while
ordinary postures stay clear.  Pairs that overlap by construction (they
share a joint) are listed as excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geom import Vec3
from .kinematics import DHParams, JointConfig, UR3_DH, fk_frames


@dataclass(frozen=True)
class Capsule:
    """Segment (two endpoint offsets in the link frame) with a radius."""

    link: int  # fk frame index the endpoints are rigid in (0..6)
    end_a: Vec3
    end_b: Vec3
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"capsule radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class CapsuleModel:
    capsules: tuple[Capsule, ...]
    excluded_pairs: frozenset[frozenset[int]] = field(default_factory=frozenset)

    def is_excluded(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self.excluded_pairs


def segment_distance(
    p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3
) -> float:
    """Closed-form minimum distance between segments p1q1 and p2q2."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1.dot(d1)
    e = d2.dot(d2)
    f = d2.dot(r)
    if a <= 1e-30 and e <= 1e-30:
        return r.norm()
    if a <= 1e-30:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = d1.dot(r)
        if e <= 1e-30:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = d1.dot(d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 1e-30 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    closest1 = p1 + d1 * s
    closest2 = p2 + d2 * t
    return (closest1 - closest2).norm()


def default_capsule_model(dh: DHParams = UR3_DH) -> CapsuleModel:
    """Four-capsule arm envelope sized from the DH constants.

    Radii 0.06 / 0.05 / 0.05 / 0.045 m; the elbow-side ends of the upper
    arm and forearm are shortened by ``elbow_margin`` so that pair only
    closes up when the elbow folds past roughly 110 degrees.
    """
    d1 = dh.d[0]
    a2, a3 = dh.a[1], dh.a[2]
    d4, d5 = dh.d[3], dh.d[4]
    elbow_margin = 0.09

    # upper arm lives in frame 2: shoulder end at (-a2, 0, 0), elbow at origin
    shoulder_end = Vec3(-a2, 0.0, 0.0)
    upper_elbow_end = Vec3(math.copysign(elbow_margin, -a2), 0.0, 0.0)
    # forearm lives in frame 3: elbow end at (-a3, 0, 0), wrist at origin
    forearm_elbow_end = Vec3(-a3 - math.copysign(elbow_margin, -a3), 0.0, 0.0)

    return CapsuleModel(
        capsules=(
            Capsule(0, Vec3(0.0, 0.0, 0.0), Vec3(0.0, 0.0, d1), 0.06),
            Capsule(2, shoulder_end, upper_elbow_end, 0.05),
            Capsule(3, forearm_elbow_end, Vec3(0.0, 0.0, 0.0), 0.05),
            Capsule(4, Vec3(0.0, -d4, 0.0), Vec3(0.0, 0.0, d5), 0.045),
        ),
        excluded_pairs=frozenset({frozenset((0, 1)), frozenset((2, 3))}),
    )


def _world_segments(q: JointConfig, model: CapsuleModel, dh: DHParams):
    frames = fk_frames(q, dh)
    segs = []
    for cap in model.capsules:
        t = frames[cap.link]
        r = t[:3, :3]
        p = t[:3, 3]
        ea = r @ (cap.end_a.as_tuple()) + p
        eb = r @ (cap.end_b.as_tuple()) + p
        segs.append((Vec3(*ea), Vec3(*eb), cap.radius))
    return segs


def self_collision(
    q: JointConfig, model: CapsuleModel | None = None, dh: DHParams = UR3_DH
) -> bool:
    """True iff any non-excluded capsule pair is closer than the radii sum."""
    if model is None:
        model = default_capsule_model(dh)
    segs = _world_segments(q, model, dh)
    n = len(segs)
    for i in range(n):
        for j in range(i + 1, n):
            if model.is_excluded(i, j):
                continue
            pa, pb, ra = segs[i]
            qa, qb, rb = segs[j]
            if segment_distance(pa, pb, qa, qb) < ra + rb:
                return True
    return False
