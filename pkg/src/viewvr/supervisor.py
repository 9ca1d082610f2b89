"""Safety supervisor: joint limits, self-collision, command watchdog.

The supervisor is consulted before any motion command reaches a plant and
once per control tick for watchdog expiry.  A trip latches: no motion
command passes until an explicit operator reset.  The watchdog arms with
the first command-channel datagram and is fed by every subsequent arm
command or heartbeat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .collision import CapsuleModel, default_capsule_model, self_collision
from .kinematics import JointConfig, JointLimits, UR3_LIMITS, check_limits
from .proto import EStopReason

WATCHDOG_TIMEOUT_US = 250_000


@dataclass
class SafetySupervisor:
    limits: JointLimits = UR3_LIMITS
    capsule_model: CapsuleModel = field(default_factory=default_capsule_model)
    watchdog_timeout_us: int = WATCHDOG_TIMEOUT_US
    latched_reason: EStopReason | None = None
    watchdog_deadline_us: int | None = None
    trip_count: int = 0

    @property
    def latched(self) -> bool:
        return self.latched_reason is not None

    def latch(self, reason: EStopReason) -> None:
        if self.latched_reason is None:
            self.latched_reason = reason
            self.trip_count += 1

    def reset(self) -> None:
        """Explicit operator action; also disarms the watchdog until traffic resumes."""
        self.latched_reason = None
        self.watchdog_deadline_us = None

    def feed_watchdog(self, now_us: int) -> None:
        self.watchdog_deadline_us = now_us + self.watchdog_timeout_us

    def check_command(self, q: JointConfig) -> EStopReason | None:
        """Validate a commanded arm configuration before it is applied.

        Latches and reports the reason on a limit violation or a predicted
        self-collision; returns None when the command may pass.
        """
        if self.latched:
            return self.latched_reason
        if check_limits(q, self.limits):
            self.latch(EStopReason.LIMIT_VIOLATION)
            return EStopReason.LIMIT_VIOLATION
        if self_collision(q, self.capsule_model):
            self.latch(EStopReason.SELF_COLLISION)
            return EStopReason.SELF_COLLISION
        return None

    def supervise(self, q: JointConfig, now_us: int) -> EStopReason | None:
        """Per-tick state check: current config plus watchdog expiry."""
        if self.latched:
            return self.latched_reason
        if check_limits(q, self.limits):
            self.latch(EStopReason.LIMIT_VIOLATION)
        elif self_collision(q, self.capsule_model):
            self.latch(EStopReason.SELF_COLLISION)
        elif self.watchdog_deadline_us is not None and now_us > self.watchdog_deadline_us:
            self.latch(EStopReason.WATCHDOG)
        return self.latched_reason
