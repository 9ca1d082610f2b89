"""Scenario run metrics: tracking RMS, latency percentiles, packet ledger.

Reports render through ``repr`` floats so equal runs produce byte-equal
text; wall-clock time is deliberately not part of the report object (it
would break the byte-identical determinism contract) and is printed
separately by the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class EmptyMetricsError(ValueError):
    """Raised when a metric is computed over an empty sample stream."""


def rms(samples: list[float]) -> float:
    if not samples:
        raise EmptyMetricsError("rms of empty stream")
    return math.sqrt(sum(s * s for s in samples) / len(samples))


def percentile_nearest_rank(samples: list[float], pct: float) -> float:
    """Nearest-rank percentile: value at rank ceil(pct/100 * n)."""
    if not samples:
        raise EmptyMetricsError(f"p{pct} of empty stream")
    if not 0 < pct <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {pct}")
    ordered = sorted(samples)
    rank = math.ceil(pct / 100.0 * len(ordered))
    return ordered[rank - 1]


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    seed: int
    ee_rms_m: float
    head_rms_rad: float
    latency_p50_ms: float
    latency_p95_ms: float
    packets_sent: int
    packets_dropped: int
    packets_stale: int
    packets_delivered: int
    estop_events: tuple[str, ...]
    goals: tuple[tuple[str, bool], ...]
    success: bool
    sim_duration_s: float

    def render_kv(self) -> str:
        """Machine-readable key-value lines (one metric per line)."""
        lines = [
            f"scenario {self.scenario}",
            f"seed {self.seed}",
            f"ee_rms_m {self.ee_rms_m!r}",
            f"head_rms_rad {self.head_rms_rad!r}",
            f"latency_p50_ms {self.latency_p50_ms!r}",
            f"latency_p95_ms {self.latency_p95_ms!r}",
            f"packets_sent {self.packets_sent}",
            f"packets_dropped {self.packets_dropped}",
            f"packets_stale {self.packets_stale}",
            f"packets_delivered {self.packets_delivered}",
            f"estop_events {','.join(self.estop_events) if self.estop_events else '-'}",
        ]
        for label, ok in self.goals:
            lines.append(f"goal {label} {'pass' if ok else 'fail'}")
        lines.append(f"success {'true' if self.success else 'false'}")
        lines.append(f"sim_duration_s {self.sim_duration_s!r}")
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        """Human-oriented summary block."""
        out = [
            f"scenario: {self.scenario} (seed {self.seed})",
            f"  ee tracking RMS:    {self.ee_rms_m * 1000.0:.3f} mm",
            f"  head tracking RMS:  {self.head_rms_rad:.6f} rad",
            f"  cmd latency p50/p95: {self.latency_p50_ms:.3f} / {self.latency_p95_ms:.3f} ms",
            f"  packets: {self.packets_sent} sent, {self.packets_delivered} delivered, "
            f"{self.packets_dropped} dropped, {self.packets_stale} stale",
            f"  e-stops: {', '.join(self.estop_events) if self.estop_events else 'none'}",
        ]
        for label, ok in self.goals:
            out.append(f"  goal {label}: {'PASS' if ok else 'FAIL'}")
        out.append(f"  success: {'yes' if self.success else 'no'}")
        out.append(f"  sim duration: {self.sim_duration_s:.3f} s")
        return "\n".join(out) + "\n"
