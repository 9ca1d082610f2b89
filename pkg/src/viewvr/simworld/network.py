"""Seeded lossy/jittery network model for the command and telemetry links.

Delivery is fully determined by (model parameters, seed, send sequence):
per packet the RNG is consumed in a fixed order -- drop draw, jitter draw,
duplicate draw, duplicate-jitter draw -- so identical runs produce
identical delivery schedules.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass


@dataclass(frozen=True)
class NetworkModel:
    """One-way link parameters: latency/jitter in ms, probabilities in [0, 1]."""

    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    drop_prob: float = 0.0
    duplicate_prob: float = 0.0

    def __post_init__(self):
        if self.latency_ms < 0 or self.jitter_ms < 0:
            raise ValueError("latency and jitter must be non-negative")
        for name, p in (("drop_prob", self.drop_prob), ("duplicate_prob", self.duplicate_prob)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")

    @property
    def lossless(self) -> bool:
        return self.jitter_ms == 0.0 and self.drop_prob == 0.0 and self.duplicate_prob == 0.0


def deliver_time(model: NetworkModel, rng: random.Random, t_send_us: int) -> int | None:
    """Arrival time of one transmission, or None when dropped.

    Consumes exactly one drop draw, plus one jitter draw when not dropped.
    """
    if rng.random() < model.drop_prob:
        return None
    jitter = rng.uniform(-model.jitter_ms, model.jitter_ms) if model.jitter_ms > 0 else 0.0
    delay_us = round((model.latency_ms + jitter) * 1000.0)
    return t_send_us + max(0, delay_us)


class NetworkLink:
    """In-flight packet queue between two endpoints of the simulation."""

    def __init__(self, model: NetworkModel, seed: int):
        self.model = model
        self._rng = random.Random(seed)
        self._heap: list[tuple[int, int, bytes]] = []
        self._order = 0
        self.sent = 0
        self.dropped = 0
        self.delivered = 0

    def send(self, data: bytes, t_send_us: int) -> None:
        self.sent += 1
        arrival = deliver_time(self.model, self._rng, t_send_us)
        if arrival is None:
            self.dropped += 1
        else:
            heapq.heappush(self._heap, (arrival, self._order, data))
            self._order += 1
        if self._rng.random() < self.model.duplicate_prob:
            dup_arrival = deliver_time(self.model, self._rng, t_send_us)
            if dup_arrival is not None:
                heapq.heappush(self._heap, (dup_arrival, self._order, data))
                self._order += 1

    def poll(self, now_us: int) -> list[bytes]:
        """Packets whose arrival time has come, in (arrival, send order)."""
        out = []
        while self._heap and self._heap[0][0] <= now_us:
            _, _, data = heapq.heappop(self._heap)
            self.delivered += 1
            out.append(data)
        return out

    @property
    def in_flight(self) -> int:
        return len(self._heap)
