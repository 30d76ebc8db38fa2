"""Simulated transport between the fleet service and agents.

One lossy, delayed main channel carries everything except stops; a separate
always-available stop channel models the hardwired remote-stop buttons.
Delivery times are drawn from labeled seeded streams, so runs replay exactly.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any

from .seeding import derive_rng

STOP_LATENCY = 0.05


@dataclass(frozen=True)
class ChannelConfig:
    latency_mean: float = 0.0
    jitter: float = 0.0
    drop_prob: float = 0.0
    outages: tuple[tuple[float, float], ...] = ()
    fifo: bool = True

    def __post_init__(self):
        if self.latency_mean < 0 or self.jitter < 0:
            raise ValueError("latency and jitter must be >= 0")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob must be in [0, 1], got {self.drop_prob}")
        for t0, t1 in self.outages:
            if t1 < t0:
                raise ValueError(f"outage window [{t0}, {t1}] reversed")


@dataclass(frozen=True)
class Delivery:
    deliver_at: float
    seq: int
    sender: str
    recipient: str
    payload: Any


class Channel:
    """Seeded drop/latency/jitter/outage transport, FIFO per sender."""

    def __init__(self, config: ChannelConfig, seed: int, label: str = "main") -> None:
        self.config = config
        self._rng = derive_rng(seed, f"net/{label}")
        self._heap: list[tuple[float, int, Delivery]] = []
        self._seq = 0
        self._last_per_sender: dict[str, float] = {}

    def send(self, sender: str, recipient: str, payload: Any, now: float):
        """Schedule a message.  Returns the Delivery, or None if dropped."""
        cfg = self.config
        # Both draws happen unconditionally to keep the stream stable.
        drop_draw = self._rng.random()
        jitter_draw = self._rng.uniform(-1.0, 1.0)
        if drop_draw < cfg.drop_prob:
            return None
        t_del = now + cfg.latency_mean + cfg.jitter * jitter_draw
        t_del = max(t_del, now)
        t_del = self._defer_past_outages(t_del)
        if cfg.fifo:
            prev = self._last_per_sender.get(sender, -math.inf)
            t_del = max(t_del, prev)
            self._last_per_sender[sender] = t_del
        self._seq += 1
        d = Delivery(t_del, self._seq, sender, recipient, payload)
        heapq.heappush(self._heap, (t_del, self._seq, d))
        return d

    def _defer_past_outages(self, t_del: float) -> float:
        # A delivery landing inside a window slips to the window end plus one
        # nominal latency; repeat in case that lands in a later window.  The
        # nextafter keeps the result strictly past t1 when latency is zero,
        # otherwise the inclusive window check would never let go.
        moved = True
        while moved:
            moved = False
            for t0, t1 in self.config.outages:
                if t0 <= t_del <= t1:
                    t_del = max(t1 + self.config.latency_mean,
                                math.nextafter(t1, math.inf))
                    moved = True
        return t_del

    def collect_due(self, now: float) -> list[Delivery]:
        """Pop every delivery due at or before now, in (time, send order)."""
        out = []
        while self._heap and self._heap[0][0] <= now + 1e-12:
            out.append(heapq.heappop(self._heap)[2])
        return out

    @property
    def pending(self) -> int:
        return len(self._heap)


class StopChannel:
    """Hardwired stop line: fixed latency, no loss, immune to outages."""

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, Delivery]] = []
        self._seq = 0

    def press(self, targets: list[str], now: float, sender: str = "stop-button"):
        """Schedule a stop for every target.  Returns the deliveries."""
        out = []
        for target in targets:
            self._seq += 1
            d = Delivery(now + STOP_LATENCY, self._seq, sender, target, "stop")
            heapq.heappush(self._heap, (d.deliver_at, d.seq, d))
            out.append(d)
        return out

    def collect_due(self, now: float) -> list[Delivery]:
        out = []
        while self._heap and self._heap[0][0] <= now + 1e-12:
            out.append(heapq.heappop(self._heap)[2])
        return out

    @property
    def pending(self) -> int:
        return len(self._heap)
