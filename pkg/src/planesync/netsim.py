"""Deterministic network emulation on a virtual microsecond clock.

A link applies seeded loss, a fixed one-way delay with uniform jitter, and a
serialization gate derived from its bandwidth (a datagram occupies the link
for size/rate, so a burst drains at line rate). Delivered datagrams keep
per-link FIFO order. Identical seeds reproduce identical schedules.

Also holds the clock-offset estimator used to compare timestamps taken on
different participants' clocks: the classic four-timestamp exchange.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, replace


class InvalidExchange(ValueError):
    """Timestamp exchange violates causality."""


@dataclass(frozen=True)
class LinkProfile:
    one_way_delay_ms: float = 0.0
    jitter_ms: float = 0.0
    loss_fraction: float = 0.0
    bandwidth_kbps: float = 1_000_000.0
    seed: int = 0

    def validate(self) -> None:
        if self.one_way_delay_ms < 0 or self.jitter_ms < 0:
            raise ValueError("delay and jitter must be non-negative")
        if not 0.0 <= self.loss_fraction < 1.0:
            raise ValueError("loss_fraction must be in [0, 1)")
        if self.bandwidth_kbps <= 0:
            raise ValueError("bandwidth must be positive")

    def with_seed(self, seed: int) -> "LinkProfile":
        return replace(self, seed=seed)


class EventLoop:
    """Min-heap event loop over virtual microseconds; ties break by
    insertion order, so runs are fully deterministic."""

    def __init__(self):
        self.now_us = 0
        self._heap: list = []
        self._counter = 0

    def schedule_at(self, at_us: int, fn) -> None:
        if at_us < self.now_us:
            at_us = self.now_us
        heapq.heappush(self._heap, (at_us, self._counter, fn))
        self._counter += 1

    def schedule_in(self, delay_us: int, fn) -> None:
        self.schedule_at(self.now_us + delay_us, fn)

    def pending(self) -> int:
        return len(self._heap)

    def run(self, until_us: int | None = None, stop=None) -> None:
        """Process events until the queue drains, ``until_us`` passes, or
        ``stop()`` returns True."""
        while self._heap:
            if stop is not None and stop():
                return
            at_us, _, fn = self._heap[0]
            if until_us is not None and at_us > until_us:
                self.now_us = until_us
                return
            heapq.heappop(self._heap)
            self.now_us = at_us
            fn()


@dataclass
class DeliveryRecord:
    send_us: int
    deliver_us: int | None  # None = dropped
    size: int


class EmulatedLink:
    """One direction of a link. ``deliver`` is called at the scheduled
    delivery time with (data, src)."""

    def __init__(self, profile: LinkProfile, loop: EventLoop, deliver, name: str = ""):
        profile.validate()
        self.profile = profile
        self.loop = loop
        self.deliver = deliver
        self.name = name
        self.rng = random.Random(f"{profile.seed}:{name}")
        self.busy_until_us = 0
        self.last_delivery_us = 0
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self.bytes_sent = 0
        self.bytes_delivered = 0
        self.schedule_log: list[DeliveryRecord] = []

    def send(self, data: bytes, src) -> None:
        now = self.loop.now_us
        self.sent += 1
        self.bytes_sent += len(data)
        drop_draw = self.rng.random()
        jitter_us = self.rng.uniform(-self.profile.jitter_ms, self.profile.jitter_ms) * 1000.0
        if drop_draw < self.profile.loss_fraction:
            self.dropped += 1
            self.schedule_log.append(DeliveryRecord(now, None, len(data)))
            return
        tx_us = len(data) * 8 * 1000.0 / self.profile.bandwidth_kbps
        start = max(now, self.busy_until_us)
        self.busy_until_us = start + tx_us
        deliver_at = start + tx_us + self.profile.one_way_delay_ms * 1000.0 + jitter_us
        deliver_at = int(round(max(deliver_at, self.last_delivery_us, now)))
        self.last_delivery_us = deliver_at
        self.schedule_log.append(DeliveryRecord(now, deliver_at, len(data)))

        def _deliver(data=data, src=src):
            self.delivered += 1
            self.bytes_delivered += len(data)
            self.deliver(data, src)

        self.loop.schedule_at(deliver_at, _deliver)


class EmulatedNetwork:
    """Endpoints wired by explicit directed links.

    ``attach(addr, handler)`` registers a receiver; ``connect(src, dst,
    profile)`` creates the directed link; ``send`` routes through it. Sends
    over missing links are counted and dropped (a disconnected peer)."""

    def __init__(self, loop: EventLoop):
        self.loop = loop
        self.handlers: dict = {}
        self.links: dict[tuple, EmulatedLink] = {}
        self.unrouted = 0

    def attach(self, addr, handler) -> None:
        self.handlers[addr] = handler

    def connect(self, src, dst, profile: LinkProfile) -> EmulatedLink:
        def deliver(data, src_addr, dst=dst):
            handler = self.handlers.get(dst)
            if handler is not None:
                handler(data, src_addr)

        link = EmulatedLink(profile, self.loop, deliver, name=f"{src}->{dst}")
        self.links[(src, dst)] = link
        return link

    def send(self, src, dst, data: bytes) -> None:
        link = self.links.get((src, dst))
        if link is None:
            self.unrouted += 1
            return
        link.send(data, src)

    def totals(self) -> dict:
        return {
            "sent": sum(l.sent for l in self.links.values()),
            "delivered": sum(l.delivered for l in self.links.values()),
            "dropped": sum(l.dropped for l in self.links.values()),
            "bytes_sent": sum(l.bytes_sent for l in self.links.values()),
            "bytes_delivered": sum(l.bytes_delivered for l in self.links.values()),
        }


# --- clock offset estimation --------------------------------------------------

def calibrate_clock(exchange: tuple[int, int, int, int]) -> float:
    """Offset of the remote clock relative to the local one, from one
    request/response exchange (t0 local send, t1 remote receive, t2 remote
    send, t3 local receive): ((t1 - t0) + (t2 - t3)) / 2."""
    t0, t1, t2, t3 = exchange
    if t3 < t0 or t2 < t1:
        raise InvalidExchange(f"non-causal exchange {exchange}")
    return ((t1 - t0) + (t2 - t3)) / 2


def exchange_rtt(exchange: tuple[int, int, int, int]) -> float:
    t0, t1, t2, t3 = exchange
    return (t3 - t0) - (t2 - t1)


def best_offset(exchanges: list[tuple[int, int, int, int]]) -> float:
    """Offset from the exchange with the smallest round trip (least queueing
    noise); raises on an empty list."""
    if not exchanges:
        raise InvalidExchange("no exchanges collected")
    best = min(exchanges, key=exchange_rtt)
    return calibrate_clock(best)
