"""Deterministic discrete-event scheduler.

Events are processed in strict (fire_at, seq) order, where seq is a
monotone counter assigned at scheduling time.  Ties at equal timestamps
therefore resolve FIFO by scheduling order, which keeps runs bit-identical
regardless of heap internals.  Timestamps are plain floats and are never
compared with a tolerance.
"""

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional

SimTime = float


class SchedulingError(Exception):
    """Raised when an event is scheduled in the past (contract violation)."""


# Event payloads.  The run loop dispatches on payload type; payloads are
# immutable once scheduled.

@dataclass(frozen=True)
class PacketDelivery:
    node: int
    packet: Any
    sender: int = -1
    tx: Any = None          # medium transmission record, used for collision checks


@dataclass(frozen=True)
class TimerExpiry:
    node: int
    timer_id: tuple


@dataclass(frozen=True)
class TrafficTick:
    flow_id: int


@dataclass(frozen=True)
class MobilityWaypoint:
    node: int


@dataclass(frozen=True)
class PeriodicEmit:
    node: int
    kind: str               # "hello" | "rreq"


@dataclass(order=True)
class Event:
    fire_at: SimTime
    seq: int
    payload: Any = field(compare=False)
    cancelled: bool = field(default=False, compare=False)


class Engine:
    """Event queue plus clock.  `handler(event)` is called for each event."""

    def __init__(self, handler: Optional[Callable[[Event], None]] = None):
        self.now: SimTime = 0.0
        self.handler = handler
        self._queue: List[Event] = []
        self._next_seq = 0

    def schedule(self, fire_at: SimTime, payload: Any) -> Event:
        if fire_at < self.now:
            raise SchedulingError(
                f"event scheduled at t={fire_at!r} before current time t={self.now!r}: {payload!r}"
            )
        ev = Event(fire_at, self._next_seq, payload)
        self._next_seq += 1
        heapq.heappush(self._queue, ev)
        return ev

    def cancel(self, ev: Event) -> bool:
        """Cancel a pending event; returns False if it already fired or was cancelled."""
        if ev.cancelled or ev.fire_at < self.now or ev.seq < 0:
            return False
        ev.cancelled = True
        return True

    def run_until(self, t_end: SimTime) -> int:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end!r}) before current time t={self.now!r}")
        processed = 0
        while self._queue and self._queue[0].fire_at <= t_end:
            ev = heapq.heappop(self._queue)
            if ev.cancelled:
                continue
            self.now = ev.fire_at
            ev.seq = -1          # marks the event as fired for cancel()
            if self.handler is not None:
                self.handler(ev)
            processed += 1
        self.now = t_end
        return processed

    def pending(self) -> int:
        return sum(1 for ev in self._queue if not ev.cancelled)
