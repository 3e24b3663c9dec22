"""Unit-disk radio with a simplified shared-medium contention model.

Two channel models:

* ``ideal``  - every in-range node receives every frame; only the
  per-sender transmit queue (one airborne frame at a time) is modeled.
* ``csma``   - a node defers transmission while any in-range node is
  airborne (perfect carrier sense, random re-attempt backoff); frames that
  overlap at a common receiver destroy each other there (hidden-terminal
  loss).  No RTS/CTS, no retransmissions, no capture effect.

Receivers are fixed at transmission start time; propagation delay is zero
by default, so a frame arrives exactly one airtime after it starts.
"""

from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Tuple

from .engine import PacketDelivery, SimTime, TimerExpiry
from .wire import DataPacket, Packet, serialized_size

TX_QUEUE_CAPACITY = 64
CSMA_BACKOFF_MAX = 1e-3     # seconds, uniform re-attempt jitter after a busy channel


@dataclass(frozen=True)
class RadioParams:
    range: float = 250.0            # meters
    capacity: float = 2e6           # bits/second
    header_overhead: int = 384      # bits added to every data frame (48-byte header)
    prop_delay: float = 0.0         # seconds


def airtime(packet: Packet, params: RadioParams) -> float:
    """Seconds on air: (payload bits + header overhead) / capacity.

    Control packets are sized purely by their serialized field layout; the
    header allowance applies to data frames and is already reflected in
    their serialized size when left at the default.
    """
    if isinstance(packet, DataPacket):
        bits = packet.payload_bytes * 8 + params.header_overhead
    else:
        bits = serialized_size(packet)
    return bits / params.capacity


@dataclass
class Transmission:
    sender: int
    packet: Packet
    start: SimTime
    end: SimTime
    receivers: Tuple[int, ...]

    def overlaps(self, start: SimTime, end: SimTime) -> bool:
        return self.start < end and start < self.end


class Medium:
    """Per-node transmit queues plus the shared channel.

    `sim` supplies the engine, the run RNG, position lookup, the metrics
    ledger and the trace hook.
    """

    def __init__(self, sim, params: RadioParams, channel_model: str):
        if channel_model not in ("ideal", "csma"):
            raise ValueError(f"unknown channel_model: {channel_model!r}")
        self.sim = sim
        self.params = params
        self.channel_model = channel_model
        self.queues: Dict[int, Deque[Packet]] = {}
        self.active: Dict[int, Transmission] = {}       # sender -> airborne frame
        self.retry_pending: Dict[int, bool] = {}
        self.audible: Dict[int, Deque[Transmission]] = {}
        self._max_airtime = 0.0

    def _queue(self, node: int) -> Deque[Packet]:
        q = self.queues.get(node)
        if q is None:
            q = self.queues[node] = deque()
        return q

    def neighbors_of(self, node: int, t: SimTime) -> List[int]:
        """All other nodes within range (boundary inclusive), ascending id."""
        px, py = self.sim.position(node, t)
        rng2 = self.params.range * self.params.range
        out = []
        for other in self.sim.node_ids:
            if other == node:
                continue
            ox, oy = self.sim.position(other, t)
            dx, dy = px - ox, py - oy
            if dx * dx + dy * dy <= rng2:
                out.append(other)
        return out

    def broadcast(self, sender: int, packet: Packet) -> None:
        """Enqueue a frame; drops it (mac-drop) if the transmit queue is full."""
        q = self._queue(sender)
        if len(q) >= TX_QUEUE_CAPACITY:
            self.sim.ledger.mac_drops += 1
            self.sim.trace(self.sim.now(), sender, "drop", packet, "queue_full")
            return
        q.append(packet)
        if sender not in self.active and not self.retry_pending.get(sender):
            self._attempt(sender)

    def _attempt(self, sender: int) -> None:
        """Head-of-queue frame: transmit now (ideal) or after a contention backoff (csma)."""
        if self.channel_model == "csma":
            self._defer(sender, self.sim.now())
        else:
            self._try_start(sender)

    def _defer(self, sender: int, not_before: SimTime) -> None:
        self.retry_pending[sender] = True
        retry_at = not_before + self.sim.rng.uniform(0.0, CSMA_BACKOFF_MAX)
        self.sim.engine.schedule(retry_at, TimerExpiry(sender, ("tx_retry",)))

    def _channel_busy_until(self, node: int, t: SimTime) -> float:
        """Latest end among airborne frames from in-range senders, or 0.0 if idle."""
        busy = 0.0
        px, py = self.sim.position(node, t)
        rng2 = self.params.range * self.params.range
        for sender, tx in self.active.items():
            ox, oy = self.sim.position(sender, t)
            dx, dy = px - ox, py - oy
            if dx * dx + dy * dy <= rng2 and tx.end > busy:
                busy = tx.end
        return busy

    def _try_start(self, sender: int) -> None:
        q = self._queue(sender)
        if not q or sender in self.active:
            return
        t = self.sim.now()
        if self.channel_model == "csma":
            busy_until = self._channel_busy_until(sender, t)
            if busy_until > t:
                self._defer(sender, busy_until)
                return
        packet = q.popleft()
        dur = airtime(packet, self.params)
        if dur > self._max_airtime:
            self._max_airtime = dur
        end = t + dur
        receivers = tuple(self.neighbors_of(sender, t))
        tx = Transmission(sender, packet, t, end, receivers)
        self.active[sender] = tx
        self.sim.ledger.count_tx(packet, sender)
        self.sim.trace(t, sender, "tx", packet)
        if self.channel_model == "csma":
            for r in receivers:
                log = self.audible.get(r)
                if log is None:
                    log = self.audible[r] = deque()
                log.append(tx)
        arrive = end + self.params.prop_delay
        for r in receivers:
            self.sim.engine.schedule(arrive, PacketDelivery(r, packet, sender, tx))
        self.sim.engine.schedule(end, TimerExpiry(sender, ("tx_end",)))

    def on_tx_end(self, sender: int) -> None:
        self.active.pop(sender, None)
        if self._queue(sender) and not self.retry_pending.get(sender):
            self._attempt(sender)

    def on_tx_retry(self, sender: int) -> None:
        self.retry_pending[sender] = False
        self._try_start(sender)

    def frame_survives(self, receiver: int, tx: Transmission) -> bool:
        """Under csma, a frame overlapped by any other audible frame is destroyed."""
        if self.channel_model != "csma":
            return True
        log = self.audible.get(receiver)
        if not log:
            return True
        horizon = tx.start - self._max_airtime - 1e-9
        while log and log[0].end < horizon:
            log.popleft()
        for other in log:
            if other is not tx and other.overlaps(tx.start, tx.end):
                return False
        return True
