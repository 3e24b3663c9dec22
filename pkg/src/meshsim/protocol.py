"""Per-node protocol state machine.

Three selectable variants:

* ``odmrp``     - periodic per-source route-request floods and receiver
  replies electing a forwarding group; no neighborhood maintenance, no
  admission control, no consolidation.
* ``cqmp``      - odmrp plus request consolidation: a source relaying
  another source's request piggybacks its own advertisement row when its
  own emission is due within the consolidation window.
* ``proposed``  - cqmp plus Hello-based neighborhood maintenance,
  bandwidth admission control with reservation, and local route recovery.

Route entries live per (source, group) and move explored -> registered ->
reserved; a new advertisement round refreshes seq/upstream in place and
never regresses the status.  Admission compares the requested rate against
the node's own headroom and against every live neighbor's announced
headroom.  Between Hello refreshes the announced numbers can be stale, so
a node additionally books "pending" reservations it can infer: rows it
relays imply the advertising source's own outbound rate, and overheard
replies imply reservations at the forwarding nodes listed in the reply's
accumulated chain.  These inferred amounts are cleared whenever the
neighbor's next Hello arrives with authoritative numbers.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import recovery, security
from .engine import PeriodicEmit, SimTime
from .wire import (
    NO_DELAY_BOUND,
    DataPacket,
    Hello,
    Packet,
    Reply,
    ReplyEntry,
    Rreq,
    SourceRow,
)

VARIANTS = ("odmrp", "cqmp", "proposed")

# After piggybacking onto another source's request, the own emission is
# rescheduled one interval plus a random slack drawn from half the
# consolidation window.  The slack keeps merged sources spread out BEHIND
# the flood they merged into: next round that flood arrives before their
# own timers again and the whole cohort re-merges.  A fixed reschedule
# would let the cohort collapse onto one phase, after which the carrier
# flood always arrives just after their timers and no merge ever happens
# again.
CONSOLIDATION_SPREAD = 0.5

# Every emission also carries a small random jitter.  Without it two
# sources keep a constant phase difference forever; whenever that
# difference exceeds the consolidation window they can never merge.  The
# jitter random-walks the phases until they fall into a window and lock.
ROUND_JITTER = 0.3

EXPLORED = "explored"
REGISTERED = "registered"
RESERVED = "reserved"
_STATUS_RANK = {EXPLORED: 0, REGISTERED: 1, RESERVED: 2}


@dataclass(frozen=True)
class ProtocolParams:
    hello_interval: float = 3.0
    rreq_interval: float = 3.0
    time_interval: float = 1.5      # consolidation window
    t_explored: float = 3.0
    # registered entries must survive one full advertising gap, which the
    # consolidation reschedule can stretch to rreq_interval + half the
    # consolidation window, plus reply latency
    t_registered: float = 4.5
    t_reserved: float = 6.0
    fg_timeout: float = 9.0
    alpha: float = 0.8              # usable fraction of raw channel capacity
    variant: str = "proposed"

    def validate(self) -> None:
        for name in ("hello_interval", "rreq_interval", "time_interval",
                     "t_explored", "t_registered", "t_reserved", "fg_timeout", "alpha"):
            if getattr(self, name) <= 0:
                raise ValueError(f"protocol.{name} must be positive")
        if self.time_interval >= self.rreq_interval:
            raise ValueError("protocol.time_interval must be smaller than protocol.rreq_interval")
        if self.variant not in VARIANTS:
            raise ValueError(f"protocol.variant must be one of {VARIANTS}")


@dataclass
class NeighborEntry:
    neighbor: int
    b_available: float = 0.0        # last announced headroom
    consumed_rate: float = 0.0      # last announced outbound reservation total
    co_neighbor: int = 0
    last_heard: SimTime = 0.0
    neighbor_ids: FrozenSet[int] = frozenset()      # from its last relayed request
    pending: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def pending_total(self) -> float:
        return sum(self.pending.values())


@dataclass
class RouteEntry:
    source: int
    group: int
    seq: int
    upstream: int
    status: str
    status_since: SimTime
    b_req: float
    last_reply_at: SimTime = float("-inf")


@dataclass(frozen=True)
class AdmissionResult:
    admitted: bool
    reason: Optional[str] = None    # "self" or "neighbor:<id>" when rejected

ADMIT = AdmissionResult(True)


def entry_expired(entry: RouteEntry, now: SimTime, params: ProtocolParams) -> bool:
    age = now - entry.status_since
    if entry.status == EXPLORED:
        return age >= params.t_explored
    if entry.status == REGISTERED:
        return age >= params.t_registered
    return age >= params.t_reserved


class Node:
    """Protocol state and handlers for one simulated host."""

    def __init__(self, node_id: int, sim, params: ProtocolParams):
        self.id = node_id
        self.sim = sim
        self.params = params
        self.neighbors: Dict[int, NeighborEntry] = {}
        self.routes: Dict[Tuple[int, int], RouteEntry] = {}
        self.fg: Dict[int, SimTime] = {}                    # group -> flag expiry
        self.seen_rows: set = set()                         # (source, group, seq)
        self.seen_data: set = set()                         # (source, group, flow_seq)
        self.reply_forwarded: set = set()                   # (source, group, seq)
        self.routes_established: Dict[Tuple[int, int], int] = {}   # own flow -> last confirmed adv seq
        self.adv_seq = 0                                    # own advertisement round counter
        self.last_adv_at = float("-inf")
        self.next_int_at: Optional[SimTime] = None
        self._int_event = None
        self.reserved_accum = 0.0                           # sum of live entry reservations
        self.recovery = recovery.RecoveryState()
        self.security = security.SecurityState()

    # -- plumbing ------------------------------------------------------------

    def _now(self) -> SimTime:
        return self.sim.now()

    def _send(self, packet: Packet) -> None:
        self.sim.medium.broadcast(self.id, packet)

    def _live_neighbors(self, now: SimTime) -> List[NeighborEntry]:
        horizon = now - 2.0 * self.params.hello_interval
        return [e for e in self.neighbors.values() if e.last_heard >= horizon]

    def _set_status(self, entry: RouteEntry, status: str, now: SimTime) -> None:
        if _STATUS_RANK[status] < _STATUS_RANK[entry.status]:
            raise AssertionError(
                f"route status regression at node {self.id}: {entry.status} -> {status}"
            )
        if entry.status != status:
            self.sim.audit_status(self.id, entry, entry.status, status)
        entry.status = status
        entry.status_since = now

    def _drop_entry(self, key: Tuple[int, int]) -> None:
        entry = self.routes.pop(key, None)
        if entry is not None and entry.status in (REGISTERED, RESERVED):
            self.reserved_accum -= entry.b_req

    # -- bandwidth accounting --------------------------------------------------

    def consumed_rate(self, now: SimTime) -> float:
        """Own reserved outbound rate: relayed reservations plus own flows.

        In the admission variant a flow only counts while replies keep
        confirming its route; a refused flow is silent and consumes
        nothing.  The claim covers the whole advertising window, so a
        confirmed flow that has not started its data yet is already
        visible to everyone's admission checks.
        """
        own = sum(
            f.b_req for f in self.sim.flows_of(self.id)
            if f.stop_at > now
            and f.start_at <= now + self.params.rreq_interval
            and self.route_established(f.group, now)
        )
        return self.reserved_accum + own

    def available_bandwidth(self, now: SimTime) -> float:
        params = self.params
        cap = params.alpha * self.sim.capacity
        used = self.consumed_rate(now)
        for entry in self._live_neighbors(now):
            used += entry.consumed_rate + entry.pending_total()
        return max(0.0, cap - used)

    def admission_check(
        self,
        row: SourceRow,
        now: SimTime,
        chain: Tuple[int, ...] = (),
        refresh_credit: float = 0.0,
    ) -> AdmissionResult:
        """Admit iff both the node and every live neighbor can carry the row.

        `chain` lists downstream nodes known to have just reserved for this
        flow (from a reply's accumulated chain); their rates are deducted
        from the announced headroom of any neighbor adjacent to them, since
        the announcement may predate those reservations.  `refresh_credit`
        adds back this node's own existing reservation when re-admitting a
        refresh of the same flow.
        """
        if self.available_bandwidth(now) + refresh_credit < row.b_req:
            return AdmissionResult(False, "self")
        chain_set = frozenset(chain)
        for entry in self._live_neighbors(now):
            # refresh_credit also lifts the neighbor bar: an incumbent
            # reservation already weighs on every neighbor's announcement,
            # so a refresh is not new demand there either.
            headroom = entry.b_available - entry.pending_total() + refresh_credit
            if chain_set:
                nearby = chain_set & entry.neighbor_ids
                nearby -= {entry.neighbor}      # its own reservations sit in pending
                headroom -= row.b_req * len(nearby)
            if headroom < row.b_req:
                return AdmissionResult(False, f"neighbor:{entry.neighbor}")
        return ADMIT

    def _note_pending(self, neighbor_id: int, source: int, group: int, b_req: float) -> None:
        entry = self.neighbors.get(neighbor_id)
        if entry is not None:
            entry.pending[(source, group)] = b_req

    # -- neighborhood maintenance ----------------------------------------------

    def emit_hello(self) -> None:
        now = self._now()
        self._send(Hello(self.id, self.available_bandwidth(now), self.consumed_rate(now)))
        self.sim.engine.schedule(now + self.params.hello_interval, PeriodicEmit(self.id, "hello"))

    def process_hello(self, hello: Hello) -> None:
        entry = self.neighbors.get(hello.origin)
        if entry is None:
            entry = self.neighbors[hello.origin] = NeighborEntry(hello.origin)
        entry.b_available = hello.b_available
        entry.consumed_rate = hello.consumed_rate
        entry.last_heard = self._now()
        entry.pending.clear()       # announcement supersedes inferred reservations

    # -- route discovery ---------------------------------------------------------

    def _own_rows(self, now: SimTime, seq: int) -> List[SourceRow]:
        """Advertisement rows for the own active flows.

        The admission variant self-admits each flow first: a source whose
        own neighborhood cannot carry the rate does not advertise it, so
        the refused traffic never claims any capacity.
        """
        rows = []
        for flow in self.sim.flows_of(self.id):
            if not (flow.stop_at > now and flow.start_at <= now + self.params.rreq_interval):
                continue
            row = SourceRow(self.id, flow.group, seq, flow.b_req, flow.max_delay, 0)
            if self.params.variant == "proposed":
                credit = flow.b_req if self.route_established(flow.group, now) else 0.0
                if not self.admission_check(row, now, refresh_credit=credit).admitted:
                    continue
            rows.append(row)
        return rows

    def _relay_neighbor_field(self, now: SimTime) -> Tuple[Tuple[int, int], ...]:
        if self.params.variant != "proposed":
            return ()
        return tuple((e.neighbor, e.co_neighbor) for e in self._live_neighbors(now))

    def originate_rreq(self) -> None:
        now = self._now()
        if self.sim.flows_done(self.id, now):
            self.next_int_at = None
            self._int_event = None
            return
        rows = self._own_rows(now, self.adv_seq + 1)
        if rows:
            self.adv_seq += 1
            self.last_adv_at = now
            for row in rows:
                self.seen_rows.add((row.source, row.group, row.seq))
            self._send(Rreq(tuple(rows), self.id, self._relay_neighbor_field(now)))
        jitter = self.sim.rng.uniform(0.0, ROUND_JITTER)
        self._schedule_int(now + self.params.rreq_interval + jitter)

    def _schedule_int(self, at: SimTime) -> None:
        self.next_int_at = at
        self._int_event = self.sim.engine.schedule(at, PeriodicEmit(self.id, "rreq"))

    def maybe_consolidate(self, now: SimTime) -> List[SourceRow]:
        """Piggyback own advertisement rows if the own emission is nearly due.

        A merge moves the one scheduled advertisement forward; the cadence
        guard keeps a source from riding every passing flood and thereby
        advertising more often than its own interval.
        """
        if self.params.variant == "odmrp" or self.next_int_at is None:
            return []
        if self.next_int_at - now > self.params.time_interval:
            return []
        if now - self.last_adv_at < self.params.rreq_interval - ROUND_JITTER:
            return []
        if self.sim.flows_done(self.id, now):
            return []
        rows = self._own_rows(now, self.adv_seq + 1)
        if not rows:
            return []
        self.adv_seq += 1
        self.last_adv_at = now
        for row in rows:
            self.seen_rows.add((row.source, row.group, row.seq))
        self.sim.engine.cancel(self._int_event)
        slack = self.sim.rng.uniform(0.0, CONSOLIDATION_SPREAD * self.params.time_interval)
        self._schedule_int(now + self.params.rreq_interval + slack)
        return rows

    def process_rreq(self, rreq: Rreq, sender: int) -> None:
        now = self._now()
        params = self.params
        if params.variant == "proposed":
            relay_entry = self.neighbors.get(sender)
            if relay_entry is not None and rreq.relay_neighbors:
                ids = frozenset(n for n, _ in rreq.relay_neighbors)
                relay_entry.neighbor_ids = ids
                relay_entry.co_neighbor = len(ids & self.neighbors.keys())

        survivors: List[SourceRow] = []
        matched: List[SourceRow] = []
        for row in rreq.rows:
            key = (row.source, row.group, row.seq)
            if key in self.seen_rows or row.source == self.id:
                continue
            self.seen_rows.add(key)
            hops_here = row.hop_count + 1
            if params.variant == "proposed":
                self._note_pending(row.source, row.source, row.group, row.b_req)
                if row.max_delay != NO_DELAY_BOUND and hops_here * self.sim.per_hop_delay > row.max_delay:
                    continue
                held = self.routes.get((row.source, row.group))
                credit = 0.0
                if held is not None and held.status != EXPLORED and not entry_expired(held, now, params):
                    credit = held.b_req
                if not self.admission_check(row, now, refresh_credit=credit).admitted:
                    continue
            entry = self.routes.get((row.source, row.group))
            if entry is None or entry_expired(entry, now, params):
                if entry is not None:
                    self._drop_entry((row.source, row.group))
                self.routes[(row.source, row.group)] = RouteEntry(
                    row.source, row.group, row.seq, sender, EXPLORED, now, row.b_req
                )
            else:
                entry.seq = row.seq
                # Reservations keep their upstream while replies keep
                # confirming it: re-racing the path every round would move
                # the incumbent credit away from the relays holding the
                # reservation.  A vanished or silent upstream releases the
                # pin so a broken branch heals at the next round.
                stale_pin = (
                    entry.upstream not in self.neighbors
                    or now - entry.last_reply_at >= params.t_registered
                )
                if entry.status == EXPLORED or stale_pin:
                    entry.upstream = sender
                if entry.status == EXPLORED:
                    entry.b_req = row.b_req
                    entry.status_since = now      # a new round restarts the discovery window
            survivors.append(row)
            if row.source != self.id and self.id in self.sim.members(row.group):
                matched.append(row)

        if survivors:
            forwarded = [replace(row, hop_count=row.hop_count + 1) for row in survivors]
            forwarded.extend(self.maybe_consolidate(now))
            self._send(Rreq(tuple(forwarded), self.id, self._relay_neighbor_field(now)))
        if matched:
            self.build_reply(matched)

    def build_reply(self, matched: List[SourceRow]) -> None:
        by_group: Dict[int, List[ReplyEntry]] = {}
        for row in matched:
            entry = self.routes[(row.source, row.group)]
            by_group.setdefault(row.group, []).append(
                ReplyEntry(row.source, row.group, row.seq, entry.upstream)
            )
        for entries in by_group.values():
            self._send(Reply(tuple(entries), self.id, (self.id,)))

    def process_reply(self, reply: Reply, sender: int) -> None:
        now = self._now()
        params = self.params
        reservers = reply.fg_chain[1:]      # chain head is the replying receiver
        if params.variant == "proposed":
            for entry in reply.entries:
                route = self.routes.get((entry.source, entry.group))
                if route is None:
                    continue
                for member in reservers:
                    self._note_pending(member, entry.source, entry.group, route.b_req)

        outgoing: List[ReplyEntry] = []
        for entry in reply.entries:
            if entry.next_node != self.id:
                continue
            if entry.source == self.id:
                # the reply confirms the own flow; before the claim switches
                # on, double check the bandwidth like any relay would, with
                # the chain's fresh reservations deducted
                key = (entry.source, entry.group)
                if params.variant == "proposed":
                    b_req = self.sim.flow_b_req(entry.source, entry.group)
                    own_row = SourceRow(entry.source, entry.group, entry.seq, b_req)
                    credit = b_req if self.route_established(entry.group, now) else 0.0
                    verdict = self.admission_check(own_row, now, chain=reservers,
                                                   refresh_credit=credit)
                    if not verdict.admitted:
                        continue
                if entry.seq > self.routes_established.get(key, -1):
                    self.routes_established[key] = entry.seq
                continue
            key = (entry.source, entry.group)
            route = self.routes.get(key)
            if route is None or route.seq != entry.seq or entry_expired(route, now, params):
                continue        # late or unknown reply
            if params.variant == "proposed":
                row = SourceRow(entry.source, entry.group, entry.seq, route.b_req)
                credit = route.b_req if route.status in (REGISTERED, RESERVED) else 0.0
                if not self.admission_check(row, now, chain=reservers, refresh_credit=credit).admitted:
                    self._drop_entry(key)
                    continue
            if route.status == EXPLORED:
                self.reserved_accum += route.b_req
                self._set_status(route, REGISTERED, now)
            else:
                route.status_since = now
            route.last_reply_at = now
            self.fg[entry.group] = now + params.fg_timeout
            recovery.on_reply_chain(self, entry.group, entry.seq, reply.fg_chain)
            if (entry.source, entry.group, entry.seq) not in self.reply_forwarded:
                self.reply_forwarded.add((entry.source, entry.group, entry.seq))
                outgoing.append(ReplyEntry(entry.source, entry.group, entry.seq, route.upstream))

        if outgoing:
            self._send(Reply(tuple(outgoing), self.id, reply.fg_chain + (self.id,)))

    # -- data plane -----------------------------------------------------------------

    def route_established(self, group: int, now: SimTime) -> bool:
        """A reply confirmed this round's or the previous round's advert.

        Gates the source's data plane in the admission variant: traffic the
        network refused is never injected, which is what keeps saturation
        bounded.  Flood-and-pray variants transmit unconditionally.
        """
        if self.params.variant != "proposed":
            return True
        confirmed = self.routes_established.get((self.id, group))
        return confirmed is not None and confirmed >= self.adv_seq - 1

    def forward_data(self, data: DataPacket, sender: int) -> None:
        now = self._now()
        recovery.on_data_overheard(self, data, sender)
        if data.source != self.id and self.id in self.sim.members(data.group):
            self.sim.ledger.record_delivery(self.id, data, now)
        key = (data.source, data.group, data.flow_seq)
        if key in self.seen_data:
            return
        self.seen_data.add(key)
        flag = self.fg.get(data.group)
        if flag is None or flag <= now:
            return
        route = self.routes.get((data.source, data.group))
        if route is None or entry_expired(route, now, self.params) or route.status == EXPLORED:
            route = recovery.patched_entry(self, data, sender, now)
            if route is None:
                return
        if recovery.buffer_if_recovering(self, data):
            return
        self._send(data)
        if route.status == REGISTERED:
            self._set_status(route, RESERVED, now)
        else:
            route.status_since = now        # data keep-alive for the reservation
        recovery.watch_forwarding(self, data)

    # -- timers ------------------------------------------------------------------------

    def sweep_timers(self, now: SimTime) -> None:
        horizon = now - 2.0 * self.params.hello_interval
        for nid in [n for n, e in self.neighbors.items() if e.last_heard < horizon]:
            del self.neighbors[nid]
        for key in [k for k, e in self.routes.items() if entry_expired(e, now, self.params)]:
            self._drop_entry(key)
        for group in [g for g, expires in self.fg.items() if expires <= now]:
            del self.fg[group]
        recovery.sweep(self, now)

    # -- dispatch ---------------------------------------------------------------------

    def on_packet(self, packet: Packet, sender: int) -> None:
        if isinstance(packet, DataPacket):
            self.forward_data(packet, sender)
        elif isinstance(packet, Rreq):
            self.process_rreq(packet, sender)
        elif isinstance(packet, Reply):
            self.process_reply(packet, sender)
        elif isinstance(packet, Hello):
            if self.params.variant == "proposed":
                self.process_hello(packet)
        else:
            self.sim.dispatch_special(self, packet, sender)
