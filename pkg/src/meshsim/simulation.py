"""One full simulation run: node construction, event dispatch, traffic.

Determinism: a single RNG seeded from the scenario drives every stochastic
decision.  Fixed draw order at setup: (1) generated flow sources, (2) per
node in id order its initial position then first waypoint and speed,
(3) per source in ascending id the request jitter, (4) per node in id
order the hello jitter (proposed variant only).  Runtime draws (waypoints
on arrival, csma backoff) happen in event-processing order, which is
itself deterministic.
"""

import random
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import mobility, recovery, security
from .engine import (
    Engine,
    Event,
    MobilityWaypoint,
    PacketDelivery,
    PeriodicEmit,
    SimTime,
    TimerExpiry,
    TrafficTick,
)
from .medium import Medium, RadioParams, airtime
from .metrics import MetricsLedger
from .protocol import Node
from .scenario import FlowSpec, Scenario
from .wire import (
    DataPacket,
    JoinReply,
    JoinReq,
    Packet,
    RecoveryReply,
    RecoveryReq,
    trace_line,
)

SWEEP_PERIOD = 1.0
HELLO_JITTER = 0.1
JOIN_START = 0.2
JOIN_STAGGER = 0.1
GROUP_ID_BASE = 1000


def resolve_traffic(
    scenario: Scenario, rng: random.Random
) -> Tuple[Tuple[FlowSpec, ...], Dict[int, FrozenSet[int]], List[int]]:
    """Explicit flow table, or the generated one: each drawn source owns a
    group whose receivers are all the other sources."""
    if scenario.flows is not None:
        members = {g: frozenset(m) for g, m in scenario.receivers.items()}
        for flow in scenario.flows:
            members.setdefault(flow.group, frozenset())
        sources = sorted({f.source for f in scenario.flows})
        return scenario.flows, members, sources

    sources = sorted(rng.sample(range(scenario.nodes), scenario.sources))
    flows = []
    members = {}
    stop = scenario.default_stop()
    for i, src in enumerate(sources):
        group = GROUP_ID_BASE + i
        flows.append(FlowSpec(src, group, scenario.rate, scenario.default_b_req(),
                              start_at=min(0.5, stop / 2), stop_at=stop))
        members[group] = frozenset(s for s in sources if s != src)
    return tuple(flows), members, sources


class Simulation:
    def __init__(self, scenario: Scenario, trace: bool = False):
        scenario.validate()
        self.scenario = scenario
        self.rng = random.Random(scenario.seed)
        self.engine = Engine(self._handle)
        self.ledger = MetricsLedger()
        self.params = scenario.protocol_params()
        self.capacity = scenario.capacity
        self.recovery_cfg = scenario.recovery
        self.security_cfg = scenario.security
        self.node_ids = list(range(scenario.nodes))
        self.trace_lines: Optional[List[str]] = [] if trace else None
        self.event_audit = None
        self.status_events: List[tuple] = []

        radio = RadioParams(range=scenario.range, capacity=scenario.capacity)
        self.medium = Medium(self, radio, scenario.channel_model)
        nominal = DataPacket(0, 0, 0, scenario.payload, 0.0)
        self.per_hop_delay = airtime(nominal, radio) + 1e-3

        self.flows, self._members, self.source_ids = resolve_traffic(scenario, self.rng)
        self._flows_by_source: Dict[int, Tuple[FlowSpec, ...]] = {}
        self._flow_b_req: Dict[Tuple[int, int], float] = {}
        for flow in self.flows:
            self._flows_by_source.setdefault(flow.source, ())
            self._flows_by_source[flow.source] += (flow,)
            self._flow_b_req[(flow.source, flow.group)] = flow.b_req
            self.ledger.flow_receivers[(flow.source, flow.group)] = len(
                self._members.get(flow.group, ()) - {flow.source}
            )
        self._flow_seq = [0] * len(self.flows)

        self.mobile = scenario.positions is None
        self.motion: List[mobility.MotionState] = []
        for node in self.node_ids:
            if self.mobile:
                px = self.rng.uniform(0.0, scenario.area[0])
                py = self.rng.uniform(0.0, scenario.area[1])
                state = mobility.pick_waypoint(self.rng, scenario.area, scenario.speed,
                                               (px, py), 0.0)
            else:
                state = mobility.static_state(scenario.positions[node])
            self.motion.append(state)

        self.nodes = [Node(i, self, self.params) for i in self.node_ids]

        # setup events
        for move in scenario.moves:
            self.engine.schedule(move.at, TimerExpiry(move.node, ("move",) + move.to))
        if self.mobile:
            for node in self.node_ids:
                self.engine.schedule(self.motion[node].arrival_at(), MobilityWaypoint(node))
        for i, flow in enumerate(self.flows):
            if flow.start_at < flow.stop_at:
                self.engine.schedule(flow.start_at, TrafficTick(i))
        # Initial advertisement phases are spread over one full interval so
        # that request consolidation has staggered timers to latch onto.
        for src in self.source_ids:
            jitter = self.rng.uniform(0.0, self.params.rreq_interval)
            self.nodes[src]._schedule_int(jitter)
        if self.params.variant == "proposed":
            for node in self.node_ids:
                jitter = self.rng.uniform(0.0, HELLO_JITTER)
                self.engine.schedule(jitter, PeriodicEmit(node, "hello"))
        for node in self.node_ids:
            self.engine.schedule(SWEEP_PERIOD, TimerExpiry(node, ("sweep",)))
        if self.security_cfg.enabled:
            for i, snode in enumerate(self.security_cfg.snodes):
                self.engine.schedule(JOIN_START + i * JOIN_STAGGER, TimerExpiry(snode, ("join",)))

    # -- services used by nodes and the medium --------------------------------

    def now(self) -> SimTime:
        return self.engine.now

    def position(self, node: int, t: SimTime) -> Tuple[float, float]:
        return mobility.position_at(self.motion[node], t)

    def members(self, group: int) -> FrozenSet[int]:
        return self._members.get(group, frozenset())

    def flows_of(self, node: int) -> Tuple[FlowSpec, ...]:
        return self._flows_by_source.get(node, ())

    def flows_done(self, node: int, now: SimTime) -> bool:
        flows = self._flows_by_source.get(node, ())
        return all(f.stop_at <= now for f in flows) if flows else True

    def flow_b_req(self, source: int, group: int) -> float:
        return self._flow_b_req.get((source, group), 0.0)

    def audit_status(self, node_id: int, entry, old: str, new: str) -> None:
        self.status_events.append((node_id, (entry.source, entry.group), old, new))

    def trace(self, t: SimTime, node: int, direction: str, packet: Packet, note: str = "") -> None:
        if self.trace_lines is not None:
            self.trace_lines.append(trace_line(t, node, direction, packet, note))

    def dispatch_special(self, node: Node, packet: Packet, sender: int) -> None:
        if isinstance(packet, RecoveryReq):
            recovery.process_recovery_req(node, packet, sender)
        elif isinstance(packet, RecoveryReply):
            recovery.process_recovery_reply(node, packet, sender)
        elif isinstance(packet, JoinReq):
            security.process_join_req(node, packet, sender)
        elif isinstance(packet, JoinReply):
            security.process_join_reply(node, packet, sender)

    def inject_delivery(self, node: int, packet: Packet, at: SimTime, sender: int = -1) -> None:
        """Hand-deliver a crafted packet (testing hook, bypasses the radio)."""
        self.engine.schedule(at, PacketDelivery(node, packet, sender, None))

    # -- event dispatch ---------------------------------------------------------

    def _handle(self, ev: Event) -> None:
        payload = ev.payload
        kind = type(payload)
        if kind is PacketDelivery:
            self._deliver(payload)
        elif kind is TimerExpiry:
            self._timer(payload)
        elif kind is TrafficTick:
            self._traffic(payload.flow_id)
        elif kind is PeriodicEmit:
            node = self.nodes[payload.node]
            if payload.kind == "hello":
                node.emit_hello()
            else:
                node.originate_rreq()
        elif kind is MobilityWaypoint:
            self._waypoint(payload.node)
        if self.event_audit is not None:
            self.event_audit(self, ev)

    def _deliver(self, payload: PacketDelivery) -> None:
        node = self.nodes[payload.node]
        if payload.tx is not None and not self.medium.frame_survives(payload.node, payload.tx):
            self.ledger.collision_drops += 1
            self.trace(self.now(), payload.node, "drop", payload.packet, "collision")
            return
        self.trace(self.now(), payload.node, "rx", payload.packet)
        node.on_packet(payload.packet, payload.sender)

    def _timer(self, payload: TimerExpiry) -> None:
        timer = payload.timer_id
        node = self.nodes[payload.node]
        kind = timer[0]
        if kind == "tx_end":
            self.medium.on_tx_end(payload.node)
        elif kind == "tx_retry":
            self.medium.on_tx_retry(payload.node)
        elif kind == "sweep":
            node.sweep_timers(self.now())
            self.engine.schedule(self.now() + SWEEP_PERIOD, TimerExpiry(payload.node, ("sweep",)))
        elif kind == "watch":
            recovery.on_watch_expired(node, timer[1:])
        elif kind == "recov_deadline":
            recovery.on_reply_deadline(node, timer[1], timer[2])
        elif kind == "move":
            self.motion[payload.node] = mobility.static_state((timer[1], timer[2]))
        elif kind == "join":
            security.snode_join(node)

    def _traffic(self, flow_id: int) -> None:
        flow = self.flows[flow_id]
        now = self.now()
        if now >= flow.stop_at:
            return
        source = self.nodes[flow.source]
        if source.route_established(flow.group, now):
            seq = self._flow_seq[flow_id]
            self._flow_seq[flow_id] += 1
            packet = DataPacket(flow.source, flow.group, seq, self.scenario.payload, now)
            self.ledger.record_sent(flow.source, flow.group)
            source.seen_data.add((flow.source, flow.group, seq))
            self.medium.broadcast(flow.source, packet)
        next_at = now + 1.0 / flow.rate
        if next_at < flow.stop_at:
            self.engine.schedule(next_at, TrafficTick(flow_id))

    def _waypoint(self, node: int) -> None:
        state = self.motion[node]
        if abs(state.arrival_at() - self.now()) > 1e-9:
            return      # stale arrival event (state was replaced by a scripted move)
        new_state = mobility.on_arrival(state, self.scenario.pause, self.rng,
                                        self.scenario.area, self.scenario.speed)
        self.motion[node] = new_state
        self.engine.schedule(new_state.arrival_at(), MobilityWaypoint(node))

    # -- run ------------------------------------------------------------------------

    def run(self) -> MetricsLedger:
        self.engine.run_until(self.scenario.duration)
        if self.security_cfg.enabled:
            t = self.scenario.duration
            adjacency = {n: set(self.medium.neighbors_of(n, t)) for n in self.node_ids}
            attrs = {n: self.nodes[n].security.forwarding_attr for n in self.node_ids}
            self.ledger.mesh_formed = security.mesh_formed(
                adjacency, self.security_cfg.snodes, attrs, self.security_cfg.join_ttl
            )
        return self.ledger
