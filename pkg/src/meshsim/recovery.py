"""Local route recovery for forwarding-group nodes.

A forwarding node learns the downstream members between itself and the
receiver from the address chain accumulated in reply packets.  After
rebroadcasting a data packet it waits up to ``detect_timeout`` (1 s) to
overhear the same packet from any chain member; silence means the route
broke.  The node then buffers traffic for the group, queries its 2-hop
neighborhood for any chain member, and patches the route through whoever
answers within ``reply_timeout`` (0.1 s).  If nobody answers the buffer is
discarded and the flow falls back to the next discovery round.

Only the ``proposed`` variant runs recovery, and never for a source's own
first hop.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Optional, Set, Tuple

from .engine import TimerExpiry
from .wire import DataPacket, RecoveryReply, RecoveryReq


@dataclass(frozen=True)
class RecoveryConfig:
    enabled: bool = True
    detect_timeout: float = 1.0
    reply_timeout: float = 0.1
    ttl_hops: int = 2
    buffer_capacity: int = 32


@dataclass
class ChainInfo:
    """Downstream addresses for one group, accumulated from replies.

    `chain` keeps the accumulation order (reply origin first); `forwarders`
    is the subset that relayed a reply, i.e. the nodes that may rebroadcast
    data.  Reply origins that never forward (plain receivers) are valid
    recovery candidates but must not be waited on.  `last_echo_at` is the
    last time one of the forwarders was overheard rebroadcasting this
    group's data; a silence watch is only meaningful while that is recent,
    otherwise this node's branch of the mesh is simply not the one carrying
    the traffic (redundant branches are suppressed by duplicate filtering).
    """
    refreshed_at: float
    chain: Tuple[int, ...]
    forwarders: Set[int] = field(default_factory=set)
    last_echo_at: float = float("-inf")


@dataclass
class RecoveryState:
    chains: Dict[int, ChainInfo] = field(default_factory=dict)
    watches: Dict[Tuple[int, int, int], tuple] = field(default_factory=dict)        # (src, grp, seq) -> (event, packet)
    buffers: Dict[int, Deque[DataPacket]] = field(default_factory=dict)             # presence = recovering
    deadlines: Dict[int, tuple] = field(default_factory=dict)                       # group -> (instance, event)
    patch_grace: Dict[int, float] = field(default_factory=dict)
    cooldown: Set[int] = field(default_factory=set)     # groups with a failed recovery, until next reply
    seen_reqs: Set[Tuple[int, int, int]] = field(default_factory=set)
    seen_replies: Set[tuple] = field(default_factory=set)
    # packets already heard from a chain member; a watch for them would be a
    # false alarm (mesh redundancy often makes the downstream hop forward a
    # packet before this node does).  Two generations, rotated by the sweep.
    echoed: Set[Tuple[int, int, int]] = field(default_factory=set)
    echoed_prev: Set[Tuple[int, int, int]] = field(default_factory=set)
    instance: int = 0

    def was_echoed(self, key: Tuple[int, int, int]) -> bool:
        return key in self.echoed or key in self.echoed_prev


def _active(node) -> bool:
    return node.sim.recovery_cfg.enabled and node.params.variant == "proposed"


def downstream_chain(node, group: int) -> Tuple[int, ...]:
    info = node.recovery.chains.get(group)
    return info.chain if info else ()


def downstream_forwarders(node, group: int) -> Set[int]:
    info = node.recovery.chains.get(group)
    return info.forwarders if info else set()


def on_reply_chain(node, group: int, seq: int, fg_chain: Tuple[int, ...]) -> None:
    """Merge the downstream members listed in a processed reply.

    Addresses accumulate across rounds and mesh branches; the whole record
    expires only when no reply refreshes it for a forwarding-flag lifetime.
    """
    if not _active(node):
        return
    st = node.recovery
    st.cooldown.discard(group)
    now = node.sim.now()
    info = st.chains.get(group)
    if info is None:
        info = st.chains[group] = ChainInfo(now, fg_chain)
    else:
        info.refreshed_at = now
        merged = list(info.chain)
        merged.extend(n for n in fg_chain if n not in info.chain)
        info.chain = tuple(merged)
    info.forwarders.update(fg_chain[1:])


def watch_forwarding(node, data: DataPacket) -> None:
    if not _active(node) or data.source == node.id:
        return
    st = node.recovery
    if data.group in st.buffers or data.group in st.cooldown:
        return
    info = st.chains.get(data.group)
    if info is None or not info.forwarders:
        return      # last hop before plain receivers: nothing will rebroadcast
    now = node.sim.now()
    detect = node.sim.recovery_cfg.detect_timeout
    if now - info.refreshed_at > 2.0 * node.params.rreq_interval:
        return      # fell off the reply mesh; chain knowledge is too stale to trust
    if now - info.last_echo_at > 2.0 * detect:
        return      # downstream is not echoing this node's branch at all
    key = (data.source, data.group, data.flow_seq)
    if key in st.watches or st.was_echoed(key):
        return
    ev = node.sim.engine.schedule(now + detect, TimerExpiry(node.id, ("watch",) + key))
    st.watches[key] = (ev, data)


def on_data_overheard(node, data: DataPacket, sender: int) -> None:
    """A downstream echo proves the route carries this flow.

    It clears the watch for the echoed packet and for every earlier packet
    of the same flow: an individual copy may be lost to a collision, but a
    later sequence number flowing through the downstream means the route
    is not broken.
    """
    if not _active(node):
        return
    st = node.recovery
    info = st.chains.get(data.group)
    if info is None or sender not in info.forwarders:
        return
    info.last_echo_at = node.sim.now()
    st.echoed.add((data.source, data.group, data.flow_seq))
    stale = [
        k for k in st.watches
        if k[0] == data.source and k[1] == data.group and k[2] <= data.flow_seq
    ]
    for key in stale:
        ev, _ = st.watches.pop(key)
        node.sim.engine.cancel(ev)


def on_watch_expired(node, key: Tuple[int, int, int]) -> None:
    st = node.recovery
    watch = st.watches.pop(key, None)
    if watch is None:
        return
    group = key[1]
    if group in st.buffers:
        _buffer_push(node, group, watch[1])
        return
    initiate_recovery(node, group, first=watch[1])


def initiate_recovery(node, group: int, first: Optional[DataPacket] = None) -> None:
    """Break detected: buffer unconfirmed traffic and query the 2-hop neighborhood."""
    st = node.recovery
    candidates = downstream_chain(node, group)
    if not candidates:
        return
    cfg = node.sim.recovery_cfg
    now = node.sim.now()
    st.instance += 1
    node.sim.ledger.recovery_events += 1
    st.buffers[group] = deque()
    if first is not None:
        _buffer_push(node, group, first)
    for key in [k for k in st.watches if k[1] == group]:
        ev, pkt = st.watches.pop(key)
        node.sim.engine.cancel(ev)
        _buffer_push(node, group, pkt)
    req = RecoveryReq(node.id, group, cfg.ttl_hops, candidates, st.instance, -1)
    st.seen_reqs.add((node.id, group, st.instance))
    node._send(req)
    ev = node.sim.engine.schedule(
        now + cfg.reply_timeout, TimerExpiry(node.id, ("recov_deadline", group, st.instance))
    )
    st.deadlines[group] = (st.instance, ev)


def _buffer_push(node, group: int, data: DataPacket) -> None:
    buf = node.recovery.buffers[group]
    if len(buf) >= node.sim.recovery_cfg.buffer_capacity:
        buf.popleft()
        node.sim.ledger.buffer_drops += 1
    buf.append(data)


def buffer_if_recovering(node, data: DataPacket) -> bool:
    if not _active(node):
        return False
    if data.group not in node.recovery.buffers:
        return False
    _buffer_push(node, data.group, data)
    return True


def process_recovery_req(node, req: RecoveryReq, sender: int) -> None:
    if not _active(node):
        return
    st = node.recovery
    key = (req.origin, req.group, req.instance)
    if key in st.seen_reqs:
        return
    st.seen_reqs.add(key)
    if node.id in req.candidates and node.id != req.origin:
        path_back = (req.via, node.id) if req.via >= 0 else (node.id,)
        node._send(RecoveryReply(node.id, req.group, path_back))
    elif req.ttl_hops > 1:
        node._send(RecoveryReq(req.origin, req.group, req.ttl_hops - 1,
                               req.candidates, req.instance, node.id))


def process_recovery_reply(node, rep: RecoveryReply, sender: int) -> None:
    if not _active(node):
        return
    st = node.recovery
    if rep.group in st.buffers:
        complete_recovery(node, rep)
        return
    if rep.path_back and rep.path_back[0] == node.id and node.id != rep.responder:
        key = (rep.responder, rep.group, rep.path_back)
        if key in st.seen_replies:
            return
        st.seen_replies.add(key)
        now = node.sim.now()
        node.fg[rep.group] = now + node.params.fg_timeout
        st.patch_grace[rep.group] = now + node.params.t_registered
        # packets overheard while not a forwarder must not be filtered as
        # duplicates now: the flushed buffer travels through this node
        node.seen_data = {k for k in node.seen_data if k[1] != rep.group}
        node._send(rep)


def complete_recovery(node, rep: RecoveryReply) -> None:
    """Patch accepted: adopt the answering nodes into the chain and drain the buffer."""
    from .protocol import REGISTERED, RESERVED, entry_expired

    st = node.recovery
    group = rep.group
    pending = st.deadlines.pop(group, None)
    if pending is not None:
        node.sim.engine.cancel(pending[1])
    buf = st.buffers.pop(group, deque())
    st.cooldown.add(group)      # one recovery per group per reply refresh
    info = st.chains.get(group)
    if info is not None:
        merged = list(info.chain)
        merged.extend(n for n in rep.path_back if n not in merged)
        info.chain = tuple(merged)
        info.forwarders.update(rep.path_back[:-1])      # patched relays will rebroadcast
    now = node.sim.now()
    # Flushed packets are not re-watched: peers that already saw them will
    # suppress them as duplicates, so no echo can be expected.  Watching
    # resumes with the next fresh packet.
    for pkt in buf:
        route = node.routes.get((pkt.source, pkt.group))
        if route is not None and not entry_expired(route, now, node.params):
            if route.status == REGISTERED:
                node._set_status(route, RESERVED, now)
            else:
                route.status_since = now
        node._send(pkt)


def on_reply_deadline(node, group: int, instance: int) -> None:
    st = node.recovery
    pending = st.deadlines.get(group)
    if pending is None or pending[0] != instance:
        return
    del st.deadlines[group]
    buf = st.buffers.pop(group, None)
    if buf:
        node.sim.ledger.buffer_drops += len(buf)
    st.cooldown.add(group)      # stop re-detecting until the next reply refresh


def patched_entry(node, data: DataPacket, sender: int, now: float):
    """Lazily materialize the registered entry a patched relay was granted."""
    from .protocol import EXPLORED, REGISTERED, RouteEntry, entry_expired

    if not _active(node):
        return None
    if node.recovery.patch_grace.get(data.group, 0.0) <= now:
        return None
    key = (data.source, data.group)
    b_req = node.sim.flow_b_req(data.source, data.group)
    existing = node.routes.get(key)
    if existing is not None:
        if existing.status == EXPLORED and not entry_expired(existing, now, node.params):
            node.reserved_accum += existing.b_req
            node._set_status(existing, REGISTERED, now)
            return existing
        node._drop_entry(key)
    entry = RouteEntry(data.source, data.group, 0, sender, REGISTERED, now, b_req)
    node.routes[key] = entry
    node.reserved_accum += b_req
    return entry


def sweep(node, now: float) -> None:
    st = node.recovery
    for group in [g for g, until in st.patch_grace.items() if until <= now]:
        del st.patch_grace[group]
    horizon = now - node.params.fg_timeout
    for group in [g for g, info in st.chains.items() if info.refreshed_at < horizon]:
        del st.chains[group]
        for key in [k for k in st.watches if k[1] == group]:
            ev, _ = st.watches.pop(key)
            node.sim.engine.cancel(ev)
    st.echoed_prev = st.echoed
    st.echoed = set()
