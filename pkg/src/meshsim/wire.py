"""Packet model for every message the protocols exchange.

There is no byte-level encoding; packets are plain value objects with a
documented size model so that airtime and control-overhead accounting are
deterministic.  Field widths: node/group ids, rates, times, counters and
ttls are 32 bits; every list carries a 16-bit length prefix; each packet
starts with an 8-bit kind tag.  Data frames are sized as payload plus a
fixed 48-byte header that stands in for addressing plus MAC framing.

Trace format (one line per packet event, enabled with --trace):

    <time.9f> <node> <dir> <kind> <key>=<value> ...

where dir is tx, rx or drop.  Key fields per kind are emitted in the fixed
order produced by `describe`.
"""

from dataclasses import dataclass
from typing import Tuple, Union

ID_BITS = 32
RATE_BITS = 32
TIME_BITS = 32
COUNT_BITS = 32
LIST_PREFIX_BITS = 16
KIND_TAG_BITS = 8
AUTH_BITS = 64
DATA_HEADER_BYTES = 48

# max_delay sentinel meaning "no delay bound requested"
NO_DELAY_BOUND = float("inf")


@dataclass(frozen=True)
class Hello:
    origin: int
    b_available: float          # bits/second
    consumed_rate: float        # originator's reserved outbound rate, bits/second


@dataclass(frozen=True)
class SourceRow:
    source: int
    group: int
    seq: int
    b_req: float                # bits/second
    max_delay: float = NO_DELAY_BOUND
    hop_count: int = 0


@dataclass(frozen=True)
class Rreq:
    rows: Tuple[SourceRow, ...]
    relay: int                                      # last transmitter
    relay_neighbors: Tuple[Tuple[int, int], ...]    # (node, co_neighbor_count)


@dataclass(frozen=True)
class ReplyEntry:
    source: int
    group: int
    seq: int
    next_node: int


@dataclass(frozen=True)
class Reply:
    entries: Tuple[ReplyEntry, ...]
    origin: int
    fg_chain: Tuple[int, ...]   # downstream nodes accumulated en route, receiver first


@dataclass(frozen=True)
class DataPacket:
    source: int
    group: int
    flow_seq: int
    payload_bytes: int
    sent_at: float


@dataclass(frozen=True)
class RecoveryReq:
    origin: int
    group: int
    ttl_hops: int
    candidates: Tuple[int, ...]
    instance: int = 0           # per-origin detection counter, dedup key
    via: int = -1               # relay traversed so far (-1: heard directly)


@dataclass(frozen=True)
class RecoveryReply:
    responder: int
    group: int
    path_back: Tuple[int, ...]  # nodes the reply traverses, ending at the responder


@dataclass(frozen=True)
class JoinReq:
    origin_snode: int
    ttl: int
    auth: int                   # keyed-hash token over (origin, nonce)
    reverse_path_hint: int      # previous hop
    nonce: int


@dataclass(frozen=True)
class JoinReply:
    from_snode: int
    to_snode: int
    via: int


Packet = Union[Hello, Rreq, Reply, DataPacket, RecoveryReq, RecoveryReply, JoinReq, JoinReply]

_ROW_BITS = ID_BITS * 2 + COUNT_BITS + RATE_BITS + TIME_BITS + COUNT_BITS
_REPLY_ENTRY_BITS = ID_BITS * 3 + COUNT_BITS


def serialized_size(packet: Packet) -> int:
    """Frame size in bits under the documented field layout."""
    if isinstance(packet, Hello):
        return KIND_TAG_BITS + ID_BITS + RATE_BITS * 2
    if isinstance(packet, Rreq):
        return (
            KIND_TAG_BITS
            + ID_BITS
            + LIST_PREFIX_BITS + _ROW_BITS * len(packet.rows)
            + LIST_PREFIX_BITS + (ID_BITS + COUNT_BITS) * len(packet.relay_neighbors)
        )
    if isinstance(packet, Reply):
        return (
            KIND_TAG_BITS
            + ID_BITS
            + LIST_PREFIX_BITS + _REPLY_ENTRY_BITS * len(packet.entries)
            + LIST_PREFIX_BITS + ID_BITS * len(packet.fg_chain)
        )
    if isinstance(packet, DataPacket):
        return (packet.payload_bytes + DATA_HEADER_BYTES) * 8
    if isinstance(packet, RecoveryReq):
        return (
            KIND_TAG_BITS
            + ID_BITS * 3 + COUNT_BITS * 2
            + LIST_PREFIX_BITS + ID_BITS * len(packet.candidates)
        )
    if isinstance(packet, RecoveryReply):
        return (
            KIND_TAG_BITS
            + ID_BITS * 2
            + LIST_PREFIX_BITS + ID_BITS * len(packet.path_back)
        )
    if isinstance(packet, JoinReq):
        return KIND_TAG_BITS + ID_BITS * 2 + COUNT_BITS * 2 + AUTH_BITS
    if isinstance(packet, JoinReply):
        return KIND_TAG_BITS + ID_BITS * 3
    raise TypeError(f"not a packet: {packet!r}")


def kind_of(packet: Packet) -> str:
    return {
        Hello: "hello",
        Rreq: "rreq",
        Reply: "reply",
        DataPacket: "data",
        RecoveryReq: "recov_req",
        RecoveryReply: "recov_rep",
        JoinReq: "join_req",
        JoinReply: "join_rep",
    }[type(packet)]


def describe(packet: Packet) -> str:
    """Key fields for the trace line, fixed order per kind."""
    if isinstance(packet, Hello):
        return f"origin={packet.origin} avail={packet.b_available:.0f} used={packet.consumed_rate:.0f}"
    if isinstance(packet, Rreq):
        rows = ",".join(f"{r.source}:{r.group}:{r.seq}" for r in packet.rows)
        return f"relay={packet.relay} rows={rows}"
    if isinstance(packet, Reply):
        ent = ",".join(f"{e.source}:{e.group}:{e.seq}:{e.next_node}" for e in packet.entries)
        chain = ",".join(str(n) for n in packet.fg_chain)
        return f"origin={packet.origin} entries={ent} chain={chain}"
    if isinstance(packet, DataPacket):
        return f"src={packet.source} grp={packet.group} seq={packet.flow_seq}"
    if isinstance(packet, RecoveryReq):
        cand = ",".join(str(n) for n in packet.candidates)
        return f"origin={packet.origin} grp={packet.group} ttl={packet.ttl_hops} inst={packet.instance} cand={cand}"
    if isinstance(packet, RecoveryReply):
        path = ",".join(str(n) for n in packet.path_back)
        return f"resp={packet.responder} grp={packet.group} path={path}"
    if isinstance(packet, JoinReq):
        return f"origin={packet.origin_snode} ttl={packet.ttl} nonce={packet.nonce}"
    if isinstance(packet, JoinReply):
        return f"from={packet.from_snode} to={packet.to_snode} via={packet.via}"
    raise TypeError(f"not a packet: {packet!r}")


def trace_line(t: float, node: int, direction: str, packet: Packet, note: str = "") -> str:
    base = f"{t:.9f} {node} {direction} {kind_of(packet)} {describe(packet)}"
    return f"{base} {note}" if note else base
