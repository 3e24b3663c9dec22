"""Run counters and the derived performance metrics.

Deliveries are counted at application hand-off (the node is a member of
the packet's group) and deduplicated on first arrival per
(receiver, source, group, flow_seq).  Transmissions are counted when a
frame actually starts on air.
"""

from collections import defaultdict
from typing import Dict, Set, Tuple

from .wire import DataPacket, Packet, Rreq, kind_of, serialized_size

FlowKey = Tuple[int, int]   # (source, group)


class MetricsLedger:
    def __init__(self):
        self.sent: Dict[FlowKey, int] = defaultdict(int)
        self.flow_receivers: Dict[FlowKey, int] = {}
        self.delivered: Dict[Tuple[int, int, int], int] = defaultdict(int)
        self._seen: Dict[Tuple[int, int, int], Set[int]] = defaultdict(set)
        self.delay_sum = 0.0
        self.delay_count = 0
        self.rreq_tx_by_node: Dict[int, int] = defaultdict(int)
        self.ctrl_bits_by_kind: Dict[str, int] = defaultdict(int)
        self.data_tx = 0
        self.mac_drops = 0
        self.buffer_drops = 0
        self.collision_drops = 0
        self.recovery_events = 0
        self.rejected_auth = 0
        self.mesh_formed = None     # None: security disabled; else bool

    # -- recording ---------------------------------------------------------

    def record_sent(self, source: int, group: int) -> None:
        self.sent[(source, group)] += 1

    def record_delivery(self, receiver: int, packet: DataPacket, now: float) -> bool:
        """True if this is the first arrival of the packet at the receiver."""
        key = (receiver, packet.source, packet.group)
        seen = self._seen[key]
        if packet.flow_seq in seen:
            return False
        seen.add(packet.flow_seq)
        self.delivered[key] += 1
        self.delay_sum += now - packet.sent_at
        self.delay_count += 1
        return True

    def count_tx(self, packet: Packet, sender: int = -1) -> None:
        if isinstance(packet, DataPacket):
            self.data_tx += 1
            return
        self.ctrl_bits_by_kind[kind_of(packet)] += serialized_size(packet)
        if isinstance(packet, Rreq):
            self.rreq_tx_by_node[sender] += 1

    # -- derived metrics ---------------------------------------------------

    @property
    def total_sent(self) -> int:
        return sum(self.sent.values())

    @property
    def total_delivered(self) -> int:
        return sum(self.delivered.values())

    @property
    def total_rreq_tx(self) -> int:
        return sum(self.rreq_tx_by_node.values())

    @property
    def total_ctrl_bits(self) -> int:
        return sum(self.ctrl_bits_by_kind.values())


def pdr(ledger: MetricsLedger) -> float:
    """Delivered over (sent x receiver count), summed across flows."""
    denominator = sum(
        count * ledger.flow_receivers.get(flow, 0) for flow, count in ledger.sent.items()
    )
    if denominator == 0:
        return float("nan")
    return ledger.total_delivered / denominator


def avg_delay(ledger: MetricsLedger) -> float:
    """Mean source-to-receiver latency over first-arrival deliveries."""
    if ledger.delay_count == 0:
        return float("nan")
    return ledger.delay_sum / ledger.delay_count


def rreq_load(ledger: MetricsLedger, node_count: int) -> float:
    """Average number of route-request transmissions per node."""
    return ledger.total_rreq_tx / node_count
