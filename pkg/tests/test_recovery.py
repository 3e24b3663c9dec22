from meshsim import recovery
from meshsim.harness import line5_scenario, run_simulation
from meshsim.scenario import FlowSpec, Scenario
from meshsim.simulation import Simulation
from meshsim.wire import DataPacket, RecoveryReply, RecoveryReq

from test_protocol import make_node, packetify


def data(seq=0, source=0, group=1000):
    return DataPacket(source, group, seq, 512, 0.0)


def chained(node, chain=(9, 8), forwarders=(8,)):
    """Install a downstream chain as a processed reply would."""
    recovery.on_reply_chain(node, 1000, 1, chain)
    info = node.recovery.chains[1000]
    info.forwarders = set(forwarders)
    info.last_echo_at = node.sim.now()
    return info


# -- watches ---------------------------------------------------------------

def test_watch_armed_after_forwarding():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(), 7)
    assert (0, 1000, 0) in node.recovery.watches
    assert net.engine.pending() >= 1


def test_no_watch_without_downstream_forwarder():
    node, net = make_node(node_id=5)
    packetify(node, net)
    recovery.on_reply_chain(node, 1000, 1, (9,))      # receiver only
    node.recovery.chains[1000].last_echo_at = 0.0
    node.forward_data(data(), 7)
    assert node.recovery.watches == {}


def test_no_watch_for_own_source_traffic():
    node, net = make_node(node_id=5)
    net.flows[5] = (FlowSpec(5, 1000, 4.0, 1.28e5, start_at=0.0, stop_at=100.0),)
    packetify(node, net)
    chained(node)
    node.routes_established[(5, 1000)] = 10**9
    node.forward_data(data(source=5), 7)
    assert node.recovery.watches == {}


def test_overhearing_downstream_echo_cancels_watch():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(), 7)
    recovery.on_data_overheard(node, data(), 8)
    assert node.recovery.watches == {}


def test_later_seq_echo_clears_earlier_watches():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(seq=0), 7)
    node.forward_data(data(seq=1), 7)
    recovery.on_data_overheard(node, data(seq=1), 8)
    assert node.recovery.watches == {}


def test_echo_before_own_forward_prevents_watch():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    recovery.on_data_overheard(node, data(seq=0), 8)  # downstream was faster
    node.forward_data(data(seq=0), 7)
    assert node.recovery.watches == {}


def test_echo_from_non_chain_node_does_not_cancel():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(), 7)
    recovery.on_data_overheard(node, data(), 12)
    assert (0, 1000, 0) in node.recovery.watches


# -- break detection and the recovery request ----------------------------------

def expire_watch(node, key=(0, 1000, 0)):
    recovery.on_watch_expired(node, key)


def test_watch_expiry_triggers_two_hop_recovery_request():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(), 7)
    net.medium.sent.clear()
    expire_watch(node)
    reqs = [p for _, p in net.medium.sent if isinstance(p, RecoveryReq)]
    assert len(reqs) == 1
    assert reqs[0].ttl_hops == 2
    assert reqs[0].candidates == (9, 8)
    assert net.ledger.recovery_events == 1
    assert 1000 in node.recovery.buffers


def test_data_buffered_while_recovering():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(seq=0), 7)
    expire_watch(node)
    net.medium.sent.clear()
    node.forward_data(data(seq=1), 7)
    assert net.medium.sent == []
    assert [p.flow_seq for p in node.recovery.buffers[1000]] == [0, 1]


def test_buffer_overflow_drops_oldest():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(seq=0), 7)
    expire_watch(node)
    cap = net.recovery_cfg.buffer_capacity
    for seq in range(1, cap + 3):
        node.forward_data(data(seq=seq), 7)
    buf = node.recovery.buffers[1000]
    assert len(buf) == cap
    assert buf[0].flow_seq == 3                   # oldest entries dropped
    assert net.ledger.buffer_drops == 3


def test_recovery_request_relayed_once_with_decremented_ttl():
    node, net = make_node(node_id=6)
    req = RecoveryReq(5, 1000, 2, (9, 8), 1, -1)
    recovery.process_recovery_req(node, req, 5)
    relayed = [p for _, p in net.medium.sent if isinstance(p, RecoveryReq)]
    assert len(relayed) == 1
    assert relayed[0].ttl_hops == 1 and relayed[0].via == 6
    net.medium.sent.clear()
    recovery.process_recovery_req(node, req, 7)   # duplicate instance
    assert net.medium.sent == []


def test_recovery_request_ttl_exhausted_is_dropped():
    node, net = make_node(node_id=6)
    recovery.process_recovery_req(node, RecoveryReq(5, 1000, 1, (9,), 1, 3), 3)
    assert net.medium.sent == []


def test_candidate_answers_with_reverse_path():
    node, net = make_node(node_id=8)
    recovery.process_recovery_req(node, RecoveryReq(5, 1000, 1, (9, 8), 1, 3), 3)
    answers = [p for _, p in net.medium.sent if isinstance(p, RecoveryReply)]
    assert len(answers) == 1
    assert answers[0].responder == 8
    assert answers[0].path_back == (3, 8)


def test_candidate_heard_directly_answers_without_relay_hop():
    node, net = make_node(node_id=8)
    recovery.process_recovery_req(node, RecoveryReq(5, 1000, 2, (8,), 1, -1), 5)
    answers = [p for _, p in net.medium.sent if isinstance(p, RecoveryReply)]
    assert answers[0].path_back == (8,)


def test_path_relay_acquires_flag_and_patch_grace():
    node, net = make_node(node_id=3)
    recovery.process_recovery_reply(node, RecoveryReply(8, 1000, (3, 8)), 8)
    assert 1000 in node.fg
    assert node.recovery.patch_grace[1000] > 0.0
    assert [p for _, p in net.medium.sent if isinstance(p, RecoveryReply)]


def test_patched_relay_forwards_via_lazy_entry():
    node, net = make_node(node_id=3)
    net.flows[0] = (FlowSpec(0, 1000, 4.0, 1.28e5, start_at=0.0, stop_at=100.0),)
    recovery.process_recovery_reply(node, RecoveryReply(8, 1000, (3, 8)), 8)
    net.medium.sent.clear()
    node.forward_data(data(seq=4), 5)
    assert [p for _, p in net.medium.sent] != []
    # materialized registered, then promoted by the forward it just did
    assert node.routes[(0, 1000)].status == "reserved"
    assert node.reserved_accum == 1.28e5


def test_complete_recovery_flushes_buffer_in_order():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(seq=0), 7)
    expire_watch(node)
    node.forward_data(data(seq=1), 7)
    node.forward_data(data(seq=2), 7)
    net.medium.sent.clear()
    recovery.process_recovery_reply(node, RecoveryReply(8, 1000, (3, 8)), 3)
    flushed = [p.flow_seq for _, p in net.medium.sent if isinstance(p, DataPacket)]
    assert flushed == [0, 1, 2]
    assert 1000 not in node.recovery.buffers
    assert 3 in node.recovery.chains[1000].chain   # patched relay joins the chain


def test_reply_after_deadline_discards_buffer():
    node, net = make_node(node_id=5)
    packetify(node, net)
    chained(node)
    node.forward_data(data(seq=0), 7)
    expire_watch(node)
    node.forward_data(data(seq=1), 7)
    instance = node.recovery.instance
    recovery.on_reply_deadline(node, 1000, instance)
    assert 1000 not in node.recovery.buffers
    assert net.ledger.buffer_drops == 2
    assert 1000 in node.recovery.cooldown
    net.medium.sent.clear()
    node.forward_data(data(seq=2), 7)             # back to normal forwarding
    assert [p for _, p in net.medium.sent if isinstance(p, DataPacket)]
    assert node.recovery.watches == {}            # cooldown until the next reply


def test_recovery_disabled_for_non_proposed_variants():
    node, net = make_node(node_id=5, variant="cqmp")
    packetify(node, net)
    recovery.on_reply_chain(node, 1000, 1, (9, 8))
    assert node.recovery.chains == {}
    node.forward_data(data(), 7)
    assert node.recovery.watches == {}


# -- chain accumulation across an end-to-end run ----------------------------------

def test_fg_chain_accumulates_on_line_topology():
    sim = run_simulation(line5_scenario(duration=10.0))
    assert recovery.downstream_chain(sim.nodes[1], 1000) == (4, 3, 2)
    assert recovery.downstream_chain(sim.nodes[2], 1000) == (4, 3)
    assert recovery.downstream_chain(sim.nodes[3], 1000) == (4,)
    assert recovery.downstream_forwarders(sim.nodes[1], 1000) == {3, 2}


def test_recovery_requests_never_travel_more_than_two_hops():
    # line of nodes well beyond the 2-hop scope; inject a recovery request
    positions = tuple((i * 200.0, 0.0) for i in range(8))
    scenario = Scenario(nodes=8, area=(1600.0, 1000.0), duration=5.0, positions=positions,
                        flows=(FlowSpec(0, 1000, 4.0, 17920.0, start_at=0.5, stop_at=4.0),),
                        receivers={1000: (7,)}, channel_model="ideal", seed=0)
    sim = Simulation(scenario, trace=True)
    req = RecoveryReq(0, 1000, 2, (5, 6, 7), 99, -1)
    sim.inject_delivery(1, req, 1.0, sender=0)
    sim.run()
    hops = [line for line in sim.trace_lines if "recov_req" in line and " tx " in line]
    transmitters = {int(line.split()[1]) for line in hops}
    # relayed by the first hop only; nobody beyond node 2 ever transmits it
    assert transmitters <= {1, 2}
