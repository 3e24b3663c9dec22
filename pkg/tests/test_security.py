from collections import deque

from meshsim import security
from meshsim.security import SecurityConfig, make_token, mesh_formed
from meshsim.wire import JoinReply, JoinReq

from test_protocol import make_node

CFG = SecurityConfig(enabled=True, snodes=(0, 9), join_ttl=10, auth_key="meshkey")


def join_req(origin=0, ttl=10, nonce=77, key="meshkey", hint=None):
    return JoinReq(origin, ttl, make_token(key, origin, nonce), hint if hint is not None else origin, nonce)


def make_secure_node(node_id, cfg=CFG):
    node, net = make_node(node_id=node_id)
    net.security_cfg = cfg
    return node, net


def sent_of(net, kind):
    return [p for _, p in net.medium.sent if isinstance(p, kind)]


def test_relay_decrements_ttl_and_records_reverse_route():
    node, net = make_secure_node(3)
    security.process_join_req(node, join_req(ttl=5), 1)
    relayed = sent_of(net, JoinReq)
    assert len(relayed) == 1
    assert relayed[0].ttl == 4
    assert relayed[0].reverse_path_hint == 3
    assert node.security.reverse_routes[0] == 1


def test_ttl_exhausted_is_not_relayed():
    node, net = make_secure_node(3)
    security.process_join_req(node, join_req(ttl=1), 1)
    assert sent_of(net, JoinReq) == []


def test_duplicate_join_relayed_once():
    node, net = make_secure_node(3)
    security.process_join_req(node, join_req(), 1)
    net.medium.sent.clear()
    security.process_join_req(node, join_req(), 2)
    assert net.medium.sent == []


def test_forged_token_dropped_never_relayed_or_answered():
    node, net = make_secure_node(9)       # an s-node, would normally answer
    security.process_join_req(node, join_req(key="wrong"), 1)
    assert net.medium.sent == []
    assert net.ledger.rejected_auth == 1
    assert node.security.seen_joins == set()


def test_snode_replies_to_delivering_neighbor():
    node, net = make_secure_node(9)
    security.process_join_req(node, join_req(origin=0, ttl=6), 4)
    replies = sent_of(net, JoinReply)
    assert len(replies) == 1
    assert replies[0] == JoinReply(9, 0, 4)
    assert sent_of(net, JoinReq) == []    # answering s-nodes do not relay


def test_reply_marks_relay_and_travels_reverse_path():
    node, net = make_secure_node(4)
    security.process_join_req(node, join_req(origin=0, ttl=6), 2)
    net.medium.sent.clear()
    security.process_join_reply(node, JoinReply(9, 0, 4), 9)
    assert node.security.forwarding_attr == 1
    out = sent_of(net, JoinReply)
    assert out == [JoinReply(9, 0, 2)]


def test_reply_for_other_hop_ignored():
    node, net = make_secure_node(4)
    security.process_join_reply(node, JoinReply(9, 0, 6), 9)
    assert node.security.forwarding_attr == 0
    assert net.medium.sent == []


def test_reply_without_reverse_route_dropped():
    node, net = make_secure_node(4)
    security.process_join_reply(node, JoinReply(9, 0, 4), 9)
    assert node.security.forwarding_attr == 1     # the hop itself is on the path
    assert net.medium.sent == []                  # but cannot relay further


def test_origin_terminates_reply_relay():
    node, net = make_secure_node(0)
    security.process_join_reply(node, JoinReply(9, 0, 0), 4)
    assert net.medium.sent == []
    assert node.security.forwarding_attr == 0


def test_forwarding_attr_is_monotone():
    node, net = make_secure_node(4)
    security.process_join_req(node, join_req(origin=0, ttl=6), 2)
    security.process_join_reply(node, JoinReply(9, 0, 4), 9)
    assert node.security.forwarding_attr == 1
    security.process_join_req(node, join_req(origin=9, nonce=5, ttl=6), 2)
    assert node.security.forwarding_attr == 1


# -- mesh predicate against a brute-force oracle --------------------------------

def line_adjacency(n):
    adj = {i: set() for i in range(n)}
    for i in range(n - 1):
        adj[i].add(i + 1)
        adj[i + 1].add(i)
    return adj


def brute_force_marked_path(adjacency, a, b, attrs):
    """Oracle: breadth-first search over marked interior nodes."""
    frontier = deque([a])
    seen = {a}
    while frontier:
        cur = frontier.popleft()
        for nbr in adjacency[cur]:
            if nbr == b:
                return True
            if nbr not in seen and attrs.get(nbr, 0) == 1:
                seen.add(nbr)
                frontier.append(nbr)
    return False


def test_adjacent_snodes_form_trivially():
    adj = line_adjacency(2)
    assert mesh_formed(adj, (0, 1), {0: 0, 1: 0}, join_ttl=10)


def test_marked_line_forms_and_unmarked_does_not():
    adj = line_adjacency(4)
    marked = {1: 1, 2: 1}
    assert mesh_formed(adj, (0, 3), marked, join_ttl=10)
    assert not mesh_formed(adj, (0, 3), {1: 1, 2: 0}, join_ttl=10)


def test_pairs_beyond_ttl_are_exempt():
    adj = line_adjacency(6)
    assert mesh_formed(adj, (0, 5), {}, join_ttl=4)       # 5 hops > ttl 4
    assert not mesh_formed(adj, (0, 5), {}, join_ttl=5)


def test_mesh_predicate_matches_brute_force_on_random_graphs():
    import random
    rng = random.Random(13)
    for _ in range(40):
        n = rng.randrange(4, 12)
        adj = {i: set() for i in range(n)}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.35:
                    adj[i].add(j)
                    adj[j].add(i)
        attrs = {i: rng.randrange(2) for i in range(n)}
        snodes = tuple(rng.sample(range(n), 2))
        ttl = rng.randrange(1, 6)
        expected = all(
            brute_force_marked_path(adj, a, b, attrs)
            for i, a in enumerate(sorted(snodes))
            for b in sorted(snodes)[i + 1:]
            if security._hop_distance(adj, a, b) is not None
            and security._hop_distance(adj, a, b) <= ttl
        )
        assert mesh_formed(adj, snodes, attrs, ttl) == expected


def test_join_traffic_bounded_by_nodes_times_joins():
    # every node relays a given (origin, nonce) at most once
    node, net = make_secure_node(3)
    for sender in (1, 2, 5, 6):
        security.process_join_req(node, join_req(), sender)
    assert len(sent_of(net, JoinReq)) == 1
