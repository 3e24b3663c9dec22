"""Group-mesh formation between designated key-share holders (s-nodes).

Each s-node floods a TTL-scoped, authenticated join request.  Other
s-nodes answer with a reply that travels hop by hop back along the
recorded reverse path; every relay on that path sets its forwarding
attribute, so the marked relays plus the s-nodes form a mesh.  The
authenticator is a keyed hash over (origin, nonce), a stand-in for
certificate verification; packets that fail the check are dropped and
counted, never relayed or answered.
"""

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Set, Tuple

from .wire import JoinReply, JoinReq


@dataclass(frozen=True)
class SecurityConfig:
    enabled: bool = False
    snodes: Tuple[int, ...] = ()
    join_ttl: int = 10
    auth_key: str = "meshkey"


@dataclass
class SecurityState:
    forwarding_attr: int = 0
    seen_joins: Set[Tuple[int, int]] = field(default_factory=set)       # (origin, nonce)
    reverse_routes: Dict[int, int] = field(default_factory=dict)        # join origin -> previous hop
    seen_replies: Set[Tuple[int, int]] = field(default_factory=set)     # (from, to)


def make_token(key: str, origin: int, nonce: int) -> int:
    digest = hashlib.sha256(f"{key}|{origin}|{nonce}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def snode_join(node) -> None:
    cfg = node.sim.security_cfg
    nonce = node.sim.rng.randrange(1 << 32)
    node.security.seen_joins.add((node.id, nonce))
    node._send(JoinReq(node.id, cfg.join_ttl, make_token(cfg.auth_key, node.id, nonce),
                       node.id, nonce))


def process_join_req(node, req: JoinReq, sender: int) -> None:
    cfg = node.sim.security_cfg
    if not cfg.enabled:
        return
    if req.auth != make_token(cfg.auth_key, req.origin_snode, req.nonce):
        node.sim.ledger.rejected_auth += 1
        node.sim.trace(node.sim.now(), node.id, "drop", req, "bad_auth")
        return
    st = node.security
    key = (req.origin_snode, req.nonce)
    if key in st.seen_joins:
        return
    st.seen_joins.add(key)
    if node.id in cfg.snodes:
        node._send(JoinReply(node.id, req.origin_snode, sender))
    elif req.ttl > 1:
        st.reverse_routes[req.origin_snode] = sender
        node._send(JoinReq(req.origin_snode, req.ttl - 1, req.auth, node.id, req.nonce))


def process_join_reply(node, rep: JoinReply, sender: int) -> None:
    if not node.sim.security_cfg.enabled:
        return
    if rep.via != node.id:
        return
    if node.id == rep.to_snode:
        return      # reply reached the join origin
    st = node.security
    key = (rep.from_snode, rep.to_snode)
    if key in st.seen_replies:
        return
    st.seen_replies.add(key)
    st.forwarding_attr = 1
    prev = st.reverse_routes.get(rep.to_snode)
    if prev is None:
        return
    node._send(JoinReply(rep.from_snode, rep.to_snode, prev))


def _hop_distance(adjacency: Dict[int, Set[int]], a: int, b: int):
    if a == b:
        return 0
    dist = {a: 0}
    frontier = deque([a])
    while frontier:
        cur = frontier.popleft()
        for nbr in sorted(adjacency.get(cur, ())):
            if nbr in dist:
                continue
            dist[nbr] = dist[cur] + 1
            if nbr == b:
                return dist[nbr]
            frontier.append(nbr)
    return None


def _marked_path_exists(adjacency: Dict[int, Set[int]], a: int, b: int,
                        attrs: Dict[int, int]) -> bool:
    """Path from a to b whose interior nodes all carry forwarding_attr = 1."""
    if b in adjacency.get(a, ()):
        return True
    visited = {a}
    frontier = deque([a])
    while frontier:
        cur = frontier.popleft()
        for nbr in sorted(adjacency.get(cur, ())):
            if nbr in visited:
                continue
            if nbr == b:
                return True
            if attrs.get(nbr, 0) == 1:
                visited.add(nbr)
                frontier.append(nbr)
    return False


def mesh_formed(adjacency: Dict[int, Set[int]], snodes: Tuple[int, ...],
                attrs: Dict[int, int], join_ttl: int) -> bool:
    """True iff every s-node pair within join_ttl hops is linked by marked relays."""
    ordered = sorted(snodes)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            d = _hop_distance(adjacency, a, b)
            if d is None or d > join_ttl:
                continue
            if not _marked_path_exists(adjacency, a, b, attrs):
                return False
    return True
