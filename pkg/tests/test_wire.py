from hypothesis import given, strategies as st

from meshsim.wire import (
    DataPacket,
    Hello,
    JoinReply,
    JoinReq,
    RecoveryReply,
    RecoveryReq,
    Reply,
    ReplyEntry,
    Rreq,
    SourceRow,
    kind_of,
    serialized_size,
    trace_line,
)


def row(source=1, group=1000, seq=1):
    return SourceRow(source, group, seq, 17920.0)


# layout: 8-bit kind tag, 32-bit ids/rates/times/counters, 16-bit list prefixes
def test_hello_is_constant_104_bits():
    assert serialized_size(Hello(1, 1.6e6, 0.0)) == 8 + 32 + 32 + 32 == 104
    assert serialized_size(Hello(49, 0.0, 5e5)) == 104


def test_data_packet_is_payload_plus_48_byte_header():
    packet = DataPacket(0, 1000, 7, 512, 1.25)
    assert serialized_size(packet) == 4096 + 384


def test_rreq_size_lineup():
    base = serialized_size(Rreq((row(),), 3, ()))
    assert base == 8 + 32 + 16 + 192 + 16
    with_neighbors = serialized_size(Rreq((row(),), 3, ((4, 2), (5, 1))))
    assert with_neighbors == base + 2 * 64


def test_rreq_size_monotone_in_rows():
    rows1 = tuple(row(seq=i) for i in range(1))
    rows10 = tuple(row(seq=i) for i in range(10))
    small = serialized_size(Rreq(rows1, 3, ()))
    large = serialized_size(Rreq(rows10, 3, ()))
    assert large == small + 9 * 192
    assert large > small


def test_reply_size():
    reply = Reply((ReplyEntry(0, 1000, 1, 2),), 4, (4, 3))
    assert serialized_size(reply) == 8 + 32 + 16 + 128 + 16 + 2 * 32


def test_recovery_sizes():
    req = RecoveryReq(2, 1000, 2, (7, 9), 1, -1)
    assert serialized_size(req) == 8 + 3 * 32 + 2 * 32 + 16 + 2 * 32
    rep = RecoveryReply(7, 1000, (3, 7))
    assert serialized_size(rep) == 8 + 2 * 32 + 16 + 2 * 32


def test_join_sizes():
    req = JoinReq(1, 10, 0xDEAD, 1, 99)
    assert serialized_size(req) == 8 + 2 * 32 + 2 * 32 + 64
    rep = JoinReply(2, 1, 5)
    assert serialized_size(rep) == 8 + 3 * 32


def test_equal_packets_have_equal_sizes():
    a = DataPacket(0, 1000, 7, 512, 1.25)
    b = DataPacket(0, 1000, 7, 512, 1.25)
    assert a == b
    assert serialized_size(a) == serialized_size(b)


@given(st.integers(min_value=0, max_value=20), st.integers(min_value=0, max_value=20))
def test_rreq_grows_linearly_in_rows_and_neighbors(n_rows, n_neighbors):
    rows = tuple(row(seq=i) for i in range(n_rows))
    nbrs = tuple((i, 0) for i in range(n_neighbors))
    size = serialized_size(Rreq(rows, 0, nbrs))
    assert size == 72 + 192 * n_rows + 64 * n_neighbors


def test_trace_line_format():
    packet = DataPacket(3, 1000, 12, 512, 0.5)
    line = trace_line(1.2345, 7, "rx", packet)
    assert line == "1.234500000 7 rx data src=3 grp=1000 seq=12"
    assert kind_of(packet) == "data"
    dropped = trace_line(2.0, 1, "drop", packet, "collision")
    assert dropped.endswith(" collision")
