import math

from meshsim.metrics import MetricsLedger, avg_delay, pdr, rreq_load
from meshsim.wire import DataPacket, Hello, Rreq, SourceRow


def test_pdr_definition_arithmetic():
    # 100 sent to 2 receivers, 90 + 80 delivered -> 170/200
    ledger = MetricsLedger()
    ledger.flow_receivers[(0, 1000)] = 2
    for seq in range(100):
        ledger.record_sent(0, 1000)
    for seq in range(90):
        ledger.record_delivery(1, DataPacket(0, 1000, seq, 512, 0.0), 0.01)
    for seq in range(80):
        ledger.record_delivery(2, DataPacket(0, 1000, seq, 512, 0.0), 0.01)
    assert pdr(ledger) == 170 / 200 == 0.85


def test_pdr_lossless_single_receiver():
    ledger = MetricsLedger()
    ledger.flow_receivers[(0, 1000)] = 1
    for seq in range(10):
        ledger.record_sent(0, 1000)
        ledger.record_delivery(4, DataPacket(0, 1000, seq, 512, 0.0), 0.01)
    assert pdr(ledger) == 1.0


def test_pdr_nothing_sent_is_nan():
    assert math.isnan(pdr(MetricsLedger()))
    assert str(pdr(MetricsLedger())) == "nan"


def test_avg_delay_single_hop():
    ledger = MetricsLedger()
    sent_at = 1.0
    ledger.record_delivery(1, DataPacket(0, 1000, 0, 512, sent_at), sent_at + 0.00224)
    assert abs(avg_delay(ledger) - 0.00224) < 1e-12


def test_avg_delay_counts_first_arrival_only():
    ledger = MetricsLedger()
    packet = DataPacket(0, 1000, 0, 512, 0.0)
    assert ledger.record_delivery(1, packet, 0.010) is True
    assert ledger.record_delivery(1, packet, 0.500) is False
    assert avg_delay(ledger) == 0.010
    assert ledger.total_delivered == 1


def test_avg_delay_no_deliveries_is_nan():
    assert math.isnan(avg_delay(MetricsLedger()))


def test_rreq_load_definition():
    ledger = MetricsLedger()
    row = SourceRow(0, 1000, 1, 1.0)
    for node in range(50):
        for _ in range(3):
            ledger.count_tx(Rreq((row,), node, ()), node)
    assert ledger.total_rreq_tx == 150
    assert rreq_load(ledger, 50) == 3.0


def test_control_bits_tracked_by_kind():
    ledger = MetricsLedger()
    ledger.count_tx(Hello(1, 0.0, 0.0), 1)
    ledger.count_tx(Hello(2, 0.0, 0.0), 2)
    assert ledger.ctrl_bits_by_kind["hello"] == 208
    ledger.count_tx(DataPacket(0, 1000, 0, 512, 0.0), 0)
    assert ledger.data_tx == 1
    assert "data" not in ledger.ctrl_bits_by_kind


def test_metrics_are_pure_functions_of_the_ledger():
    ledger = MetricsLedger()
    ledger.flow_receivers[(0, 1000)] = 1
    ledger.record_sent(0, 1000)
    ledger.record_delivery(1, DataPacket(0, 1000, 0, 512, 0.0), 0.25)
    assert pdr(ledger) == pdr(ledger)
    assert avg_delay(ledger) == avg_delay(ledger)
