import pytest
from hypothesis import given, strategies as st

from cfaudit.channel import (DOWN, UP, AdversaryScript, Delay, Drop, Forge, Link, LinkConfig, Rule,
                             TamperByte, apply_rules, byte_time, link_send)

NS = 1_000_000_000


def test_byte_time():
    assert byte_time(LinkConfig()) == pytest.approx(86.806e-6, abs=1e-9)
    assert LinkConfig().serialize_ns(2084) / NS == pytest.approx(0.18090, abs=1e-5)
    assert byte_time(LinkConfig(baud=230400)) == byte_time(LinkConfig()) / 2


def test_response_arrival():
    d = link_send(bytes(66), 0, LinkConfig())
    assert len(d) == 1 and len(d[0].times) == 66
    assert d[0].arrival / NS == pytest.approx(0.00573 + 0.050, abs=1e-5)
    assert list(d[0].times) == sorted(d[0].times)


def test_drop_delay_tamper_forge():
    cfg = LinkConfig()
    assert link_send(bytes(66), 0, cfg, AdversaryScript([Rule(DOWN, 1, Drop())])) == []
    base = link_send(bytes(66), 0, cfg)[0].arrival
    late = link_send(bytes(66), 0, cfg, AdversaryScript([Rule(DOWN, 1, Delay(0.5))]))[0].arrival
    assert late - base == NS // 2
    t = link_send(bytes(66), 0, cfg, AdversaryScript([Rule(DOWN, 1, TamperByte(3, 0xAA))]))[0]
    assert t.payload[3] == 0xAA and t.payload.count(0) == 65
    f = link_send(bytes(66), 0, cfg, AdversaryScript([Rule(DOWN, 1, Forge(b"\x01" * 66))]))
    assert [x.forged for x in f] == [True, False] and f[0].arrival < f[1].arrival


def test_rules_match_by_ordinal():
    link = Link(LinkConfig(), AdversaryScript([Rule(UP, 2, Drop())]))
    assert link.send(UP, b"a", 0) and not link.send(UP, b"b", 0) and link.send(UP, b"c", 0)
    assert link.send(DOWN, b"d", 0)


def test_line_serializes_back_to_back():
    link = Link(LinkConfig(rtt=0))
    a = link.send(DOWN, bytes(10), 0)[0]
    b = link.send(DOWN, bytes(10), 0)[0]
    assert b.times[0] == a.times[-1] + LinkConfig().serialize_ns(1)


def test_carry_uses_sender_clock():
    link = Link(LinkConfig(rtt=0.2))
    d = link.carry(UP, b"xyz", [10, 20, 30])[0]
    assert d.times == (10 + 100_000_000, 20 + 100_000_000, 30 + 100_000_000)


def test_bad_rules():
    with pytest.raises(ValueError):
        Rule("sideways", 1, Drop())
    with pytest.raises(ValueError):
        Rule(UP, 0, Drop())
    with pytest.raises(ValueError):
        LinkConfig(baud=0)
    with pytest.raises(TypeError):
        apply_rules([object()], b"x")


@given(st.binary(min_size=1, max_size=200), st.integers(0, 10**9))
def test_order_and_determinism(payload, t0):
    cfg = LinkConfig()
    a = link_send(payload, t0, cfg)
    b = link_send(payload, t0, cfg)
    assert a == b and a[0].payload == payload
    assert all(x < y for x, y in zip(a[0].times, a[0].times[1:]))
