import io

import pytest
from hypothesis import given, settings, strategies as st

from ifomsim.errors import BindingInUse, DomainError, NoMatchingRule, UnknownBinding, UnknownFlow
from ifomsim.ifom import (LTE, WLAN, BindingCache, FlowBindingRule, RoutedPacket, TrafficSelector,
                          TunnelConfig, tunnel_overhead_pct, write_switch_log)


def cache_with_flow(header=68):
    c = BindingCache(TunnelConfig(header))
    c.register_binding("hoa1", "coa-lte", 1, 10, LTE)
    c.register_binding("hoa1", "coa-wlan", 2, 20, WLAN)
    c.bind_flow(FlowBindingRule(5, "hoa1", TrafficSelector(dst="hoa1", dport=20), 2))
    return c


def test_overhead_values(derived):
    assert tunnel_overhead_pct(68, 1024) == derived["tunnel_overhead_pct_68_1024"] == 6.640625
    assert tunnel_overhead_pct(24, 1024) == 2.34375
    with pytest.raises(DomainError):
        tunnel_overhead_pct(68, 0)


def test_header_sizes_validated():
    with pytest.raises(DomainError):
        TunnelConfig(30)
    assert TunnelConfig(30, override=True).header_bytes == 30


@pytest.mark.parametrize("header,size", [(68, 1092), (24, 1048)])
def test_wlan_route_adds_header(header, size):
    c = cache_with_flow(header)
    assert c.route_packet(RoutedPacket("hoa1", 1024, dport=20)) == (WLAN, size)


def test_lte_route_has_no_header():
    c = cache_with_flow()
    c.switch_flow(5, 1)
    assert c.route_packet(RoutedPacket("hoa1", 1024, dport=20)) == (LTE, 1024)


def test_unmatched_packet_uses_default_binding():
    c = cache_with_flow()
    assert c.route_packet(RoutedPacket("hoa1", 100, dport=99)) == (LTE, 100)
    with pytest.raises(NoMatchingRule):
        c.route_packet(RoutedPacket("nobody", 100))


def test_register_refresh_and_deregister():
    c = BindingCache()
    assert c.register_binding("h", "c1", 1, 1).status == "created"
    assert c.register_binding("h", "c1", 1, 1).status == "refreshed"
    assert c.deregister_binding("h", 1).status == "deleted"
    with pytest.raises(UnknownBinding):
        c.deregister_binding("h", 1)
    with pytest.raises(DomainError):
        c.register_binding("h", "c", -3, 1)


def test_deregister_in_use():
    c = cache_with_flow()
    with pytest.raises(BindingInUse):
        c.deregister_binding("hoa1", 2)


def test_switch_errors_and_redundancy():
    c = cache_with_flow()
    with pytest.raises(UnknownFlow):
        c.switch_flow(99, 1)
    with pytest.raises(UnknownBinding):
        c.switch_flow(5, 7)
    ev = c.switch_flow(5, 2, at=10)
    assert ev.redundant and ev.old_bid == ev.new_bid == 2
    ev = c.switch_flow(5, 1, at=20)
    assert not ev.redundant and (ev.old_bid, ev.new_bid) == (2, 1)
    buf = io.StringIO()
    write_switch_log(buf, c.switch_log)
    assert buf.getvalue().splitlines()[1:] == ["10,5,2,2,1", "20,5,2,1,0"]


def test_rule_priority_then_insertion():
    c = cache_with_flow()
    c.bind_flow(FlowBindingRule(6, "hoa1", TrafficSelector(dst="hoa1"), 1, fb_priority=5))
    # flow 5 (priority 0) wins over the broader priority-5 rule
    assert c.match_rule(RoutedPacket("hoa1", 10, dport=20)).fid == 5
    assert c.match_rule(RoutedPacket("hoa1", 10, dport=21)).fid == 6


def test_empty_selector_rejected():
    with pytest.raises(DomainError):
        TrafficSelector()


def test_snapshot():
    c = cache_with_flow()
    assert c.snapshot() == [("hoa1", "coa-lte", 1, 10, LTE, ""),
                            ("hoa1", "coa-wlan", 2, 20, WLAN, "5")]


ops = st.lists(st.tuples(st.sampled_from(["switch", "route", "bind", "refresh"]),
                         st.integers(0, 5), st.integers(1, 2)), max_size=60)


@settings(max_examples=200, deadline=None)
@given(ops)
def test_routing_follows_latest_switch(seq):
    c = BindingCache()
    hoas = ["h0", "h1"]
    for h in hoas:
        c.register_binding(h, h + "-lte", 1, 1, LTE)
        c.register_binding(h, h + "-wlan", 2, 2, WLAN)
    shadow = {}
    for op, fid, bid in seq:
        hoa = hoas[fid % 2]
        if op == "bind" and fid not in shadow:
            c.bind_flow(FlowBindingRule(fid, hoa, TrafficSelector(dst=hoa, dport=fid), bid))
            shadow[fid] = bid
        elif op == "switch" and fid in shadow:
            c.switch_flow(fid, bid)
            shadow[fid] = bid
        elif op == "refresh":
            c.register_binding(hoa, f"{hoa}-{bid}", bid, bid, LTE if bid == 1 else WLAN)
        elif op == "route" and fid in shadow:
            iface, size = c.route_packet(RoutedPacket(hoa, 500, dport=fid))
            assert iface == (LTE if shadow[fid] == 1 else WLAN)
            assert size == 500 + (68 if iface == WLAN else 0)
        c.check_invariants()
