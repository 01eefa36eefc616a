import pytest
from hypothesis import given, strategies as st

from ifomsim.ifom import LTE, WLAN, BindingCache, FlowBindingRule, TrafficSelector
from ifomsim.steering import (EpochEntry, LoadRegime, Reason, SteeringInputs, Target, decide,
                              decide_ee, decide_static, decide_tmax, load_regime, run_epoch)
from ifomsim.traffic import Flow, FlowClass

FTP = Flow.of(1, 0, FlowClass.FTP, ftp_rate=512_000)
VIDEO = Flow.of(2, 0, FlowClass.VIDEO)
VOIP = Flow.of(3, 0, FlowClass.VOIP)
MAX = 512_000.0


def inp(d=40.0, ratio=0.8, util=0.3, lte=0.0, premium=False):
    return SteeringInputs(d, ratio * MAX, MAX, util, lte, premium)


def _tr(d):
    return d.target, d.reason


@pytest.mark.parametrize("args,expect", [
    ((40, 0.8), (Target.WLAN, Reason.WLAN_OK)),
    ((70, 0.9), (Target.LTE, Reason.DIST_FAIL)),
    ((50, 0.6), (Target.LTE, Reason.THPT_FAIL)),
    ((60, 0.71), (Target.WLAN, Reason.WLAN_OK)),
    ((60, 0.70), (Target.LTE, Reason.THPT_FAIL)),
])
def test_tmax_rules(args, expect):
    assert _tr(decide_tmax(inp(*args), FTP)) == expect


@pytest.mark.parametrize("flow", [VIDEO, VOIP])
@pytest.mark.parametrize("policy", ["tmax", "ee", "none-all-lte", "none-dual-static"])
def test_realtime_pinned(flow, policy):
    d = decide(policy, inp(5, 1.0, 0.0), flow, LoadRegime.LIGHT)
    assert _tr(d) == (Target.LTE, Reason.VIDEO_PIN)


@pytest.mark.parametrize("policy", ["tmax", "ee", "none-dual-static"])
def test_premium_pinned(policy):
    d = decide(policy, inp(5, 1.0, 0.0, premium=True), FTP, LoadRegime.LIGHT)
    assert _tr(d) == (Target.LTE, Reason.PREMIUM_PIN)


def test_ee_examples():
    assert _tr(decide_ee(inp(50, 0.1), FTP, LoadRegime.LIGHT)) == (Target.WLAN, Reason.WLAN_OK)
    assert _tr(decide_ee(inp(50, 0.9, 0.85), FTP, LoadRegime.MEDIUM)) == \
        (Target.LTE, Reason.WLAN_OVERLOAD)
    assert _tr(decide_ee(inp(50, 0.6, 0.70), FTP, LoadRegime.MEDIUM)) == \
        (Target.WLAN, Reason.WLAN_OK)
    assert _tr(decide_ee(inp(50, 0.4, 0.70, lte=400e3), FTP, LoadRegime.HEAVY)) == \
        (Target.LTE, Reason.BETTER_NET)
    assert _tr(decide_ee(inp(50, 0.4, 0.70, lte=100e3), FTP, LoadRegime.HEAVY)) == \
        (Target.WLAN, Reason.BETTER_NET)
    assert _tr(decide_ee(inp(61, 0.9), FTP, LoadRegime.LIGHT)) == (Target.LTE, Reason.DIST_FAIL)


def test_static_baselines():
    assert decide_static(inp(), FTP, "none-all-lte").target is Target.LTE
    assert _tr(decide_static(inp(), FTP, "none-dual-static")) == (Target.WLAN, Reason.STATIC)
    assert decide_static(inp(d=80), FTP, "none-dual-static").target is Target.LTE
    with pytest.raises(ValueError):
        decide("magic", inp(), FTP)


def test_load_regime():
    assert load_regime(36, 0.9) is LoadRegime.LIGHT
    assert load_regime(54, 0.2) is LoadRegime.LIGHT
    assert load_regime(54, 0.6) is LoadRegime.MEDIUM
    assert load_regime(81, 0.9) is LoadRegime.HEAVY


inputs = st.builds(SteeringInputs, st.floats(0, 200), st.floats(0, 2e6), st.floats(1, 2e6),
                   st.floats(0, 1), st.floats(0, 5e7), st.booleans())
regimes = st.sampled_from(list(LoadRegime))


@given(inputs, regimes, st.sampled_from([FTP, VIDEO, VOIP]))
def test_decisions_pure(i, regime, flow):
    for policy in ("tmax", "ee"):
        assert decide(policy, i, flow, regime) == decide(policy, i, flow, regime)


@given(inputs, regimes)
def test_overload_dominates(i, regime):
    if i.wlan_utilization > 0.8:
        assert decide_ee(i, FTP, regime).target is Target.LTE


@given(inputs)
def test_ratio_clamped(i):
    assert 0.0 <= i.ratio <= 1.0


def _cache(fids, bid):
    c = BindingCache()
    c.register_binding("h", "lte", 1, 1, LTE)
    c.register_binding("h", "wlan", 2, 2, WLAN)
    for f in fids:
        c.bind_flow(FlowBindingRule(f, "h", TrafficSelector(dst="h", dport=f), bid))
    return c


BIDS = {(f, t): (1 if t is Target.LTE else 2) for f in range(10) for t in Target}


def _entries(utils, current):
    return [EpochEntry(Flow.of(f, f, FlowClass.FTP), inp(30, 0.9, u), current)
            for f, u in enumerate(utils)]


def test_epoch_fixed_point_has_no_events():
    c = _cache(range(3), 2)
    ev = run_epoch("ee", _entries([0.3, 0.4, 0.5], Target.WLAN), 0, c,
                   regime=LoadRegime.MEDIUM, bids=BIDS)
    assert ev == []


def test_epoch_single_threshold_crossing():
    c = _cache(range(3), 2)
    ev = run_epoch("ee", _entries([0.3, 0.85, 0.5], Target.WLAN), 1000, c,
                   regime=LoadRegime.MEDIUM, bids=BIDS)
    assert [(e.fid, e.old_bid, e.new_bid, e.time) for e in ev] == [(1, 2, 1, 1000)]
    assert c.entry_for(1).iface == LTE


def test_epoch_all_lte_baseline_moves_everything():
    c = _cache(range(4), 2)
    ev = run_epoch("none-all-lte", _entries([0.1] * 4, Target.WLAN), 0, c, bids=BIDS)
    assert len(ev) == 4 and all(c.entry_for(f).iface == LTE for f in range(4))


def test_epoch_skips_ineligible():
    c = _cache(range(2), 2)
    es = _entries([0.9, 0.9], Target.WLAN)
    es[0].eligible = False
    log = []
    ev = run_epoch("ee", es, 0, c, regime=LoadRegime.HEAVY, bids=BIDS, log=log)
    assert [e.fid for e in ev] == [1] and len(log) == 1


def test_no_flapping_on_constant_inputs():
    c = _cache(range(5), 1)
    current = {f: Target.LTE for f in range(5)}
    switches = 0
    for epoch in range(20):
        es = [EpochEntry(Flow.of(f, f, FlowClass.FTP), inp(30, 0.9, 0.3), current[f])
              for f in range(5)]
        ev = run_epoch("tmax", es, epoch, c, bids=BIDS)
        switches += len(ev)
        for e in ev:
            current[e.fid] = Target.WLAN if e.new_bid == 2 else Target.LTE
    assert switches == 5
