import pytest
from hypothesis import given, settings, strategies as st

from ifomsim import _kernels
from ifomsim.errors import AlreadyAssociated, DomainError
from ifomsim.wlan_mac import AccessPoint, AssociationRegistry, AssociationResult


def test_idle_ap_accepts():
    ap = AccessPoint()
    assert ap.associate_flow(1, 54e6) is AssociationResult.ASSOCIATED
    assert ap.channel_utilization() == 0.0


def test_saturated_ap_rejects():
    ap = AccessPoint()
    assert ap.on_beacon(100_000, busy_total_us=97_000) == pytest.approx(0.97)
    assert ap.associate_flow(1, 54e6) is AssociationResult.REJECTED
    assert (ap.attempts, ap.rejected) == (1, 1)


def test_one_association_per_flow():
    reg = AssociationRegistry()
    a, b = AccessPoint(0, registry=reg), AccessPoint(1, registry=reg)
    a.associate_flow(7, 54e6)
    with pytest.raises(AlreadyAssociated):
        b.associate_flow(7, 54e6)
    a.disassociate(7)
    assert b.associate_flow(7, 54e6) is AssociationResult.ASSOCIATED


@pytest.mark.parametrize("backend", _kernels.available())
def test_two_backlogged_stations_share(backend):
    ap = AccessPoint(mac_efficiency=0.5, backend=backend)
    for f in (1, 2):
        ap.associate_flow(f, 54e6)
        ap.enqueue(f, 10**9)
    out = ap.serve_interval(1000.0)
    for f in (1, 2):
        assert out[f] * 8 == pytest.approx(13.5e6, rel=1e-6)


def test_light_load_utilization():
    ap = AccessPoint(mac_efficiency=0.55)
    ap.associate_flow(1, 54e6)
    delivered = 0
    for ms in range(2000):
        if ms % 32 == 0:
            ap.enqueue(1, 1024)  # 256 kb/s
        delivered += ap.serve_interval(1.0).get(1, 0)
    assert delivered == 1024 * 63
    assert ap.channel_utilization() == pytest.approx(256e3 / (0.55 * 54e6), rel=0.02)


def test_no_backlog():
    ap = AccessPoint()
    ap.associate_flow(1, 54e6)
    for _ in range(1500):
        assert ap.serve_interval(1.0) == {}
    assert ap.channel_utilization() == 0.0


def test_saturated_reports_one():
    ap = AccessPoint()
    ap.associate_flow(1, 54e6)
    ap.enqueue(1, 10**9)
    for _ in range(1200):
        ap.serve_interval(1.0)
    assert ap.channel_utilization() == pytest.approx(1.0)


def test_half_busy_window():
    ap = AccessPoint()
    for k in range(1, 11):
        u = ap.on_beacon(k * 100_000, busy_total_us=k * 50_000)
    assert u == pytest.approx(0.5)


def test_bad_interval():
    with pytest.raises(DomainError):
        AccessPoint().serve_interval(0)
    with pytest.raises(DomainError):
        AccessPoint(mac_efficiency=1.5)


def test_slow_station_gets_equal_airtime():
    ap = AccessPoint(mac_efficiency=0.5)
    ap.associate_flow(1, 54e6)
    ap.associate_flow(2, 6e6)
    for f in (1, 2):
        ap.enqueue(f, 10**9)
    out = ap.serve_interval(100.0)
    assert out[1] / out[2] == pytest.approx(9.0, rel=1e-3)


def test_fairness_equal_phy():
    ap = AccessPoint()
    fids = range(5)
    for f in fids:
        ap.associate_flow(f, 36e6)
    got = {f: 0 for f in fids}
    for _ in range(2000):
        for f in fids:
            ap.enqueue(f, 4096)
        for f, b in ap.serve_interval(1.0).items():
            got[f] += b
    lo, hi = min(got.values()), max(got.values())
    assert (hi - lo) / hi < 0.01


rates = st.lists(st.tuples(st.sampled_from([6e6, 24e6, 54e6]), st.integers(0, 20_000)),
                 min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(rates, st.integers(0, 20_000))
def test_conservation_and_monotone_utilization(stations, extra):
    def run(extra_bytes):
        ap = AccessPoint()
        for f, (phy, _) in enumerate(stations):
            ap.associate_flow(f, phy)
        total = 0
        for _ in range(300):
            for f, (_, load) in enumerate(stations):
                ap.enqueue(f, load + (extra_bytes if f == 0 else 0))
            total += sum(ap.serve_interval(1.0).values())
        return ap, total

    base, total = run(0)
    cap = 0.55 * max(p for p, _ in stations) * 0.3 / 8
    assert total <= cap + 1
    more, _ = run(extra)
    assert more.channel_utilization() >= base.channel_utilization() - 1e-12
    assert 0.0 <= base.channel_utilization() <= 1.0
