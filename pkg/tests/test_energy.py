from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ifomsim.energy import (EnergyLedger, LteEnergyParams, WlanEnergyParams,
                            attribute_flow_energy, energy_gain, lte_energy, wlan_energy)
from ifomsim.errors import DomainError

LTE = LteEnergyParams()
WLAN = WlanEnergyParams()


def test_lte_anchors(derived):
    assert lte_energy(LTE, 2, 0, 0) == derived["lte_energy_idle_2s_J"] == 180.0
    assert lte_energy(LTE, 0, 1, 0) == pytest.approx(derived["lte_energy_tx_1s_J"], rel=1e-12)
    assert lte_energy(LTE, 0, 0, 0) == 0.0
    assert lte_energy(LTE, 0, 0, 1) == pytest.approx(91.0)


def test_lte_negative_time():
    with pytest.raises(DomainError):
        lte_energy(LTE, -1, 0, 0)


def test_wlan_anchors(derived):
    assert wlan_energy(WLAN, {"tx": 1.0}) == pytest.approx(derived["wlan_energy_tx_1s_J"])
    assert wlan_energy(WLAN, {"sleep": 10.0}) == pytest.approx(derived["wlan_energy_sleep_10s_J"])
    assert wlan_energy(WLAN, {}) == 0.0
    assert wlan_energy(WLAN, {s: 0.0 for s in ("tx", "rx", "idle", "sleep")}) == 0.0
    with pytest.raises(DomainError):
        wlan_energy(WLAN, {"rx": -1})
    with pytest.raises(DomainError):
        wlan_energy(WLAN, {"doze": 1})


def test_params_validated():
    with pytest.raises(DomainError):
        LteEnergyParams(p_idle=0)
    with pytest.raises(DomainError):
        WlanEnergyParams(i_tx=0.1)


times = st.floats(0, 1e4, allow_nan=False)


@given(times, times, times)
def test_lte_matches_exact_arithmetic(a, b, c):
    exact = (Fraction(90) * Fraction(a) + (Fraction(90) + Fraction(427, 100) * 40) * Fraction(b)
             + (Fraction(90) + Fraction(1)) * Fraction(c))
    got = lte_energy(LTE, a, b, c)
    assert abs(Fraction(got) - exact) <= Fraction(1, 10**9) * max(exact, Fraction(1))


@given(times, times, times, times, times, times)
def test_lte_additive(a1, b1, c1, a2, b2, c2):
    whole = lte_energy(LTE, a1 + a2, b1 + b2, c1 + c2)
    parts = lte_energy(LTE, a1, b1, c1) + lte_energy(LTE, a2, b2, c2)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-9)


@given(times, times, times, st.integers(0, 2), st.floats(0, 100))
def test_lte_monotone(a, b, c, which, extra):
    t = [a, b, c]
    more = list(t)
    more[which] += extra
    assert lte_energy(LTE, *more) >= lte_energy(LTE, *t)


def test_energy_gain():
    assert energy_gain(48, 120) == pytest.approx(0.60)
    assert energy_gain(100, 100) == 0.0
    assert energy_gain(0, 50) == 1.0
    for bad in (0, -5):
        with pytest.raises(DomainError):
            energy_gain(1, bad)


def test_attribution_examples():
    assert attribute_flow_energy(10.0, 4.0, {1: 5.0}) == {1: 14.0}
    two = attribute_flow_energy(10.0, 0.0, {1: 2.0, 2: 2.0})
    assert two == {1: 5.0, 2: 5.0}
    split = attribute_flow_energy(8.0, 0.0, {1: 3.0, 2: 1.0})
    assert split[1] == pytest.approx(6.0) and split[2] == pytest.approx(2.0)
    idle_only = attribute_flow_energy(0.0, 9.0, {}, admitted=[1, 2, 3])
    assert idle_only == {1: 3.0, 2: 3.0, 3: 3.0}


@given(st.floats(0, 1e3), st.floats(0, 1e3),
       st.dictionaries(st.integers(0, 9), st.floats(1e-6, 1e3), min_size=1))
def test_attribution_conserves(active, idle, usage):
    out = attribute_flow_energy(active, idle, usage)
    assert sum(out.values()) == pytest.approx(active + idle, rel=1e-12, abs=1e-9)


def test_ledger():
    led = EnergyLedger()
    led.charge(3, active=1.5, idle=0.5)
    led.charge(3, active=1.0)
    assert led.flow_total(3) == 3.0
    assert led.flow_total(3, with_idle=False) == 2.5
    assert led.flow_total(4) == 0.0
    acct = led.account("enb0", "lte")
    acct.t_tx += 1.0
    assert led.account("enb0", "lte").t_tx == 1.0
