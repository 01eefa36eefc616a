"""Acceptance criteria 1-12.

Each criterion is one test; the verdict line for every criterion is printed
at the end of the pytest session (and by ``python tests/test_acceptance.py``).
Simulation-based criteria share one grid of 30 s x 5 seed runs.
"""

import filecmp
import os
import random
import statistics
import sys
import tempfile
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conftest import ACCEPTANCE  # noqa: E402
from ifomsim import _kernels  # noqa: E402
from ifomsim.channel import path_loss_lte, path_loss_wlan  # noqa: E402
from ifomsim.config import parse_config  # noqa: E402
from ifomsim.energy import LteEnergyParams, lte_energy  # noqa: E402
from ifomsim.errors import BindingInUse, UnknownBinding  # noqa: E402
from ifomsim.ifom import (LTE, WLAN, BindingCache, FlowBindingRule, RoutedPacket,  # noqa: E402
                          TrafficSelector, tunnel_overhead_pct)
from ifomsim.engine import Simulation  # noqa: E402
from ifomsim.metrics import u_sat, write_report  # noqa: E402

SEEDS = (1, 2, 3, 4, 5)
DURATION = 30.0
LOADS = ("light", "medium", "heavy")


@lru_cache(maxsize=None)
def cell(scenario, policy, load):
    """Summaries, flow tables and binding logs of the 5 seeded runs of one cell."""
    cfg = parse_config(None, {"run.scenario": str(scenario), "run.policy": policy,
                              "run.load": load, "run.duration_s": str(DURATION)})
    out = []
    for seed in SEEDS:
        rep = Simulation(cfg, seed=seed).run()
        out.append((rep.summary, rep.flows, rep.bindings))
    return tuple(out)


def mean_of(runs, key):
    return statistics.fmean(s[key] for s, _, _ in runs)


def verdict(n, ok, detail):
    ACCEPTANCE[n] = (ok, detail)
    assert ok, detail


# -------------------------------------------------------------- formulas
def test_criterion_01_lte_energy_exact():
    t0 = time.perf_counter()
    params = LteEnergyParams()
    p_idle, p_tx, alpha, p_rx = Fraction(90), Fraction(40), Fraction(427, 100), Fraction(1)
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(1000):
        t = [rng.uniform(0, 3600) for _ in range(3)]
        exact = (p_idle * Fraction(t[0]) + (p_idle + alpha * p_tx) * Fraction(t[1])
                 + (p_idle + p_rx) * Fraction(t[2]))
        got = lte_energy(params, *t)
        worst = max(worst, float(abs(Fraction(got) - exact) / exact))
    anchors = (lte_energy(params, 2, 0, 0), lte_energy(params, 0, 1, 0))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and abs(anchors[0] - 180) <= 180e-9 and \
        abs(anchors[1] - 260.8) <= 260.8e-9 and dt < 1.0
    verdict(1, ok, f"max rel err {worst:.2e}, anchors {anchors[0]:.6f} J / {anchors[1]:.6f} J, "
                   f"{dt:.2f} s")


def test_criterion_02_tunnel_overhead():
    t0 = time.perf_counter()
    v = tunnel_overhead_pct(68, 1024)
    dt = time.perf_counter() - t0
    verdict(2, v == 6.640625 and dt < 1.0, f"overhead {v!r} %")


def test_criterion_03_path_loss_and_u_sat():
    lte, wlan = path_loss_lte(0.5), path_loss_wlan(0.06)
    u = u_sat([1.0, 2.0, 3.0], 3.0)
    ok = abs(lte - 116.781) <= 1e-3 and abs(wlan - 95.858) <= 1e-3 and u == 2 / 3
    verdict(3, ok, f"PL_lte(0.5 km) {lte:.4f} dB, PL_wlan(60 m) {wlan:.4f} dB, u_sat {u!r}")


# -------------------------------------------------------------- protocol
def _binding_sequence(rng, violations):
    cache = BindingCache()
    hoa = f"h{rng.randrange(3)}"
    cache.register_binding(hoa, "coa-lte", 1, 1, LTE)
    cache.register_binding(hoa, "coa-wlan", 2, 2, WLAN)
    live = {1: LTE, 2: WLAN}
    shadow = {}
    for _ in range(rng.randint(4, 12)):
        op = rng.random()
        fid = rng.randrange(4)
        bid = rng.randrange(1, 4)
        if op < 0.25:
            if bid in live:
                cache.bind_flow(FlowBindingRule(fid, hoa, TrafficSelector(dst=hoa, dport=fid),
                                                bid))
                shadow[fid] = bid
        elif op < 0.5:
            if fid in shadow and bid in live:
                cache.switch_flow(fid, bid)
                shadow[fid] = bid
        elif op < 0.6:
            in_use = bid in shadow.values()
            try:
                cache.deregister_binding(hoa, bid)
                if in_use or bid not in live:
                    violations.append("deregistered a binding still referenced")
                del live[bid]
            except BindingInUse:
                if not in_use:
                    violations.append("spurious BindingInUse")
            except UnknownBinding:
                if bid in live:
                    violations.append("spurious UnknownBinding")
        elif op < 0.7:
            iface = LTE if bid != 2 else WLAN
            if not any(v == iface and b != bid for b, v in live.items()):
                cache.register_binding(hoa, f"coa-{bid}", bid, bid, iface)
                live[bid] = iface
        # route every bound flow and audit the cache
        for f, b in shadow.items():
            egress, size = cache.route_packet(RoutedPacket(hoa, 1000, dport=f))
            if egress != live[b]:
                violations.append(f"stale route for flow {f}")
            if size != 1000 + (68 if egress == WLAN else 0):
                violations.append("wrong on-air size")
        fids = [f for row in cache.snapshot() for f in row[5].split(";") if f]
        if len(fids) != len(set(fids)) or len(fids) != len(cache.rules):
            violations.append("flow bound to more than one binding")
        for r in cache.rules.values():
            if (r.hoa, r.bid) not in cache.entries:
                violations.append("rule targets a missing binding")
        try:
            cache.check_invariants()
        except AssertionError as e:
            violations.append(str(e))


def test_criterion_04_binding_invariants():
    t0 = time.perf_counter()
    rng = random.Random(4)
    violations = []
    for _ in range(100_000):
        _binding_sequence(rng, violations)
    dt = time.perf_counter() - t0
    verdict(4, not violations and dt < 30.0,
            f"{len(violations)} violations over 1e5 sequences in {dt:.1f} s"
            + (f"; first: {violations[0]}" if violations else ""))


# -------------------------------------------------------------- simulation
def test_criterion_05_scenario1_qos():
    worst_voip, worst_lat, worst_ftp = np.inf, 0.0, np.inf
    for load in LOADS:
        for _, flows, _ in cell(1, "none-dual-static", load):
            for r in flows:
                if r["category"] == "background" or r["blocked"]:
                    continue
                if r["cls"] == "voip":
                    worst_voip = min(worst_voip, r["goodput_bps"])
                    worst_lat = max(worst_lat, r["mean_latency_ms"])
                elif load == "light":
                    worst_ftp = min(worst_ftp, r["goodput_bps"])
    ok = worst_voip >= 12_000 and worst_lat < 50.0 and worst_ftp > 128_000
    verdict(5, ok, f"min VoIP {worst_voip / 1e3:.2f} kb/s, max VoIP mean latency "
                   f"{worst_lat:.1f} ms, min light FTP {worst_ftp / 1e3:.1f} kb/s")


def test_criterion_06_dual_energy_gain():
    e_lte = mean_of(cell(2, "none-all-lte", "medium"), "mean_ieu_ftp_energy_j")
    e_wlan = mean_of(cell(2, "none-dual-static", "medium"), "mean_ieu_ftp_energy_j")
    gain = (e_lte - e_wlan) / e_lte
    verdict(6, gain >= 0.20, f"FTP energy LTE {e_lte:.2f} J vs WLAN {e_wlan:.2f} J, "
                             f"gain {100 * gain:.1f} %")


def test_criterion_07_tmax_throughput_gain():
    t = mean_of(cell(2, "tmax", "heavy"), "mean_ieu_throughput_bps")
    d = mean_of(cell(2, "none-dual-static", "heavy"), "mean_ieu_throughput_bps")
    gain = t / d - 1.0
    verdict(7, gain >= 0.15, f"heavy: tmax {t / 1e6:.3f} vs dual-static {d / 1e6:.3f} Mb/s, "
                             f"gain {100 * gain:.1f} % (need >= 15 %)")


def test_criterion_08_ee_tradeoff():
    parts, ok = [], True
    for load in LOADS:
        te = mean_of(cell(2, "ee", load), "mean_ieu_throughput_bps")
        tt = mean_of(cell(2, "tmax", load), "mean_ieu_throughput_bps")
        ee = mean_of(cell(2, "ee", load), "mean_ieu_energy_j")
        et = mean_of(cell(2, "tmax", load), "mean_ieu_energy_j")
        dthr = abs(te - tt) / tt
        saving = (et - ee) / et
        ok &= dthr <= 0.10
        if load != "heavy":
            ok &= saving >= 0.10
        parts.append(f"{load}: dthr {100 * dthr:.1f} %, saving {100 * saving:.1f} %")
    verdict(8, ok, "; ".join(parts))


def test_criterion_09_loss_and_blocking():
    parts, ok = [], True
    for pol in ("tmax", "ee"):
        for load in LOADS:
            runs = cell(2, pol, load)
            loss = max(s["loss_fraction"] for s, _, _ in runs)
            blk = mean_of(runs, "blocking_probability")
            if load != "heavy":
                ok &= loss == 0.0
            ok &= blk < 0.05
            parts.append(f"{pol}/{load} loss {loss:.4f} blk {blk:.3f}")
    verdict(9, ok, "; ".join(parts))


def test_criterion_10_video_latency():
    worst = 0.0
    for pol in ("tmax", "ee"):
        for load in LOADS:
            for _, flows, _ in cell(2, pol, load):
                for r in flows:
                    if r["cls"] == "video" and not r["blocked"]:
                        worst = max(worst, r["mean_latency_ms"])
    verdict(10, worst < 100.0, f"max video mean latency {worst:.1f} ms")


def test_criterion_11_determinism_and_oracle():
    from test_oracle_table import load_table
    cfg = parse_config(None, {"run.scenario": "2", "run.policy": "ee", "run.load": "heavy",
                              "run.duration_s": "10", "trace.packets": "true"})
    with tempfile.TemporaryDirectory() as tmp:
        for name in ("a", "b"):
            write_report(Simulation(cfg, seed=7).run(), os.path.join(tmp, name), bindings=True)
        names = sorted(os.listdir(os.path.join(tmp, "a")))
        _, mismatch, errors = filecmp.cmpfiles(os.path.join(tmp, "a"), os.path.join(tmp, "b"),
                                               names, shallow=False)
    table = load_table()
    bad = {}
    for be in _kernels.available():
        mod = _kernels.get_backend(be)
        bad[be] = sum(list(mod.allocate_prbs(*a)) != w for a, w in table)
    ok = not mismatch and not errors and not any(bad.values())
    verdict(11, ok, f"{len(names)} output files identical: {not mismatch}; oracle mismatches "
                    + ", ".join(f"{k} {v}/{len(table)}" for k, v in bad.items()))


ALL_CELLS = ([(1, "none-dual-static", l) for l in LOADS]
             + [(2, "none-all-lte", "medium"), (2, "none-dual-static", "medium"),
                (2, "none-dual-static", "heavy")]
             + [(2, p, l) for p in ("tmax", "ee") for l in LOADS])


def test_criterion_12_pins():
    bad, scanned, runs = 0, 0, 0
    for key in ALL_CELLS:
        for _, flows, log in cell(*key):
            runs += 1
            state = {}
            for _t, f, _u, iface, _ev in log:
                state[f] = iface
                scanned += 1
                r = flows[f]
                if iface == 1 and (r["cls"] != "ftp" or r["premium"]):
                    bad += 1
            # the end state is an instant too
            for f, iface in state.items():
                if iface == 1 and (flows[f]["cls"] != "ftp" or flows[f]["premium"]):
                    bad += 1
    verdict(12, bad == 0, f"{bad} pinned-flow WLAN bindings in {scanned} binding events "
                          f"over {runs} runs")


if __name__ == "__main__":
    tests = sorted(n for n in dir() if n.startswith("test_criterion_"))
    for name in tests:
        try:
            globals()[name]()
        except AssertionError:
            pass
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    sys.exit(0 if all(ok for ok, _ in ACCEPTANCE.values()) else 1)
