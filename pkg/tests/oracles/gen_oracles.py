"""Regenerate the frozen oracle files in this directory.

Nothing here imports ifomsim.  The allocation table is built by handing out
PRBs one at a time, which is a different procedure from the batched
water-fill the scheduler kernels use; derived constants are evaluated with
exact fractions or plain math from the model constants.

    python tests/oracles/gen_oracles.py
"""

import csv
import gzip
import itertools
import json
import math
import os
from fractions import Fraction

HERE = os.path.dirname(os.path.abspath(__file__))

# bearer kinds: (label, is_gbr, gbr bits per TTI); listed in scheduling priority
KINDS = (("voip", 1, 13), ("video", 1, 1500), ("bulk_gbr", 1, 12000), ("best_effort", 0, 0))
QUEUES = (0, 700, 60000)
BPPS = (251, 960)
SETTINGS = ((50, 0), (4, 0), (4, 1), (4, 2), (12, 5))


def ceil_div(a, b):
    return -(-a // b)


def oracle_alloc(bearers, nprb, rr):
    """bearers: list of (is_gbr, gbr_bits, queued_bits, bpp, hol)."""
    need = []
    for is_gbr, g, q, b, hol in bearers:
        if q <= 0:
            need.append(0)
        elif hol:
            need.append(ceil_div(q, b))
        else:
            need.append(q // b)
    alloc = [0] * len(bearers)
    free = nprb
    # guaranteed share, strictly in list order, one PRB at a time
    for i, (is_gbr, g, q, b, hol) in enumerate(bearers):
        if not is_gbr:
            continue
        target = min(ceil_div(g, b), need[i])
        while alloc[i] < target and free > 0:
            alloc[i] += 1
            free -= 1
    # best effort: PRB-by-PRB round robin starting at a rotated position
    ring = [i for i, br in enumerate(bearers) if not br[0] and need[i] > 0]
    if ring:
        k = rr % len(ring)
        ring = ring[k:] + ring[:k]
        pos = 0
        while free > 0 and any(alloc[i] < need[i] for i in ring):
            i = ring[pos % len(ring)]
            if alloc[i] < need[i]:
                alloc[i] += 1
                free -= 1
            pos += 1
    # leftovers back to guaranteed bearers that still hold data
    for i, br in enumerate(bearers):
        if br[0]:
            while alloc[i] < need[i] and free > 0:
                alloc[i] += 1
                free -= 1
    return alloc


def bearer_states():
    for kind in range(len(KINDS)):
        for bpp in BPPS:
            for q in QUEUES:
                for hol in ((0, 1) if q > 0 else (0,)):
                    yield kind, q, bpp, hol


def instances():
    states = list(bearer_states())
    for n in range(4):
        for combo in itertools.product(states, repeat=n):
            kinds = [c[0] for c in combo]
            if kinds != sorted(kinds):
                continue
            yield combo


def encode(combo):
    return ";".join(f"{KINDS[k][0]}:{q}:{b}:{h}" for k, q, b, h in combo)


def write_alloc_table(path):
    rows = 0
    with gzip.open(path, "wt", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nprb", "rr", "bearers", "alloc"])
        for combo in instances():
            br = [(KINDS[k][1], KINDS[k][2], q, b, h) for k, q, b, h in combo]
            for nprb, rr in SETTINGS:
                alloc = oracle_alloc(br, nprb, rr)
                w.writerow([nprb, rr, encode(combo), ";".join(map(str, alloc))])
                rows += 1
    return rows


def derived_values():
    p_idle, p_tx, alpha = Fraction(90), Fraction(40), Fraction(427, 100)
    v = Fraction(3)
    return {
        "lte_energy_idle_2s_J": float(p_idle * 2),
        "lte_energy_tx_1s_J": float(p_idle + alpha * p_tx),
        "wlan_energy_tx_1s_J": float(v * Fraction(380, 1000)),
        "wlan_energy_sleep_10s_J": float(v * Fraction(33, 1000) * 10),
        "tunnel_overhead_pct_68_1024": float(Fraction(68, 1024) * 100),
        "tunnel_overhead_pct_24_1024": float(Fraction(24, 1024) * 100),
        "pl_lte_0p5km_dB": 128.1 + 37.6 * math.log10(0.5),
        "pl_lte_0p035km_dB": 128.1 + 37.6 * math.log10(0.035),
        "pl_wlan_0p06km_dB": 140.7 + 36.7 * math.log10(0.06),
        "pl_wlan_0p01km_dB": 140.7 + 36.7 * math.log10(0.01),
        "antenna_70deg_dB": -min(12 * (70 / 70) ** 2, 25),
        "antenna_180deg_dB": -min(12 * (180 / 70) ** 2, 25),
        "lte_cap_10MHz_bps": 4.8 * 10e6,
        "energy_gain_48_120": float((Fraction(120) - 48) / 120),
        "u_sat_123_over_3": float(Fraction(1 + 2 + 3, 3 * 3)),
        "cbr_interarrival_voip_ms": float(Fraction(33 * 8 * 1000, 12200)),
        "cbr_interarrival_video_ms": float(Fraction(250 * 8 * 1000, 1_500_000)),
        "cbr_interarrival_ftp512_ms": float(Fraction(1024 * 8 * 1000, 512_000)),
        "wlan_share_2sta_54M_eff05_bps": 54e6 * 0.5 / 2,
    }


if __name__ == "__main__":
    n = write_alloc_table(os.path.join(HERE, "alloc_table.csv.gz"))
    with open(os.path.join(HERE, "derived_values.json"), "w") as fh:
        json.dump(derived_values(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{n} allocation rows")
