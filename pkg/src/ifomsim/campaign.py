"""Batch runs over a policy x load grid with replications and a comparison table."""

from __future__ import annotations

import json
import logging
import os
import statistics

from .config import ScenarioConfig, write_echo
from .engine import Simulation
from .metrics import write_csv, cdf, write_report

log = logging.getLogger(__name__)

# summary keys aggregated across replications, with their column names
SCALARS = (
    ("mean_ieu_throughput_bps", "throughput_bps"),
    ("mean_ieu_energy_j", "energy_j"),
    ("mean_ieu_ftp_energy_j", "ftp_energy_j"),
    ("u_sat", "u_sat"),
    ("blocking_probability", "blocking"),
    ("loss_fraction", "loss"),
    ("header_overhead_pct", "header_overhead_pct"),
    ("switches", "switches"),
)
LATENCY = ("p50_latency_ms", "p95_latency_ms", "max_mean_latency_ms")


def _flatten(summary: dict) -> dict:
    row = {col: float(summary[key]) for key, col in SCALARS}
    for cls, stats in summary["classes"].items():
        for k in LATENCY:
            row[f"{cls}_{k}"] = float(stats[k])
    return row


def mean_std(values) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (0 for one value)."""
    vals = [float(v) for v in values]
    if not vals:
        return 0.0, 0.0
    m = statistics.fmean(vals)
    return m, (statistics.stdev(vals) if len(vals) > 1 else 0.0)


def cell_name(policy: str, load) -> str:
    return f"{policy}_{load}"


def run_cell(cfg: ScenarioConfig, policy: str, load, seeds, outdir: str, *,
             bindings: bool = False) -> dict:
    """Run one grid cell for every seed; returns the aggregate record."""
    cell_cfg = cfg.replace(run__policy=policy, run__load=str(load))
    os.makedirs(outdir, exist_ok=True)
    write_echo(os.path.join(outdir, "config.ini"), cell_cfg)
    rows, thr, energy = [], [], []
    for i, seed in enumerate(seeds):
        rep = Simulation(cell_cfg, seed=seed).run()
        write_report(rep, os.path.join(outdir, f"run_{i:02d}"), bindings=bindings)
        row = _flatten(rep.summary)
        row["seed"] = seed
        rows.append(row)
        thr += [u["throughput_bps"] for u in rep.ieus]
        energy += [u["energy_j"] for u in rep.ieus]
        log.info("cell %s seed %d: %.0f b/s", cell_name(policy, load), seed,
                 row["throughput_bps"])
    cols = [c for c in rows[0] if c != "seed"]
    write_csv(os.path.join(outdir, "runs.csv"), ["seed"] + cols,
              ([r["seed"]] + [r[c] for c in cols] for r in rows))
    agg = {"policy": policy, "load": str(load), "reps": len(rows)}
    for c in cols:
        m, sd = mean_std(r[c] for r in rows if c in r)
        agg[c] = m
        agg[c + "_std"] = sd
    if thr:
        write_csv(os.path.join(outdir, "cdf_throughput.csv"), ("throughput_bps", "fraction"),
                  cdf(thr))
        write_csv(os.path.join(outdir, "cdf_energy.csv"), ("energy_j", "fraction"), cdf(energy))
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(agg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return agg


def _add_gains(cells: list[dict], reference: str) -> None:
    ref = {c["load"]: c for c in cells if c["policy"] == reference}
    for c in cells:
        r = ref.get(c["load"])
        if r is None or "throughput_bps" not in c:
            c["throughput_gain"] = c["energy_gain"] = ""
            continue
        t0, e0 = r["throughput_bps"], r["energy_j"]
        c["throughput_gain"] = (c["throughput_bps"] - t0) / t0 if t0 else 0.0
        # energy-efficiency gain (E2 - E1) / E2 against the reference policy
        c["energy_gain"] = (e0 - c["energy_j"]) / e0 if e0 else 0.0


def run_campaign(cfg: ScenarioConfig, policies, loads, replications: int, out: str, *,
                 reference: str = "none-all-lte", bindings: bool = False) -> list[dict]:
    """Run the policy x load grid and write the per-cell and comparison files.

    A cell whose run raises is abandoned and the error recorded in
    ``campaign.log``; the remaining cells still run.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    os.makedirs(out, exist_ok=True)
    seeds = [cfg.run.seed + i for i in range(replications)]
    handler = logging.FileHandler(os.path.join(out, "campaign.log"), mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    cells = []
    try:
        for policy in policies:
            for load in loads:
                name = cell_name(policy, load)
                try:
                    cells.append(run_cell(cfg, policy, load, seeds, os.path.join(out, name),
                                          bindings=bindings))
                except Exception as exc:  # noqa: BLE001 - recorded, campaign continues
                    log.error("cell %s aborted: %s: %s", name, type(exc).__name__, exc)
                    cells.append({"policy": policy, "load": str(load), "reps": 0,
                                  "error": f"{type(exc).__name__}: {exc}"})
    finally:
        log.removeHandler(handler)
        handler.close()
    _add_gains(cells, reference)
    cols = ["policy", "load", "reps"]
    for c in cells:
        for k in c:
            if k not in cols:
                cols.append(k)
    write_csv(os.path.join(out, "comparison.csv"), cols,
              ([c.get(k, "") for k in cols] for c in cells))
    return cells
