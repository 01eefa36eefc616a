"""Run reports: per-flow and per-user counters, derived metrics, file output."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .topology import Category, write_deployment
from ._kernels import NBINS


@dataclass
class RunReport:
    meta: dict
    flows: list = field(default_factory=list)
    ieus: list = field(default_factory=list)
    attempts: int = 0
    rejections: int = 0
    summary: dict = field(default_factory=dict)
    energy_rows: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    switch_events: list = field(default_factory=list)
    bindings: list = field(default_factory=list)
    allocations: list = field(default_factory=list)
    packets: np.ndarray | None = None
    links: list = field(default_factory=list)
    config_text: str = ""
    deployment: tuple | None = None

    def flow(self, fid: int) -> dict:
        return self.flows[fid]


# ----------------------------------------------------------------- metrics
def throughput(obj, report: RunReport | None = None) -> float:
    """On-time payload bits per measured second for a flow row, flow id, or user id.

    A flow id is looked up in ``report``; a ``("user", id)`` tuple sums the
    user's flows.
    """
    if isinstance(obj, dict):
        return float(obj["goodput_bps"])
    if isinstance(obj, tuple) and obj[0] == "user":
        return sum(r["goodput_bps"] for r in report.flows if r["user"] == obj[1])
    return float(report.flows[int(obj)]["goodput_bps"])


def blocking_probability(report) -> float:
    attempts = report.attempts if isinstance(report, RunReport) else report[1]
    rejected = report.rejections if isinstance(report, RunReport) else report[0]
    if attempts <= 0:
        raise DomainError("blocking probability needs at least one admission attempt")
    return rejected / attempts


def u_sat(report, t_max: float) -> float:
    """Sum of per-user throughput over ``t_max`` times the number of users."""
    values = [u["throughput_bps"] for u in report.ieus] if isinstance(report, RunReport) \
        else list(report)
    if not values:
        raise DomainError("user satisfaction needs at least one user")
    if not t_max > 0:
        raise DomainError(f"t_max must be positive, got {t_max}")
    return sum(values) / (t_max * len(values))


def cdf(values) -> list[tuple[float, float]]:
    """Empirical CDF as (value, fraction <= value) at each distinct value."""
    vals = sorted(values)
    if not vals:
        raise DomainError("cdf of an empty sample")
    n = len(vals)
    out = []
    for i, v in enumerate(vals):
        if i + 1 < n and vals[i + 1] == v:
            continue
        out.append((v, (i + 1) / n))
    return out


def _percentile_ms(hist_row, q: float) -> float:
    total = int(hist_row.sum())
    if total == 0:
        return 0.0
    target = q * total
    acc = 0
    for b in range(NBINS):
        acc += int(hist_row[b])
        if acc >= target:
            return float(b + 1)  # upper edge of the 1 ms bin
    return float(NBINS)


# ------------------------------------------------------------ construction
def build_report(sim) -> RunReport:
    st = sim.st
    cfg = sim.cfg
    ms = sim.measure_s
    lp, wp = sim.lte_params, sim.wlan_params
    v = wp.supply_voltage
    e_tx_lte = lp.p_idle + lp.alpha * lp.p_tx
    flows = []
    energy_rows = []
    for f, m in enumerate(sim.meta):
        fl = m.flow
        gen = int(st["f_acc_hi"][f] - st["f_acc_lo"][f])
        ontime = int(st["s_ontime"][f])
        late = int(st["s_late"][f])
        drop = int(st["s_drop"][f])
        delivered = ontime + late
        prb_s = st["e_prb_us"][f] / 1e6
        rx_s = st["e_rx_us"][f] / 1e6
        air_s = st["e_air_us"][f] / 1e6
        idle_lte_s = sim.idle_share_us[f, 0] / 1e6
        idle_ap_s = sim.idle_share_us[f, 1] / 1e6
        node_idle_s = max(0.0, sim.attached_meas_us[f, 1] / 1e6 - air_s)
        lte_active = e_tx_lte * prb_s + lp.p_rx * rx_s
        lte_idle = lp.p_idle * idle_lte_s
        wlan_active = v * wp.i_tx * air_s + v * wp.i_rx * air_s
        wlan_idle = v * wp.i_idle * idle_ap_s + v * wp.i_idle * node_idle_s
        active = lte_active + wlan_active
        idle = lte_idle + wlan_idle
        row = {
            "fid": f, "user": m.user, "category": m.category.value, "cls": fl.cls.value,
            "qci": fl.qci, "premium": m.premium, "interferer": m.interferer,
            "sector": m.sector, "ap": m.ap, "rate_bps": fl.data_rate,
            "iface_final": {-1: "none", 0: "lte", 1: "wlan"}[int(st["f_iface"][f])],
            "blocked": m.blocked, "switches": m.switches,
            "generated": gen, "ontime": ontime, "late": late, "dropped": drop,
            "in_flight": gen - delivered - drop,
            "goodput_bps": ontime * fl.packet_bits / ms if ms > 0 else 0.0,
            "loss_fraction": (gen - ontime) / gen if gen else 0.0,
            "mean_latency_ms": st["s_lat_sum"][f] / delivered / 1000.0 if delivered else 0.0,
            "max_latency_ms": st["s_lat_max"][f] / 1000.0,
            "p50_latency_ms": _percentile_ms(st["s_hist"][f], 0.5),
            "p95_latency_ms": _percentile_ms(st["s_hist"][f], 0.95),
            "header_bytes": int(st["s_hdr"][f]),
            "energy_active_j": active, "energy_idle_j": idle, "energy_j": active + idle,
            "lte_energy_j": lte_active + lte_idle, "wlan_energy_j": wlan_active + wlan_idle,
        }
        flows.append(row)
        if prb_s or rx_s or idle_lte_s:
            energy_rows.append((m.user, "lte", f, lte_active, lte_idle, prb_s, rx_s, idle_lte_s))
        if air_s or idle_ap_s or node_idle_s:
            energy_rows.append((m.user, "wlan", f, wlan_active, wlan_idle, air_s, air_s,
                                idle_ap_s + node_idle_s))

    ieus = []
    by_user: dict[int, list] = {}
    for r in flows:
        by_user.setdefault(r["user"], []).append(r)
    for u in sim.users:
        if not u.category.is_ieu:
            continue
        rows = by_user.get(u.id, [])
        ftp = [r for r in rows if r["cls"] == "ftp"]
        rt = [r for r in rows if r["cls"] != "ftp"]
        ieus.append({
            "user": u.id, "category": u.category.value, "premium": u.premium,
            "sector": u.home_sector,
            "throughput_bps": sum(r["goodput_bps"] for r in rows),
            "t_max_bps": sum(r["rate_bps"] for r in rows),
            "energy_j": sum(r["energy_j"] for r in rows),
            "energy_active_j": sum(r["energy_active_j"] for r in rows),
            "ftp_energy_j": sum(r["energy_j"] for r in ftp),
            "ftp_energy_active_j": sum(r["energy_active_j"] for r in ftp),
            "rt_energy_j": sum(r["energy_j"] for r in rt),
            "ftp_iface": ftp[0]["iface_final"] if ftp else "none",
            "ftp_throughput_bps": sum(r["goodput_bps"] for r in ftp),
            "rt_throughput_bps": sum(r["goodput_bps"] for r in rt),
        })

    rep = RunReport(
        meta={
            "seed": sim.seed, "policy": sim.policy, "scenario": cfg.run.scenario,
            "load": str(cfg.run.load), "n_ieus": cfg.n_ieus, "drop": sim.drop_mode,
            "duration_s": cfg.run.duration_s, "warmup_s": cfg.run.warmup_s,
            "measure_s": ms, "backend": sim.backend,
        },
        flows=flows, ieus=ieus, attempts=sim.attempts, rejections=sim.rejections,
        energy_rows=energy_rows, decisions=list(sim.decisions),
        switch_events=list(sim.switch_events), bindings=list(sim.bindings_log),
        allocations=list(sim.alloc_log),
        packets=np.concatenate(sim.trace_chunks) if sim.trace_chunks else None,
    )
    rep.summary = summarize(rep, sim)
    if cfg.trace.links:
        rep.links = link_rows(sim)
    from .config import echo
    rep.config_text = echo(cfg)
    rep.deployment = (sim.dep, sim.users)
    return rep


def _mean(xs):
    xs = list(xs)
    return sum(xs) / len(xs) if xs else 0.0


def summarize(rep: RunReport, sim) -> dict:
    st = sim.st
    cfg = sim.cfg
    ieu_flows = [r for r in rep.flows if r["category"] != Category.BACKGROUND.value]
    # loss is a property of admitted traffic; blocked flows show up in blocking
    admitted = [r for r in ieu_flows if not r["blocked"]]
    gen = sum(r["generated"] for r in admitted)
    ontime = sum(r["ontime"] for r in admitted)
    gen_all = sum(r["generated"] for r in ieu_flows)
    ontime_all = sum(r["ontime"] for r in ieu_flows)
    by_cls = {}
    for cls in ("voip", "video", "ftp"):
        rows = [r for r in ieu_flows if r["cls"] == cls]
        if rows:
            served = [r for r in rows if not r["blocked"]]
            by_cls[cls] = {
                "flows": len(rows),
                "blocked": len(rows) - len(served),
                "mean_goodput_bps": _mean(r["goodput_bps"] for r in served),
                "min_goodput_bps": min((r["goodput_bps"] for r in served), default=0.0),
                "mean_latency_ms": _mean(r["mean_latency_ms"] for r in served),
                "max_mean_latency_ms": max((r["mean_latency_ms"] for r in served), default=0.0),
                "on_wlan": sum(1 for r in rows if r["iface_final"] == "wlan"),
            }
            hist = sum((st["s_hist"][r["fid"]] for r in served), np.zeros(NBINS, np.int64))
            by_cls[cls]["p50_latency_ms"] = _percentile_ms(hist, 0.5)
            by_cls[cls]["p95_latency_ms"] = _percentile_ms(hist, 0.95)
    t_max = max((u["t_max_bps"] for u in rep.ieus), default=0.0)
    hdr = sum(r["header_bytes"] for r in rep.flows)
    # payload bytes of the packets that carried a tunnel header
    wlan_payload = sum(r["header_bytes"] // m.header * m.flow.packet_size
                       for r, m in zip(rep.flows, sim.meta) if m.header and r["header_bytes"])
    # energy conservation: transmitter totals versus attributed shares
    lp, wp = sim.lte_params, sim.wlan_params
    v = wp.supply_voltage
    ms = sim.measure_s
    prb_time = st["sec_prb_meas"] * (sim.tti_us / cfg.lte.prbs) / 1e6
    lte_total = float(np.sum((lp.p_idle + lp.alpha * lp.p_tx) * prb_time
                             + lp.p_idle * (ms - prb_time)))
    busy = st["ap_busy_meas"] / 1e6
    wlan_total = float(np.sum(v * wp.i_tx * busy + v * wp.i_idle * (ms - busy)))
    lte_attr = float(sum((lp.p_idle + lp.alpha * lp.p_tx) * st["e_prb_us"][f] / 1e6
                         + lp.p_idle * sim.idle_share_us[f, 0] / 1e6
                         for f in range(len(rep.flows))))
    lte_attr += float(lp.p_idle * st["sec_idle_unatt"].sum() / 1e6)
    wlan_attr = float(sum(v * wp.i_tx * st["e_air_us"][f] / 1e6
                          + v * wp.i_idle * sim.idle_share_us[f, 1] / 1e6
                          for f in range(len(rep.flows))))
    wlan_attr += float(v * wp.i_idle * st["ap_idle_unatt"].sum() / 1e6)
    pins = 0
    for (_t, f, _u, iface, _ev) in rep.bindings:
        r = rep.flows[f]
        if iface == 1 and (r["cls"] != "ftp" or r["premium"]):
            pins += 1
    return {
        "n_ieus": len(rep.ieus),
        "mean_ieu_throughput_bps": _mean(u["throughput_bps"] for u in rep.ieus),
        "mean_ieu_energy_j": _mean(u["energy_j"] for u in rep.ieus),
        "mean_ieu_energy_active_j": _mean(u["energy_active_j"] for u in rep.ieus),
        "mean_ieu_ftp_energy_j": _mean(u["ftp_energy_j"] for u in rep.ieus),
        "mean_ieu_ftp_energy_active_j": _mean(u["ftp_energy_active_j"] for u in rep.ieus),
        "u_sat": u_sat(rep, t_max) if rep.ieus and t_max > 0 else 0.0,
        "t_max_bps": t_max,
        "attempts": rep.attempts,
        "rejections": rep.rejections,
        "lte_blocked": sim.lte_blocked,
        "wlan_rejected": sim.wlan_rejected,
        "blocking_probability": rep.rejections / rep.attempts if rep.attempts else 0.0,
        "loss_fraction": (gen - ontime) / gen if gen else 0.0,
        "loss_fraction_with_blocked": (gen_all - ontime_all) / gen_all if gen_all else 0.0,
        "starved_flows": sum(1 for r in ieu_flows if r["generated"] and r["ontime"] == 0),
        "classes": by_cls,
        "header_bytes": hdr,
        "header_overhead_pct": 100.0 * hdr / wlan_payload if wlan_payload else 0.0,
        "switches": len(rep.switch_events),
        "pin_violations": pins,
        "ftp_on_wlan": sum(1 for u in rep.ieus if u["ftp_iface"] == "wlan"),
        "energy_lte_total_j": lte_total,
        "energy_lte_attributed_j": lte_attr,
        "energy_wlan_total_j": wlan_total,
        "energy_wlan_attributed_j": wlan_attr,
    }


def link_rows(sim) -> list:
    rows = []
    ch = sim.channel
    for u in sim.users:
        s = ch.lte_sinr(u.id, u.home_sector, [0] * len(sim.dep.sectors))
        rows.append((u.id, u.home_sector, s.sinr_db, s.achievable_rate,
                     float(sim.plan_rate[u.id]), int(ch.wap_of[u.id]),
                     float(ch.wap_dist[u.id]), float(ch.wlan_phy[u.id])))
    return rows


# ------------------------------------------------------------ serialization
FLOW_COLUMNS = ("fid", "user", "category", "cls", "qci", "premium", "interferer", "sector",
                "ap", "rate_bps", "iface_final", "blocked", "switches", "generated",
                "ontime", "late", "dropped", "in_flight", "goodput_bps", "loss_fraction",
                "mean_latency_ms", "max_latency_ms", "p50_latency_ms", "p95_latency_ms",
                "header_bytes", "energy_active_j", "energy_idle_j", "energy_j",
                "lte_energy_j", "wlan_energy_j")


def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(repr(o))


def write_report(rep: RunReport, outdir, *, bindings: bool = False) -> list[str]:
    """Write the report files into ``outdir``; returns the file names written."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    def path(name):
        written.append(name)
        return os.path.join(outdir, name)

    with open(path("summary.json"), "w") as fh:
        json.dump({"meta": rep.meta, "summary": rep.summary}, fh, indent=2, sort_keys=True,
                  default=_json_default)
        fh.write("\n")
    write_csv(path("flows.csv"), FLOW_COLUMNS, ([r[c] for c in FLOW_COLUMNS] for r in rep.flows))
    ieu_cols = ("user", "category", "premium", "sector", "throughput_bps", "t_max_bps",
                "energy_j", "energy_active_j", "ftp_energy_j", "rt_energy_j", "ftp_iface",
                "ftp_throughput_bps", "rt_throughput_bps")
    write_csv(path("ieus.csv"), ieu_cols, ([u[c] for c in ieu_cols] for u in rep.ieus))
    if rep.ieus:
        write_csv(path("cdf_throughput.csv"), ("throughput_bps", "fraction"),
                   cdf(u["throughput_bps"] for u in rep.ieus))
        write_csv(path("cdf_energy.csv"), ("energy_j", "fraction"),
                   cdf(u["energy_j"] for u in rep.ieus))
    write_csv(path("energy.csv"), ("node", "interface", "flow", "active_j", "idle_j",
                                    "tx_s", "rx_s", "idle_s"), rep.energy_rows)
    write_csv(path("decisions.csv"), ("time_us", "fid", "distance_m", "ftp_throughput_bps",
                                       "max_ftp_throughput_bps", "wlan_utilization",
                                       "lte_offered_bps", "premium", "regime", "target",
                                       "reason", "switched"), rep.decisions)
    with open(path("config.ini"), "w") as fh:
        fh.write(rep.config_text)
    if rep.deployment is not None:
        write_deployment(path("deployment.csv"), *rep.deployment)
    if rep.packets is not None:
        write_csv(path("packets.csv"), ("fid", "seq", "created_us", "delivered_us",
                                         "iface", "size_bytes"), rep.packets.tolist())
    if bindings:
        write_binding_traces(rep, outdir)
        written += ["bindings.csv", "switch_events.csv"]
    if rep.allocations:
        write_csv(path("allocations.csv"), ("time_us", "sector", "fid", "prbs"), rep.allocations)
    if rep.links:
        write_csv(path("links.csv"),
                   ("user", "sector", "sinr_db_isolated", "rate_isolated_bps",
                    "planning_rate_bps", "ap", "ap_distance_m", "wlan_phy_bps"), rep.links)
    return written


def write_binding_traces(rep: RunReport, outdir) -> None:
    from .ifom import write_switch_log
    write_csv(os.path.join(outdir, "bindings.csv"), ("time_us", "fid", "user", "iface", "event"),
               rep.bindings)
    with open(os.path.join(outdir, "switch_events.csv"), "w", newline="") as fh:
        write_switch_log(fh, rep.switch_events)
