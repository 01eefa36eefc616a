"""Discrete-event engine: event queue, run setup, and the main loop.

Time is integer microseconds.  Packet generation is lazy: the kernel
materializes every packet created up to the current instant whenever a tick
or a binding change needs an up-to-date queue, so no per-packet events are
queued.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import steering
from .channel import ChannelModel
from .config import ScenarioConfig, parse_config
from .energy import LteEnergyParams, WlanEnergyParams
from .errors import ConfigError
from .ifom import LTE, WLAN, BindingCache, FlowBindingRule, SwitchEvent, TrafficSelector, \
    TunnelConfig
from .lte_mac import AdmissionResult, Bearer, LteSector, gbr_bits_per_tti, window_utilization
from .rng import stream
from .steering import EpochEntry, LoadRegime, Planner, Target, Thresholds
from .topology import Category, drop_users, generate_deployment
from .traffic import US_PER_S, Flow, FlowClass, make_flow_set
from .wlan_mac import AccessPoint, AssociationRegistry, AssociationResult
from ._kernels import backend_name, get_backend, make_state


class EventKind(enum.IntEnum):
    FLOW_START = 0
    SWITCH_COMPLETE = 1
    PACKET_ARRIVAL = 2
    TTI_TICK = 3
    WLAN_SERVE = 4
    BEACON = 5
    EPOCH = 6
    FLOW_END = 7
    RUN_END = 8


@dataclass(frozen=True, order=True)
class Event:
    time: int
    kind: EventKind
    key: int = 0
    seq: int = 0
    payload: object = field(default=None, compare=False)


class EventQueue:
    """Min-heap of events ordered by (time, kind, key), then insertion.

    Events that tie on (time, kind, key) are interchangeable for the engine,
    so dispatch order depends only on the multiset of queued events.
    """

    def __init__(self):
        self._heap: list[Event] = []
        self._seq = itertools.count()

    def push(self, time: int, kind: EventKind, key: int = 0, payload=None) -> Event:
        ev = Event(int(time), EventKind(kind), int(key), next(self._seq), payload)
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek_time(self) -> int | None:
        return self._heap[0].time if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


IFACE = {Target.LTE: 0, Target.WLAN: 1}
TARGET_OF = {0: Target.LTE, 1: Target.WLAN}


@dataclass
class FlowMeta:
    flow: Flow
    user: int
    category: Category
    premium: bool
    interferer: bool
    sector: int
    ap: int  # -1 when out of WLAN coverage
    ap_dist: float
    wlan_capable: bool
    steerable: bool
    header: int
    blocked: bool = False
    pending: bool = False
    last_switch_epoch: int = -10**9
    switches: int = 0
    attach_iface: int = -1
    attach_base: float = 0.0
    attach_t: int = 0


def _us(seconds_or_ms: float, scale: int) -> int:
    return int(round(seconds_or_ms * scale))


class Simulation:
    """One replication of a scenario."""

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None, backend: str | None = None):
        self.cfg = cfg
        self.seed = cfg.run.seed if seed is None else int(seed)
        bname = backend or (None if cfg.run.backend == "auto" else cfg.run.backend)
        self.kmod = get_backend(bname)
        self.backend = backend_name(self.kmod)
        r = cfg.run
        self.duration_us = _us(r.duration_s, US_PER_S)
        self.warmup_us = _us(r.warmup_s, US_PER_S)
        self.meas_end_us = max(self.warmup_us, self.duration_us - _us(r.tail_s, US_PER_S))
        self.measure_s = (self.meas_end_us - self.warmup_us) / US_PER_S
        self.tti_us = _us(cfg.lte.tti_ms, 1000)
        self.serve_us = _us(cfg.wlan.serve_interval_ms, 1000)
        self.beacon_us = _us(cfg.wlan.beacon_ms, 1000)
        self.epoch_us = _us(cfg.steering.epoch_ms, 1000)
        self.bu_us = _us(cfg.ifom.bu_delay_ms, 1000)
        self.policy = r.policy
        self.thresholds = Thresholds(cfg.steering.wlan_range_m, cfg.steering.tmax_ratio,
                                     cfg.steering.ee_ratio, cfg.steering.ee_overload)
        self.lte_params = LteEnergyParams(cfg.energy.p_idle_w, cfg.energy.p_tx_w,
                                          cfg.energy.alpha, cfg.energy.p_rx_w)
        self.wlan_params = WlanEnergyParams(cfg.energy.i_tx_a, cfg.energy.i_rx_a,
                                            cfg.energy.i_sleep_a, cfg.energy.i_idle_a,
                                            cfg.energy.supply_v)
        self._build()

    # ------------------------------------------------------------------ setup
    def _drop_counts(self) -> dict:
        cfg = self.cfg
        n = cfg.n_ieus
        mode = cfg.run.drop
        if mode == "auto":
            if cfg.run.scenario == 1:
                mode = "mixed"
            else:
                mode = "lte_only" if self.policy == "none-all-lte" else "lte_wlan"
        self.drop_mode = mode
        if mode == "lte_only":
            return {Category.LTE_ONLY_IEU: n}
        if mode == "lte_wlan":
            return {Category.LTE_WLAN_IEU: n}
        k = min(n, 3 * cfg.deployment.ieus_per_sector_s1)
        lo = (k + 1) // 2
        return {Category.LTE_ONLY_IEU: lo, Category.LTE_WLAN_IEU: k - lo,
                Category.BACKGROUND: n - k}

    def _build(self):
        cfg = self.cfg
        d = cfg.deployment
        self.dep = generate_deployment(d.isd_m, self.seed, hotspot_offset=d.hotspot_offset_m,
                                       wap_range=d.wap_range_m)
        self.users = drop_users(self.dep, self._drop_counts(), self.seed,
                                premium_fraction=d.premium_fraction,
                                min_distance=d.min_distance_m,
                                max_attempts=d.placement_attempts,
                                interferers=d.interferers)
        self.channel = ChannelModel(self.dep, self.users, cfg.radio, self.seed)
        n_s = len(self.dep.sectors)
        n_a = len(self.dep.waps)
        rng = stream(self.seed, "traffic")
        jitter_us = _us(cfg.traffic.start_jitter_ms, 1000)
        self.meta: list[FlowMeta] = []
        for u in self.users:
            start = int(rng.integers(0, jitter_us)) if jitter_us > 0 else 0
            end = self.duration_us
            if u.category is Category.BACKGROUND:
                flows = [Flow.of(len(self.meta), u.id, FlowClass.FTP,
                                 ftp_rate=cfg.traffic.background_ftp_rate_bps,
                                 ftp_pdb_ms=cfg.traffic.ftp_pdb_ms, start=start, end=end)]
            else:
                flows = make_flow_set(u, cfg.run.scenario, first_fid=len(self.meta),
                                      ftp_rate=cfg.ftp_rate, ftp_pdb_ms=cfg.traffic.ftp_pdb_ms,
                                      start=start, end=max(start, end))
            ap = int(self.channel.wap_of[u.id])
            dist = float(self.channel.wap_dist[u.id])
            in_cov = dist <= d.wap_range_m and self.channel.wlan_phy[u.id] > 0
            for fl in flows:
                if u.category is Category.BACKGROUND:
                    capable = in_cov and not u.interferer and self.policy != "none-all-lte"
                    steer, hdr = False, cfg.traffic.background_header_bytes
                else:
                    capable = in_cov and u.category is Category.LTE_WLAN_IEU \
                        and fl.cls is FlowClass.FTP
                    steer, hdr = capable, cfg.ifom.header_bytes
                self.meta.append(FlowMeta(fl, u.id, u.category, u.premium, u.interferer,
                                          u.home_sector, ap if in_cov else -1, dist,
                                          capable, steer, hdr))
        self.plan_rate = self._planning_rates(cfg.lte.admission_interference)
        n_f = len(self.meta)
        trace_cap = min(cfg.trace.max_packets, 262_144) if cfg.trace.packets else 0
        hist_len = max(1, self.epoch_us // self.tti_us)
        self.st = make_state(n_f, n_s, n_a, len(self.users), hist_len=hist_len,
                             trace_cap=trace_cap)
        st = self.st
        for f, m in enumerate(self.meta):
            fl = m.flow
            st["f_start"][f] = fl.start
            st["f_end"][f] = fl.end
            st["f_P"][f] = fl.packet_bits * US_PER_S
            st["f_R"][f] = fl.data_rate
            st["f_size"][f] = fl.packet_size
            st["f_hdr"][f] = m.header
            st["f_pdb"][f] = fl.pdb_us
            st["f_user"][f] = m.user
            lo = fl.first_index_at_or_after(self.warmup_us)
            hi = fl.first_index_at_or_after(min(fl.end, self.meas_end_us))
            st["f_acc_lo"][f] = lo
            st["f_acc_hi"][f] = max(lo, hi)
            st["q_phy"][2 * f + 1] = self.channel.wlan_phy[m.user]
        if len(self.users):
            st["G"][:] = self.channel.rx_mw
            st["noise"][:] = self.channel.lte_noise_mw
        st["sec_cell"][:] = self.channel.sector_cell
        # every WLAN-capable flow owns a queue at its AP for the whole run
        w_lists = [[] for _ in range(n_a)]
        for f, m in enumerate(self.meta):
            if m.wlan_capable:
                w_lists[m.ap].append(2 * f + 1)
        st["w_ptr"] = np.cumsum([0] + [len(x) for x in w_lists]).astype(np.int64)
        st["w_q"] = np.array([q for x in w_lists for q in x], dtype=np.int64)
        lc = cfg.lte
        params = dict(
            tti_us=self.tti_us, nprb=lc.prbs,
            lte_delay_us=_us(lc.core_delay_ms, 1000),
            wlan_delay_us=_us(cfg.wlan.path_delay_ms, 1000),
            discard_us=_us(lc.discard_ms, 1000), hol_wait_us=_us(lc.hol_wait_ms, 1000),
            eta=cfg.radio.eta, lte_bw=cfg.radio.lte_bandwidth_hz,
            lte_cap=cfg.radio.lte_se_cap * cfg.radio.lte_bandwidth_hz,
            wlan_eff=cfg.wlan.mac_efficiency, wlan_backhaul_bps=cfg.wlan.backhaul_bps,
            trace_on=1 if cfg.trace.packets else 0,
        )
        self.kernel = self.kmod.Kernel(st, params)

        self.sectors = [LteSector(s.id, nprb=lc.prbs, tti_us=self.tti_us,
                                  admission_threshold=lc.admission_threshold,
                                  delay_us=params["lte_delay_us"],
                                  hol_wait_us=params["hol_wait_us"])
                        for s in self.dep.sectors]
        self.registry = AssociationRegistry()
        w = cfg.wlan
        self.aps = [AccessPoint(a.id, mac_efficiency=w.mac_efficiency,
                                beacon_us=self.beacon_us,
                                window_us=_us(w.util_window_ms, 1000),
                                reject_threshold=w.reject_utilization,
                                backhaul_bps=w.backhaul_bps, registry=self.registry)
                    for a in self.dep.waps]
        self._bearers_dirty = False

        self.cache = BindingCache(TunnelConfig(cfg.ifom.header_bytes, cfg.ifom.header_override))
        owners = sorted({m.user for m in self.meta})
        wlan_users = {m.user for m in self.meta if m.wlan_capable}
        for u in owners:
            self.cache.register_binding(f"hoa-{u}", f"coa-lte-{u}", 2 * u, 0, LTE)
            if u in wlan_users:
                self.cache.register_binding(f"hoa-{u}", f"coa-wlan-{u}", 2 * u + 1, 1, WLAN)

        self.attempts = 0
        self.rejections = 0
        self.lte_blocked = 0
        self.wlan_rejected = 0
        self.idle_share_us = np.zeros((n_f, 2))
        self.attached_meas_us = np.zeros((n_f, 2))
        self.switch_events: list[SwitchEvent] = []
        self.bindings_log: list[tuple] = []  # (time, fid, user, iface, event)
        self.decisions: list[tuple] = []
        self.alloc_log: list[tuple] = []
        self.trace_chunks: list[np.ndarray] = []
        self.epoch_idx = 0
        self.queue = EventQueue()
        self.now = 0
        self._last_gen = -1
        self.finished = False

    # -------------------------------------------------------------- helpers
    def _planning_rates(self, mode: str) -> np.ndarray:
        """Per-user LTE rate used for admission and steering estimates."""
        n_s = len(self.dep.sectors)
        if mode == "full":
            weights = None
        elif mode == "none":
            weights = [0.0] * n_s
        else:
            # each outer sector is weighted by the PRB share its own users
            # would need with the central cell fully loaded
            central = [1.0 if s.cell == 0 else 0.0 for s in self.dep.sectors]
            offered = [0.0] * n_s
            need = [0.0] * n_s
            for m in self.meta:
                if self.dep.sectors[m.sector].cell != 0:
                    offered[m.sector] += m.flow.data_rate
            for u in self.users:
                s = u.home_sector
                if offered[s] > 0 and self.dep.sectors[s].cell != 0:
                    r = self.channel.lte_rate(u.id, s, central)
                    need[s] = max(need[s], offered[s] / r if r > 0 else 1.0)
            weights = [min(1.0, w) for w in need]
        return np.array([self.channel.lte_rate(u.id, u.home_sector, weights)
                         for u in self.users])

    def bid(self, f: int, target: Target) -> int:
        return 2 * self.meta[f].user + (1 if target is Target.WLAN else 0)

    def measuring(self, t: int) -> bool:
        return self.warmup_us <= t < self.meas_end_us

    def _generate(self, t: int):
        if t != self._last_gen:
            self.kernel.generate(t)
            self._last_gen = t

    def _rebuild_bearers(self):
        ptr, qs, gbr = [0], [], []
        for sec in self.sectors:
            for fid in sec.bearer_order():
                b = sec.bearers[fid]
                qs.append(2 * fid)
                gbr.append(gbr_bits_per_tti(b.gbr, self.tti_us) if b.is_gbr else 0)
            ptr.append(len(qs))
        st = self.st
        st["b_ptr"] = np.array(ptr, dtype=np.int64)
        st["b_q"] = np.array(qs, dtype=np.int64)
        st["b_gbr"] = np.array(gbr, dtype=np.int64)
        st["b_alloc"] = np.zeros(len(qs), dtype=np.int64)
        self.kernel.set_bearers(st["b_ptr"], st["b_q"], st["b_gbr"], st["b_alloc"])
        self._bearers_dirty = False

    def _check_pin(self, f: int, iface: int):
        m = self.meta[f]
        if iface == 1 and (m.flow.cls.realtime or m.premium):
            raise AssertionError(f"pinned flow {f} routed to WLAN")

    def _attach(self, f: int, iface: int, t: int):
        m = self.meta[f]
        st = self.st
        if iface == 0:
            st["sec_att"][m.sector] += 1
            m.attach_base = float(st["sec_idle_int"][m.sector])
        else:
            st["ap_att"][m.ap] += 1
            m.attach_base = float(st["ap_idle_int"][m.ap])
        m.attach_iface = iface
        m.attach_t = t

    def _detach(self, f: int, t: int):
        m = self.meta[f]
        st = self.st
        iface = m.attach_iface
        if iface < 0:
            return
        if iface == 0:
            self.idle_share_us[f, 0] += st["sec_idle_int"][m.sector] - m.attach_base
            st["sec_att"][m.sector] -= 1
        else:
            self.idle_share_us[f, 1] += st["ap_idle_int"][m.ap] - m.attach_base
            st["ap_att"][m.ap] -= 1
        lo = max(m.attach_t, self.warmup_us)
        hi = min(t, self.meas_end_us)
        if hi > lo:
            self.attached_meas_us[f, iface] += hi - lo
        m.attach_iface = -1

    def _try_admit(self, f: int, target: Target) -> bool:
        """Admission attempt on ``target``; counts toward blocking."""
        m = self.meta[f]
        if target is Target.LTE:
            sec = self.sectors[m.sector]
            if m.flow.fid in sec.bearers:
                self.attempts += 1
                return True
            res = sec.admit_bearer(Bearer.for_flow(m.flow), float(self.plan_rate[m.user]))
            self.attempts += 1
            if res is AdmissionResult.ADMITTED:
                self._bearers_dirty = True
                return True
            self.rejections += 1
            self.lte_blocked += 1
            return False
        ap = self.aps[m.ap]
        res = ap.associate_flow(m.flow.fid, float(self.channel.wlan_phy[m.user]))
        self.attempts += 1
        if res is AssociationResult.ASSOCIATED:
            return True
        self.rejections += 1
        self.wlan_rejected += 1
        return False

    def _initial_target(self, f: int) -> Target:
        m = self.meta[f]
        if m.category is Category.BACKGROUND:
            return Target.WLAN if m.wlan_capable else Target.LTE
        if not m.wlan_capable:
            return Target.LTE
        inp = steering.SteeringInputs(m.ap_dist, m.flow.data_rate, m.flow.data_rate, 0.0, 0.0,
                                      m.premium)
        # adaptive policies start from the dual-connectivity placement
        base = "none-dual-static" if self.policy in ("tmax", "ee") else self.policy
        return steering.decide_static(inp, m.flow, base, self.thresholds).target

    # --------------------------------------------------------------- events
    def _on_flow_start(self, t: int, f: int):
        m = self.meta[f]
        target = self._initial_target(f)
        if not self._try_admit(f, target):
            m.blocked = True
            self.bindings_log.append((t, f, m.user, -1, "blocked"))
            return
        iface = IFACE[target]
        self._check_pin(f, iface)
        self.st["f_iface"][f] = iface
        self._attach(f, iface, t)
        hoa = f"hoa-{m.user}"
        self.cache.bind_flow(FlowBindingRule(f, hoa, TrafficSelector(dst=hoa, dport=f),
                                             self.bid(f, target)))
        self.bindings_log.append((t, f, m.user, iface, "bind"))

    def _on_switch_complete(self, t: int, f: int, target: Target):
        m = self.meta[f]
        # packets created up to now stay on the old interface
        self._generate(t)
        old = int(self.st["f_iface"][f])
        new = IFACE[target]
        self._check_pin(f, new)
        self._detach(f, t)
        if old == 1 and self.registry.get(f) == m.ap:
            self.aps[m.ap].disassociate(f)
        self.st["f_iface"][f] = new
        self._attach(f, new, t)
        ev = self.cache.switch_flow(f, self.bid(f, target), at=t)
        self.switch_events.append(ev)
        m.pending = False
        m.switches += 1
        self.bindings_log.append((t, f, m.user, new, "switch"))

    def _on_tti(self, t: int, k: int):
        if self._bearers_dirty:
            self._rebuild_bearers()
        self._generate(t)
        self.kernel.lte_tti(t, k, self.measuring(t))
        if self.cfg.trace.allocations:
            b_q = self.st["b_q"]
            ptr = self.st["b_ptr"]
            alloc = self.st["b_alloc"]
            for s in range(len(self.sectors)):
                for i in range(ptr[s], ptr[s + 1]):
                    if alloc[i]:
                        self.alloc_log.append((t, s, int(b_q[i]) >> 1, int(alloc[i])))

    def _on_wlan(self, t: int):
        self._generate(t)
        self.kernel.wlan_serve(t, self.serve_us, self.measuring(t))

    def _on_beacon(self, t: int):
        busy = self.st["ap_busy_total"]
        for a, ap in enumerate(self.aps):
            ap.on_beacon(t, float(busy[a]))
        self._flush_trace()

    def _flush_trace(self):
        n = int(self.kernel.trace_n)
        if n:
            self.trace_chunks.append(np.array(self.st["trace_buf"][:n], copy=True))
            self.kernel.trace_n = 0

    def sector_utilization(self, s: int, t: int) -> float:
        last = t // self.tti_us - 1
        ttis = max(1, self.epoch_us // self.tti_us)
        return window_utilization(self.st["sec_hist"][s], last, ttis, self.cfg.lte.prbs)

    def _on_epoch(self, t: int):
        self.epoch_idx += 1
        e = self.epoch_idx
        st = self.st
        epoch_s = self.epoch_us / US_PER_S
        sec_util = [self.sector_utilization(s, t) for s in range(len(self.sectors))]
        central = [s.id for s in self.dep.central_sectors()]
        mean_util = sum(sec_util[s] for s in central) / len(central)
        sc = self.cfg.steering
        regime = steering.load_regime(self.cfg.n_ieus, mean_util, light_ieus=sc.light_ieus,
                                      light_util=sc.light_prb_util, heavy_ieus=sc.heavy_ieus)
        entries = []
        for f, m in enumerate(self.meta):
            if m.category is not Category.LTE_WLAN_IEU or m.blocked:
                continue
            if st["f_start"][f] > t:
                continue
            iface = int(st["f_iface"][f])
            eligible = (m.steerable and not m.pending
                        and e > m.last_switch_epoch + sc.hysteresis_epochs)
            meas = st["s_epoch_bits"][f] / epoch_s
            inp = steering.SteeringInputs(m.ap_dist, float(meas), float(m.flow.data_rate),
                                          0.0, 0.0, m.premium)
            entries.append(EpochEntry(m.flow, inp, TARGET_OF[iface], eligible))
        # WLAN-resident flows first, weakest link first; then LTE-resident, strongest first
        phy = self.channel.wlan_phy

        def order(en):
            m = self.meta[en.flow.fid]
            if en.current is Target.WLAN:
                return (0, phy[m.user], en.flow.fid)
            return (1, -phy[m.user], en.flow.fid)
        entries.sort(key=order)
        planner = _EnginePlanner(self, sec_util)

        def enact(entry, d):
            f = entry.flow.fid
            m = self.meta[f]
            if not self._try_admit(f, d.target):
                return None
            m.pending = True
            m.last_switch_epoch = e
            self.queue.push(t + self.bu_us, EventKind.SWITCH_COMPLETE, f, d.target)
            return SwitchEvent(t + self.bu_us, f, self.bid(f, entry.current),
                               self.bid(f, d.target))

        log = []
        steering.run_epoch(self.policy, entries, t, regime=regime,
                           thresholds=self.thresholds, enact=enact, planner=planner, log=log)
        for now, fid, inp, d, moved in log:
            self.decisions.append((now, fid, inp.distance_to_nearest_ap, inp.ftp_throughput,
                                   inp.max_ftp_throughput, inp.wlan_utilization,
                                   inp.lte_offered_rate, inp.premium, regime.value,
                                   d.target.value, d.reason.value, moved))
        st["s_epoch_bits"][:] = 0

    def _finish(self, t: int):
        for f in range(len(self.meta)):
            self._detach(f, t)
        self._flush_trace()
        self.finished = True

    # ------------------------------------------------------------------ run
    def schedule_initial(self):
        q = self.queue
        for f, m in enumerate(self.meta):
            q.push(m.flow.start, EventKind.FLOW_START, f)
            q.push(m.flow.end, EventKind.FLOW_END, f)
        q.push(0, EventKind.TTI_TICK, 0, 0)
        q.push(0, EventKind.WLAN_SERVE, 0)
        q.push(self.beacon_us, EventKind.BEACON, 0)
        q.push(self.epoch_us, EventKind.EPOCH, 0)
        q.push(self.duration_us, EventKind.RUN_END, 0)

    def run(self):
        from .metrics import build_report
        self.schedule_initial()
        q = self.queue
        dur = self.duration_us
        while q:
            ev = q.pop()
            t = ev.time
            self.now = t
            kind = ev.kind
            if kind == EventKind.TTI_TICK:
                self._on_tti(t, ev.payload)
                if t + self.tti_us < dur:
                    q.push(t + self.tti_us, EventKind.TTI_TICK, 0, ev.payload + 1)
            elif kind == EventKind.WLAN_SERVE:
                self._on_wlan(t)
                if t + self.serve_us < dur:
                    q.push(t + self.serve_us, EventKind.WLAN_SERVE, 0)
            elif kind == EventKind.FLOW_START:
                if t < dur:
                    self._on_flow_start(t, ev.key)
            elif kind == EventKind.SWITCH_COMPLETE:
                if t < dur:
                    self._on_switch_complete(t, ev.key, ev.payload)
            elif kind == EventKind.BEACON:
                self._on_beacon(t)
                if t + self.beacon_us <= dur:
                    q.push(t + self.beacon_us, EventKind.BEACON, 0)
            elif kind == EventKind.EPOCH:
                if t < dur:
                    self._on_epoch(t)
                    q.push(t + self.epoch_us, EventKind.EPOCH, 0)
            elif kind == EventKind.FLOW_END:
                self._detach(ev.key, t)
            elif kind == EventKind.RUN_END:
                self._finish(t)
                break
        return build_report(self)


class _EnginePlanner(Planner):
    """Fills in load-dependent inputs and tracks the effect of moves made so far."""

    def __init__(self, sim: Simulation, sec_util):
        self.sim = sim
        self.sec_util = list(sec_util)
        self.ap_util = [ap.channel_utilization() for ap in sim.aps]
        st = sim.st
        self.ap_load: list[dict] = [dict() for _ in sim.aps]
        for f, m in enumerate(sim.meta):
            if m.wlan_capable and st["f_iface"][f] == 1 and m.attach_iface == 1:
                self.ap_load[m.ap][f] = self.airtime(f)

    def airtime(self, f: int) -> float:
        sim = self.sim
        m = sim.meta[f]
        phy = sim.channel.wlan_phy[m.user]
        size = m.flow.packet_size
        on_air = m.flow.data_rate * (size + m.header) / size
        return on_air / (sim.cfg.wlan.mac_efficiency * phy)

    def projected_wlan(self, f: int) -> float:
        sim = self.sim
        m = sim.meta[f]
        load = dict(self.ap_load[m.ap])
        load[f] = self.airtime(f)
        keys = sorted(load)
        give = sim.kmod.airtime_waterfill([load[k] for k in keys], 1.0)
        g = give[keys.index(f)]
        return min(float(m.flow.data_rate), m.flow.data_rate * g / load[f])

    def lte_free(self, f: int, own: float) -> float:
        m = self.sim.meta[f]
        rate = float(self.sim.plan_rate[m.user])
        free = 1.0 - self.sec_util[m.sector] + own
        return rate * min(1.0, max(0.0, free))

    def refresh(self, entry):
        f = entry.flow.fid
        m = self.sim.meta[f]
        inp = entry.inputs
        rate = float(self.sim.plan_rate[m.user]) or 1.0
        if entry.current is Target.WLAN:
            tput = inp.ftp_throughput
            offered = self.lte_free(f, 0.0)
        else:
            tput = self.projected_wlan(f)
            offered = self.lte_free(f, inp.ftp_throughput / rate)
        return steering.SteeringInputs(inp.distance_to_nearest_ap, tput,
                                       inp.max_ftp_throughput,
                                       min(1.0, max(0.0, self.ap_util[m.ap])), offered,
                                       inp.premium)

    def commit(self, entry, target):
        f = entry.flow.fid
        m = self.sim.meta[f]
        share = self.airtime(f)
        rate = float(self.sim.plan_rate[m.user]) or 1.0
        lte_share = m.flow.data_rate / rate
        if target is Target.LTE:
            self.ap_load[m.ap].pop(f, None)
            self.ap_util[m.ap] -= share
            self.sec_util[m.sector] += lte_share
        else:
            self.ap_load[m.ap][f] = share
            self.ap_util[m.ap] += share
            self.sec_util[m.sector] -= lte_share


def run(scenario: ScenarioConfig | str | None = None, seed: int | None = None,
        duration: float | None = None, backend: str | None = None):
    """Build and execute one replication; returns its RunReport."""
    cfg = scenario if isinstance(scenario, ScenarioConfig) else parse_config(scenario)
    if duration is not None:
        if duration < cfg.run.warmup_s:
            raise ConfigError("duration shorter than warmup", key="duration_s")
        cfg = cfg.replace(run__duration_s=float(duration))
    return Simulation(cfg, seed, backend).run()
