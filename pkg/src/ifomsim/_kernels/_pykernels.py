"""Pure-Python per-tick kernels.

This is the reference implementation; ``_ckernels.pyx`` mirrors it line for
line and must produce bit-identical state.  Queue ids are ``2*flow + iface``
with iface 0 = LTE, 1 = WLAN.  Each queue is a ring of packet-index segments
``[a, b)`` of one flow; packet ``k`` of flow ``f`` is created at
``f_start + (k * f_P) // f_R`` microseconds.
"""

from math import log2

MAXSEG = 8
NBINS = 1001  # 1 ms latency histogram bins; last bin collects >= 1 s


def allocate_prbs(is_gbr, gbr_bits, queued_bits, bpp, hol_old, nprb, rr):
    """PRB split for one TTI.

    Bearers arrive GBR-first in priority order.  Pass 1 serves each GBR
    bearer up to its guaranteed rate, pass 2 shares what is left round-robin
    among non-GBR bearers, pass 3 hands any remainder back to GBR bearers
    that still hold data.  A bearer's demand is the number of whole PRBs its
    queue fills; the partial last PRB is only granted once the head-of-line
    packet has waited ``hol_wait``.
    """
    n = len(bpp)
    need = [0] * n
    for i in range(n):
        b = bpp[i]
        q = queued_bits[i]
        if b <= 0 or q <= 0:
            continue
        if hol_old[i]:
            need[i] = (q + b - 1) // b
        else:
            need[i] = q // b
    alloc = [0] * n
    rem = nprb
    for i in range(n):
        if rem == 0:
            break
        if not is_gbr[i] or need[i] == 0:
            continue
        g = (gbr_bits[i] + bpp[i] - 1) // bpp[i]
        g = min(g, need[i], rem)
        alloc[i] = g
        rem -= g
    if rem > 0:
        cand = [i for i in range(n) if not is_gbr[i] and need[i] > 0]
        if cand:
            off = rr % len(cand)
            cand = cand[off:] + cand[:off]
        while rem > 0 and cand:
            share = rem // len(cand)
            if share == 0:
                for i in cand[:rem]:
                    alloc[i] += 1
                rem = 0
                break
            nxt = []
            for i in cand:
                g = min(share, need[i] - alloc[i])
                alloc[i] += g
                rem -= g
                if need[i] > alloc[i]:
                    nxt.append(i)
            cand = nxt
    if rem > 0:
        for i in range(n):
            if rem == 0:
                break
            if is_gbr[i] and need[i] > alloc[i]:
                g = min(need[i] - alloc[i], rem)
                alloc[i] += g
                rem -= g
    return alloc


def airtime_waterfill(need_us, budget_us):
    """Equal airtime shares, with stations that need less ceding the excess.

    Returns the airtime granted to each entry of ``need_us``.
    """
    n = len(need_us)
    order = sorted(range(n), key=lambda i: (need_us[i], i))
    give = [0.0] * n
    rem = budget_us
    for pos, i in enumerate(order):
        share = rem / (n - pos)
        g = need_us[i] if need_us[i] <= share else share
        give[i] = g
        rem -= g
    return give


class Kernel:
    """Mutable simulation state plus the per-tick update steps."""

    def __init__(self, arrays, params):
        for name, arr in arrays.items():
            setattr(self, name, arr)
        for name, val in params.items():
            setattr(self, name, val)
        self.n_flows = len(self.f_start)
        self.n_sectors = len(self.act)
        self.n_aps = len(self.ap_busy_total)
        self.trace_n = 0

    def set_bearers(self, b_ptr, b_q, b_gbr, b_alloc):
        self.b_ptr = b_ptr
        self.b_q = b_q
        self.b_gbr = b_gbr
        self.b_alloc = b_alloc

    # -- packet index helpers -------------------------------------------
    def _first_idx(self, f, t):
        d = t - self.f_start[f]
        if d <= 0:
            return 0
        p = self.f_P[f]
        return (d * self.f_R[f] + p - 1) // p

    def _created(self, f, k):
        return self.f_start[f] + (k * self.f_P[f]) // self.f_R[f]

    def _in_window(self, f, a, b):
        lo = max(a, self.f_acc_lo[f])
        hi = min(b, self.f_acc_hi[f])
        return hi - lo if hi > lo else 0

    def _psize(self, q, f):
        return self.f_size[f] + (self.f_hdr[f] if q & 1 else 0)

    # -- queue operations ------------------------------------------------
    def _push(self, q, a, b):
        sn = self.q_sn[q]
        if sn > 0:
            last = (self.q_sh[q] + sn - 1) % MAXSEG
            if self.q_seg[q, last, 1] == a:
                self.q_seg[q, last, 1] = b
                return
        if sn == MAXSEG:
            raise RuntimeError(f"queue {q} exceeded {MAXSEG} segments")
        slot = (self.q_sh[q] + sn) % MAXSEG
        self.q_seg[q, slot, 0] = a
        self.q_seg[q, slot, 1] = b
        self.q_sn[q] = sn + 1

    def _pop(self, q):
        self.q_sh[q] = (self.q_sh[q] + 1) % MAXSEG
        self.q_sn[q] -= 1

    def _expire(self, q, f, t):
        if self.discard_us <= 0 or self.q_sn[q] == 0:
            return
        kmin = self._first_idx(f, t - self.discard_us)
        psize = self._psize(q, f)
        while self.q_sn[q] > 0:
            h = self.q_sh[q]
            a = self.q_seg[q, h, 0]
            if a >= kmin:
                break
            b = self.q_seg[q, h, 1]
            cut = b if b < kmin else kmin
            self.q_bytes[q] -= (cut - a) * psize - self.q_sent[q]
            self.q_sent[q] = 0
            self.s_drop[f] += self._in_window(f, a, cut)
            if cut == b:
                self._pop(q)
            else:
                self.q_seg[q, h, 0] = cut

    def _deliver(self, q, f, k, td):
        lat = td - self._created(f, k)
        size = self.f_size[f]
        ontime = lat <= self.f_pdb[f]
        if ontime:
            self.s_epoch_bits[f] += size * 8
        if self.f_acc_lo[f] <= k < self.f_acc_hi[f]:
            if ontime:
                self.s_ontime[f] += 1
            else:
                self.s_late[f] += 1
            self.s_lat_sum[f] += lat
            if lat > self.s_lat_max[f]:
                self.s_lat_max[f] = lat
            b = lat // 1000
            self.s_hist[f, b if b < NBINS - 1 else NBINS - 1] += 1
            if q & 1:
                self.s_hdr[f] += self.f_hdr[f]
        if self.trace_on:
            n = self.trace_n
            if n < len(self.trace_buf):
                row = self.trace_buf[n]
                row[0] = f
                row[1] = k
                row[2] = td - lat
                row[3] = td
                row[4] = q & 1
                row[5] = self._psize(q, f)
                self.trace_n = n + 1

    def _drain(self, q, f, budget, td):
        psize = self._psize(q, f)
        used = 0
        while budget > 0 and self.q_sn[q] > 0:
            h = self.q_sh[q]
            a = self.q_seg[q, h, 0]
            rem = psize - self.q_sent[q]
            if budget >= rem:
                budget -= rem
                used += rem
                self.q_bytes[q] -= rem
                self.q_sent[q] = 0
                self._deliver(q, f, a, td)
                a += 1
                if a == self.q_seg[q, h, 1]:
                    self._pop(q)
                else:
                    self.q_seg[q, h, 0] = a
            else:
                self.q_sent[q] += budget
                self.q_bytes[q] -= budget
                used += budget
                budget = 0
        return used

    # -- per-tick steps --------------------------------------------------
    def generate(self, t):
        """Route every packet created at or before ``t`` to its flow's egress."""
        for f in range(self.n_flows):
            if t < self.f_start[f]:
                continue
            n = self._first_idx(f, t + 1)
            n_end = self._first_idx(f, self.f_end[f])
            if n > n_end:
                n = n_end
            g = self.f_gen[f]
            if n <= g:
                continue
            iface = self.f_iface[f]
            if iface < 0:
                self.s_drop[f] += self._in_window(f, g, n)
            else:
                q = 2 * f + iface
                self._push(q, g, n)
                self.q_bytes[q] += (n - g) * self._psize(q, f)
            self.f_gen[f] = n

    def lte_tti(self, t, tti, measuring):
        nprb = self.nprb
        tti_us = self.tti_us
        td = t + tti_us + self.lte_delay_us
        act_next = [0] * self.n_sectors
        for s in range(self.n_sectors):
            lo = self.b_ptr[s]
            hi = self.b_ptr[s + 1]
            used = 0
            if hi > lo:
                n = hi - lo
                is_gbr = [0] * n
                gbr_bits = [0] * n
                qbits = [0] * n
                bpp = [0] * n
                hol = [0] * n
                for i in range(n):
                    q = self.b_q[lo + i]
                    f = q >> 1
                    self._expire(q, f, t)
                    gb = self.b_gbr[lo + i]
                    is_gbr[i] = 1 if gb > 0 else 0
                    gbr_bits[i] = gb
                    qb = self.q_bytes[q]
                    if qb <= 0:
                        continue
                    qbits[i] = qb * 8
                    u = self.f_user[f]
                    interf = 0.0
                    for j in range(self.n_sectors):
                        if self.act[j] and self.sec_cell[j] != self.sec_cell[s]:
                            interf += self.G[u, j] * self.act[j] / nprb
                    sinr = self.G[u, s] / (self.noise[u] + interf)
                    rate = self.eta * self.lte_bw * log2(1.0 + sinr)
                    if rate > self.lte_cap:
                        rate = self.lte_cap
                    bpp[i] = int(rate * tti_us / (1e6 * nprb))
                    head = self.q_seg[q, self.q_sh[q], 0]
                    hol[i] = 1 if t - self._created(f, head) >= self.hol_wait_us else 0
                alloc = allocate_prbs(is_gbr, gbr_bits, qbits, bpp, hol, nprb, tti)
                for i in range(n):
                    g = alloc[i]
                    self.b_alloc[lo + i] = g
                    if g == 0:
                        continue
                    q = self.b_q[lo + i]
                    f = q >> 1
                    used += g
                    self._drain(q, f, (g * bpp[i]) // 8, td)
                    if measuring:
                        self.e_prb_us[f] += g * tti_us / nprb
                        self.u_prbs[self.f_user[f]] += g
                if measuring:
                    for i in range(n):
                        g = alloc[i]
                        if g == 0:
                            continue
                        f = self.b_q[lo + i] >> 1
                        self.e_rx_us[f] += tti_us * g / self.u_prbs[self.f_user[f]]
                    for i in range(n):
                        self.u_prbs[self.f_user[self.b_q[lo + i] >> 1]] = 0
            act_next[s] = used
            self.sec_hist[s, tti % self.sec_hist.shape[1]] = used
            if measuring:
                self.sec_prb_meas[s] += used
                idle = tti_us - used * tti_us / nprb
                if self.sec_att[s] > 0:
                    self.sec_idle_int[s] += idle / self.sec_att[s]
                else:
                    self.sec_idle_unatt[s] += idle
        for s in range(self.n_sectors):
            self.act[s] = act_next[s]

    def wlan_serve(self, t, dt_us, measuring):
        td = t + dt_us + self.wlan_delay_us
        for a in range(self.n_aps):
            lo = self.w_ptr[a]
            hi = self.w_ptr[a + 1]
            idx = []
            need = []
            for i in range(lo, hi):
                q = self.w_q[i]
                f = q >> 1
                self._expire(q, f, t)
                qb = self.q_bytes[q]
                if qb > 0:
                    idx.append(q)
                    need.append(qb * 8 * 1e6 / (self.wlan_eff * self.q_phy[q]))
            busy = 0.0
            if idx:
                give = airtime_waterfill(need, float(dt_us))
                budgets = [0] * len(idx)
                total_bits = 0
                for j in range(len(idx)):
                    q = idx[j]
                    if give[j] == need[j]:
                        budgets[j] = self.q_bytes[q]
                    else:
                        budgets[j] = int(give[j] * self.wlan_eff * self.q_phy[q] / 8e6)
                    total_bits += budgets[j] * 8
                    busy += give[j]
                cap_bits = self.wlan_backhaul_bps * dt_us / 1e6
                if self.wlan_backhaul_bps > 0 and total_bits > cap_bits:
                    scale = cap_bits / total_bits
                    busy = 0.0
                    for j in range(len(idx)):
                        budgets[j] = int(budgets[j] * scale)
                        give[j] = give[j] * scale
                        busy += give[j]
                for j in range(len(idx)):
                    q = idx[j]
                    f = q >> 1
                    self._drain(q, f, budgets[j], td)
                    if measuring:
                        self.e_air_us[f] += give[j]
            self.ap_busy_total[a] += busy
            if measuring:
                self.ap_busy_meas[a] += busy
                idle = dt_us - busy
                if self.ap_att[a] > 0:
                    self.ap_idle_int[a] += idle / self.ap_att[a]
                else:
                    self.ap_idle_unatt[a] += idle
