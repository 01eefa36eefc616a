# cython: language_level=3
"""Compiled per-tick kernels; a statement-for-statement port of _pykernels."""

from libc.math cimport log2

import numpy as np

ctypedef long long i64

cdef enum:
    MAXSEG = 8
    NBINS = 1001


cdef inline i64 _imin(i64 a, i64 b) nogil:
    return a if a < b else b


cdef void _alloc_core(i64 n, i64[:] is_gbr, i64[:] gbr_bits, i64[:] qbits, i64[:] bpp,
                      i64[:] hol, i64 nprb, i64 rr, i64[:] need, i64[:] alloc,
                      i64[:] cand, i64 lo) nogil:
    cdef i64 i, j, b, q, fl, g, rem, nc, off, share, k, m
    for i in range(n):
        need[lo + i] = 0
        alloc[lo + i] = 0
        b = bpp[lo + i]
        q = qbits[lo + i]
        if b <= 0 or q <= 0:
            continue
        fl = q // b
        if hol[lo + i]:
            need[lo + i] = (q + b - 1) // b
        else:
            need[lo + i] = fl
    rem = nprb
    for i in range(n):
        if rem == 0:
            break
        if not is_gbr[lo + i] or need[lo + i] == 0:
            continue
        g = (gbr_bits[lo + i] + bpp[lo + i] - 1) // bpp[lo + i]
        g = _imin(_imin(g, need[lo + i]), rem)
        alloc[lo + i] = g
        rem -= g
    if rem > 0:
        nc = 0
        for i in range(n):
            if not is_gbr[lo + i] and need[lo + i] > 0:
                cand[lo + nc] = i
                nc += 1
        if nc > 0:
            off = rr % nc
            # start the round-robin at a rotating offset
            for k in range(off):
                j = cand[lo]
                for m in range(nc - 1):
                    cand[lo + m] = cand[lo + m + 1]
                cand[lo + nc - 1] = j
        while rem > 0 and nc > 0:
            share = rem // nc
            if share == 0:
                for k in range(rem):
                    alloc[lo + cand[lo + k]] += 1
                rem = 0
                break
            m = 0
            for k in range(nc):
                i = cand[lo + k]
                g = _imin(share, need[lo + i] - alloc[lo + i])
                alloc[lo + i] += g
                rem -= g
                if need[lo + i] > alloc[lo + i]:
                    cand[lo + m] = i
                    m += 1
            nc = m
    if rem > 0:
        for i in range(n):
            if rem == 0:
                break
            if is_gbr[lo + i] and need[lo + i] > alloc[lo + i]:
                g = _imin(need[lo + i] - alloc[lo + i], rem)
                alloc[lo + i] += g
                rem -= g


def allocate_prbs(is_gbr, gbr_bits, queued_bits, bpp, hol_old, nprb, rr):
    """PRB split for one TTI (see the pure-Python twin for the rule)."""
    n = len(bpp)
    cdef i64[:] a_gbr = np.asarray(is_gbr, dtype=np.int64).copy()
    cdef i64[:] a_bits = np.asarray(gbr_bits, dtype=np.int64).copy()
    cdef i64[:] a_q = np.asarray(queued_bits, dtype=np.int64).copy()
    cdef i64[:] a_bpp = np.asarray(bpp, dtype=np.int64).copy()
    cdef i64[:] a_hol = np.asarray(hol_old, dtype=np.int64).copy()
    need = np.zeros(n, dtype=np.int64)
    alloc = np.zeros(n, dtype=np.int64)
    cand = np.zeros(n, dtype=np.int64)
    if n:
        _alloc_core(n, a_gbr, a_bits, a_q, a_bpp, a_hol, nprb, rr, need, alloc, cand, 0)
    return [int(x) for x in alloc]


cdef void _waterfill_core(i64 n, double[:] need, double budget, double[:] give,
                          i64[:] order, i64 lo) nogil:
    cdef i64 i, j, key
    cdef double share, rem, g
    for i in range(n):
        order[lo + i] = i
    # insertion sort by (need, index)
    for i in range(1, n):
        key = order[lo + i]
        j = i - 1
        while j >= 0 and (need[lo + order[lo + j]] > need[lo + key] or
                          (need[lo + order[lo + j]] == need[lo + key] and order[lo + j] > key)):
            order[lo + j + 1] = order[lo + j]
            j -= 1
        order[lo + j + 1] = key
    rem = budget
    for j in range(n):
        i = order[lo + j]
        share = rem / (n - j)
        g = need[lo + i] if need[lo + i] <= share else share
        give[lo + i] = g
        rem -= g


def airtime_waterfill(need_us, budget_us):
    n = len(need_us)
    cdef double[:] a_need = np.asarray(need_us, dtype=np.float64).copy()
    give = np.zeros(n, dtype=np.float64)
    order = np.zeros(n, dtype=np.int64)
    if n:
        _waterfill_core(n, a_need, float(budget_us), give, order, 0)
    return [float(x) for x in give]


cdef class Kernel:
    cdef public i64[:] f_start, f_end, f_P, f_R, f_size, f_hdr, f_pdb, f_gen
    cdef public i64[:] f_acc_lo, f_acc_hi, f_iface, f_user
    cdef public i64[:] s_ontime, s_late, s_drop, s_lat_sum, s_lat_max, s_hdr, s_epoch_bits
    cdef public i64[:, :] s_hist
    cdef public double[:] e_prb_us, e_rx_us, e_air_us
    cdef public i64[:, :, :] q_seg
    cdef public i64[:] q_sh, q_sn, q_sent, q_bytes
    cdef public double[:] q_phy
    cdef public double[:, :] G
    cdef public double[:] noise
    cdef public i64[:] act, sec_cell, b_ptr, b_q, b_gbr, b_alloc, u_prbs
    cdef public i64[:, :] sec_hist
    cdef public i64[:] sec_prb_meas, sec_att
    cdef public double[:] sec_idle_int, sec_idle_unatt
    cdef public i64[:] w_ptr, w_q, ap_att
    cdef public double[:] ap_busy_total, ap_busy_meas, ap_idle_int, ap_idle_unatt
    cdef public i64[:, :] trace_buf
    cdef public i64 trace_on, trace_n
    cdef public i64 tti_us, nprb, lte_delay_us, wlan_delay_us, discard_us, hol_wait_us
    cdef public double eta, lte_bw, lte_cap, wlan_eff, wlan_backhaul_bps
    cdef public i64 n_flows, n_sectors, n_aps
    # scratch
    cdef i64[:] x_gbr, x_bits, x_q, x_bpp, x_hol, x_need, x_alloc, x_cand, x_next
    cdef i64[:] y_idx, y_ord, y_bud
    cdef double[:] y_need, y_give

    def __init__(self, arrays, params):
        for name, arr in arrays.items():
            setattr(self, name, arr)
        for name, val in params.items():
            setattr(self, name, val)
        self.n_flows = len(arrays["f_start"])
        self.n_sectors = len(arrays["act"])
        self.n_aps = len(arrays["ap_busy_total"])
        self.trace_n = 0
        self.x_next = np.zeros(self.n_sectors, dtype=np.int64)
        self._scratch()

    def _scratch(self):
        nb = max(len(self.b_q), 1)
        self.x_gbr = np.zeros(nb, dtype=np.int64)
        self.x_bits = np.zeros(nb, dtype=np.int64)
        self.x_q = np.zeros(nb, dtype=np.int64)
        self.x_bpp = np.zeros(nb, dtype=np.int64)
        self.x_hol = np.zeros(nb, dtype=np.int64)
        self.x_need = np.zeros(nb, dtype=np.int64)
        self.x_alloc = np.zeros(nb, dtype=np.int64)
        self.x_cand = np.zeros(nb, dtype=np.int64)
        nw = max(len(self.w_q), 1)
        self.y_idx = np.zeros(nw, dtype=np.int64)
        self.y_ord = np.zeros(nw, dtype=np.int64)
        self.y_bud = np.zeros(nw, dtype=np.int64)
        self.y_need = np.zeros(nw, dtype=np.float64)
        self.y_give = np.zeros(nw, dtype=np.float64)

    def set_bearers(self, b_ptr, b_q, b_gbr, b_alloc):
        self.b_ptr = b_ptr
        self.b_q = b_q
        self.b_gbr = b_gbr
        self.b_alloc = b_alloc
        self._scratch()

    # -- packet index helpers -------------------------------------------
    cdef inline i64 _first_idx(self, i64 f, i64 t) nogil:
        cdef i64 d = t - self.f_start[f]
        cdef i64 p
        if d <= 0:
            return 0
        p = self.f_P[f]
        return (d * self.f_R[f] + p - 1) // p

    cdef inline i64 _created(self, i64 f, i64 k) nogil:
        return self.f_start[f] + (k * self.f_P[f]) // self.f_R[f]

    cdef inline i64 _in_window(self, i64 f, i64 a, i64 b) nogil:
        cdef i64 lo = a if a > self.f_acc_lo[f] else self.f_acc_lo[f]
        cdef i64 hi = b if b < self.f_acc_hi[f] else self.f_acc_hi[f]
        return hi - lo if hi > lo else 0

    cdef inline i64 _psize(self, i64 q, i64 f) nogil:
        return self.f_size[f] + (self.f_hdr[f] if q & 1 else 0)

    # -- queue operations ------------------------------------------------
    cdef int _push(self, i64 q, i64 a, i64 b) except -1:
        cdef i64 sn = self.q_sn[q]
        cdef i64 last, slot
        if sn > 0:
            last = (self.q_sh[q] + sn - 1) % MAXSEG
            if self.q_seg[q, last, 1] == a:
                self.q_seg[q, last, 1] = b
                return 0
        if sn == MAXSEG:
            raise RuntimeError(f"queue {q} exceeded {MAXSEG} segments")
        slot = (self.q_sh[q] + sn) % MAXSEG
        self.q_seg[q, slot, 0] = a
        self.q_seg[q, slot, 1] = b
        self.q_sn[q] = sn + 1
        return 0

    cdef inline void _pop(self, i64 q) nogil:
        self.q_sh[q] = (self.q_sh[q] + 1) % MAXSEG
        self.q_sn[q] -= 1

    cdef void _expire(self, i64 q, i64 f, i64 t) nogil:
        cdef i64 kmin, psize, h, a, b, cut
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

    cdef void _deliver(self, i64 q, i64 f, i64 k, i64 td) nogil:
        cdef i64 lat = td - self._created(f, k)
        cdef i64 size = self.f_size[f]
        cdef bint ontime = lat <= self.f_pdb[f]
        cdef i64 b, n
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
            if n < self.trace_buf.shape[0]:
                self.trace_buf[n, 0] = f
                self.trace_buf[n, 1] = k
                self.trace_buf[n, 2] = td - lat
                self.trace_buf[n, 3] = td
                self.trace_buf[n, 4] = q & 1
                self.trace_buf[n, 5] = self._psize(q, f)
                self.trace_n = n + 1

    cdef i64 _drain(self, i64 q, i64 f, i64 budget, i64 td) nogil:
        cdef i64 psize = self._psize(q, f)
        cdef i64 used = 0
        cdef i64 h, a, rem
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
    def generate(self, i64 t):
        cdef i64 f, n, n_end, g, iface, q
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

    def lte_tti(self, i64 t, i64 tti, bint measuring):
        cdef i64 nprb = self.nprb
        cdef i64 tti_us = self.tti_us
        cdef i64 td = t + tti_us + self.lte_delay_us
        cdef i64 s, lo, hi, used, n, i, j, q, f, gb, qb, u, g, head
        cdef double interf, sinr, rate, idle
        for s in range(self.n_sectors):
            lo = self.b_ptr[s]
            hi = self.b_ptr[s + 1]
            used = 0
            if hi > lo:
                n = hi - lo
                for i in range(lo, hi):
                    q = self.b_q[i]
                    f = q >> 1
                    self._expire(q, f, t)
                    gb = self.b_gbr[i]
                    self.x_gbr[i] = 1 if gb > 0 else 0
                    self.x_bits[i] = gb
                    self.x_q[i] = 0
                    self.x_bpp[i] = 0
                    self.x_hol[i] = 0
                    qb = self.q_bytes[q]
                    if qb <= 0:
                        continue
                    self.x_q[i] = qb * 8
                    u = self.f_user[f]
                    interf = 0.0
                    for j in range(self.n_sectors):
                        if self.act[j] and self.sec_cell[j] != self.sec_cell[s]:
                            interf += self.G[u, j] * self.act[j] / nprb
                    sinr = self.G[u, s] / (self.noise[u] + interf)
                    rate = self.eta * self.lte_bw * log2(1.0 + sinr)
                    if rate > self.lte_cap:
                        rate = self.lte_cap
                    self.x_bpp[i] = <i64>(rate * tti_us / (1e6 * nprb))
                    head = self.q_seg[q, self.q_sh[q], 0]
                    self.x_hol[i] = 1 if t - self._created(f, head) >= self.hol_wait_us else 0
                _alloc_core(n, self.x_gbr, self.x_bits, self.x_q, self.x_bpp, self.x_hol,
                            nprb, tti, self.x_need, self.x_alloc, self.x_cand, lo)
                for i in range(lo, hi):
                    g = self.x_alloc[i]
                    self.b_alloc[i] = g
                    if g == 0:
                        continue
                    q = self.b_q[i]
                    f = q >> 1
                    used += g
                    self._drain(q, f, (g * self.x_bpp[i]) // 8, td)
                    if measuring:
                        self.e_prb_us[f] += (<double>(g * tti_us)) / nprb
                        self.u_prbs[self.f_user[f]] += g
                if measuring:
                    for i in range(lo, hi):
                        g = self.x_alloc[i]
                        if g == 0:
                            continue
                        f = self.b_q[i] >> 1
                        self.e_rx_us[f] += (<double>(tti_us * g)) / self.u_prbs[self.f_user[f]]
                    for i in range(lo, hi):
                        self.u_prbs[self.f_user[self.b_q[i] >> 1]] = 0
            self.x_next[s] = used
            self.sec_hist[s, tti % self.sec_hist.shape[1]] = used
            if measuring:
                self.sec_prb_meas[s] += used
                idle = tti_us - (<double>(used * tti_us)) / nprb
                if self.sec_att[s] > 0:
                    self.sec_idle_int[s] += idle / self.sec_att[s]
                else:
                    self.sec_idle_unatt[s] += idle
        for s in range(self.n_sectors):
            self.act[s] = self.x_next[s]

    def wlan_serve(self, i64 t, i64 dt_us, bint measuring):
        cdef i64 td = t + dt_us + self.wlan_delay_us
        cdef i64 a, lo, hi, i, j, q, f, qb, m, total_bits
        cdef double busy, cap_bits, scale, idle
        for a in range(self.n_aps):
            lo = self.w_ptr[a]
            hi = self.w_ptr[a + 1]
            m = 0
            for i in range(lo, hi):
                q = self.w_q[i]
                f = q >> 1
                self._expire(q, f, t)
                qb = self.q_bytes[q]
                if qb > 0:
                    self.y_idx[lo + m] = q
                    self.y_need[lo + m] = (<double>(qb * 8)) * 1e6 / (self.wlan_eff * self.q_phy[q])
                    m += 1
            busy = 0.0
            if m > 0:
                _waterfill_core(m, self.y_need, <double>dt_us, self.y_give, self.y_ord, lo)
                total_bits = 0
                for j in range(lo, lo + m):
                    q = self.y_idx[j]
                    if self.y_give[j] == self.y_need[j]:
                        self.y_bud[j] = self.q_bytes[q]
                    else:
                        self.y_bud[j] = <i64>(self.y_give[j] * self.wlan_eff * self.q_phy[q] / 8e6)
                    total_bits += self.y_bud[j] * 8
                    busy += self.y_give[j]
                cap_bits = self.wlan_backhaul_bps * dt_us / 1e6
                if self.wlan_backhaul_bps > 0 and total_bits > cap_bits:
                    scale = cap_bits / total_bits
                    busy = 0.0
                    for j in range(lo, lo + m):
                        self.y_bud[j] = <i64>(self.y_bud[j] * scale)
                        self.y_give[j] = self.y_give[j] * scale
                        busy += self.y_give[j]
                for j in range(lo, lo + m):
                    q = self.y_idx[j]
                    f = q >> 1
                    self._drain(q, f, self.y_bud[j], td)
                    if measuring:
                        self.e_air_us[f] += self.y_give[j]
            self.ap_busy_total[a] += busy
            if measuring:
                self.ap_busy_meas[a] += busy
                idle = dt_us - busy
                if self.ap_att[a] > 0:
                    self.ap_idle_int[a] += idle / self.ap_att[a]
                else:
                    self.ap_idle_unatt[a] += idle
