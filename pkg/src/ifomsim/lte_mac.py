"""Per-sector LTE downlink MAC: bearer admission, PRB scheduling, utilization.

:class:`LteSector` is a self-contained scheduler with its own packet queues,
used directly for small experiments.  Inside a simulation run the engine
keeps the queues in kernel arrays and uses the sector only for admission
state and bearer ordering; both paths share :func:`allocate_prbs`.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .errors import DomainError, DuplicateBearer
from ._kernels import get_backend

PRBS_PER_TTI = 50
TTI_US = 1000

# qci -> (pdb ms, per); qci 9 has no guaranteed rate
QCI_PROFILE = {1: (100.0, 1e-2), 2: (150.0, 1e-3), 9: (None, None)}


class AdmissionResult(enum.Enum):
    ADMITTED = "admitted"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class Bearer:
    flow_id: int
    qci: int
    gbr: float | None
    priority: int
    pdb: float | None = None
    per: float | None = None

    def __post_init__(self):
        if self.qci not in QCI_PROFILE:
            raise DomainError(f"unsupported qci {self.qci}")
        pdb, per = QCI_PROFILE[self.qci]
        if self.qci == 9:
            if self.gbr is not None:
                raise DomainError("default bearer carries no guaranteed rate")
        else:
            if not self.gbr or self.gbr <= 0:
                raise DomainError(f"qci {self.qci} bearer needs a positive gbr")
            if self.pdb != pdb or self.per != per:
                raise DomainError(f"qci {self.qci} requires pdb={pdb} ms, per={per}")

    @property
    def is_gbr(self) -> bool:
        return self.gbr is not None

    @classmethod
    def for_flow(cls, flow) -> "Bearer":
        if flow.gbr is None:
            return cls(flow.fid, flow.qci, None, flow.priority, flow.pdb_ms, None)
        return cls(flow.fid, flow.qci, float(flow.gbr), flow.priority,
                   flow.pdb_ms, flow.per_target)


@dataclass
class PrbGrid:
    prbs_per_tti: int
    tti_ms: float
    allocation: dict = field(default_factory=dict)  # flow id -> PRBs this TTI

    @property
    def used(self) -> int:
        return sum(self.allocation.values())

    @property
    def utilization(self) -> float:
        return self.used / self.prbs_per_tti


def bits_per_prb(rate_bps: float, nprb: int = PRBS_PER_TTI, tti_us: int = TTI_US) -> int:
    """Whole bits one PRB carries in one TTI at ``rate_bps`` spread flat over the band."""
    return int(rate_bps * tti_us / (1e6 * nprb))


def gbr_bits_per_tti(gbr_bps: float, tti_us: int = TTI_US) -> int:
    return -(-int(round(gbr_bps * tti_us)) // 1_000_000)


def allocate_prbs(is_gbr, gbr_bits, queued_bits, bpp, hol_old, nprb=PRBS_PER_TTI, rr=0,
                  backend=None):
    return get_backend(backend).allocate_prbs(is_gbr, gbr_bits, queued_bits, bpp,
                                              hol_old, nprb, rr)


def window_utilization(hist_row, last_tti: int, window_ttis: int, nprb: int) -> float:
    """Mean PRB occupancy over the ``window_ttis`` TTIs ending at ``last_tti``.

    ``hist_row`` is a ring indexed by ``tti % len(hist_row)``; TTIs before the
    start of the run count as idle.
    """
    if window_ttis < 1:
        raise DomainError("utilization window must cover at least one TTI")
    n = len(hist_row)
    window_ttis = min(window_ttis, n)
    total = 0
    for k in range(last_tti - window_ttis + 1, last_tti + 1):
        if k >= 0:
            total += int(hist_row[k % n])
    return total / (window_ttis * nprb)


class LteSector:
    """One macro sector's scheduler state."""

    def __init__(self, sector_id: int = 0, *, nprb: int = PRBS_PER_TTI, tti_us: int = TTI_US,
                 admission_threshold: float = 0.9, delay_us: int = 1000,
                 hol_wait_us: int = 5000, history: int = 1000, backend=None):
        self.id = sector_id
        self.nprb = nprb
        self.tti_us = tti_us
        self.admission_threshold = admission_threshold
        self.delay_us = delay_us
        self.hol_wait_us = hol_wait_us
        self.backend = backend
        self.bearers: dict[int, Bearer] = {}
        self.rates: dict[int, float] = {}
        self._seq: dict[int, int] = {}
        self.gbr_load = 0.0
        self.attempts = 0
        self.blocked = 0
        self.queues: dict[int, deque] = {}
        self.delivered: list[tuple] = []  # (fid, created, delivered_at, bytes)
        self.hist = [0] * history
        self.last_tti = -1

    # -- admission ---------------------------------------------------------
    def admit_bearer(self, b: Bearer, rate_bps: float) -> AdmissionResult:
        """GBR bearers must fit inside the admission fraction of PRB time.

        Each admitted GBR bearer occupies ``gbr / rate`` of the sector, where
        ``rate`` is the bearer's achievable rate; non-GBR bearers always pass.
        """
        if b.flow_id in self.bearers:
            raise DuplicateBearer(f"flow {b.flow_id} already has a bearer in sector {self.id}")
        self.attempts += 1
        if b.is_gbr:
            share = b.gbr / rate_bps if rate_bps > 0 else float("inf")
            # tiny slack keeps an exactly-full budget from flipping on rounding
            if self.gbr_load + share > self.admission_threshold + 1e-12:
                self.blocked += 1
                return AdmissionResult.BLOCKED
            self.gbr_load += share
        self.bearers[b.flow_id] = b
        self.rates[b.flow_id] = rate_bps
        self._seq[b.flow_id] = len(self._seq)
        self.queues[b.flow_id] = deque()
        return AdmissionResult.ADMITTED

    def release_bearer(self, fid: int) -> None:
        b = self.bearers.pop(fid)
        if b.is_gbr:
            self.gbr_load = max(0.0, self.gbr_load - b.gbr / self.rates[fid])
        del self.rates[fid]
        del self.queues[fid]

    def bearer_order(self) -> list[int]:
        """GBR bearers by priority, then default bearers in admission order."""
        def key(fid):
            b = self.bearers[fid]
            return (0, b.priority, self._seq[fid]) if b.is_gbr else (1, 0, self._seq[fid])
        return sorted(self.bearers, key=key)

    # -- standalone scheduling ---------------------------------------------
    def set_rate(self, fid: int, rate_bps: float) -> None:
        self.rates[fid] = rate_bps

    def enqueue(self, fid: int, nbytes: int, created_us: int = 0) -> None:
        self.queues[fid].append([created_us, nbytes])

    def queued_bytes(self, fid: int) -> int:
        return sum(p[1] for p in self.queues[fid])

    def schedule_tti(self, tti_index: int, now_us: int | None = None) -> PrbGrid:
        now = tti_index * self.tti_us if now_us is None else now_us
        order = self.bearer_order()
        is_gbr, gbr_bits, qbits, bpp, hol = [], [], [], [], []
        for fid in order:
            b = self.bearers[fid]
            q = self.queues[fid]
            is_gbr.append(1 if b.is_gbr else 0)
            gbr_bits.append(gbr_bits_per_tti(b.gbr, self.tti_us) if b.is_gbr else 0)
            qbits.append(8 * sum(p[1] for p in q))
            bpp.append(bits_per_prb(self.rates[fid], self.nprb, self.tti_us))
            hol.append(1 if q and now - q[0][0] >= self.hol_wait_us else 0)
        alloc = allocate_prbs(is_gbr, gbr_bits, qbits, bpp, hol, self.nprb, tti_index,
                              backend=self.backend)
        grid = PrbGrid(self.nprb, self.tti_us / 1000.0)
        t_del = now + self.tti_us + self.delay_us
        for fid, g, per_prb in zip(order, alloc, bpp):
            if g == 0:
                continue
            grid.allocation[fid] = g
            budget = g * per_prb // 8
            q = self.queues[fid]
            while budget > 0 and q:
                head = q[0]
                if budget >= head[1]:
                    budget -= head[1]
                    q.popleft()
                    self.delivered.append((fid, head[0], t_del, head[1]))
                else:
                    head[1] -= budget
                    budget = 0
        self.last_tti = tti_index
        self.hist[tti_index % len(self.hist)] = grid.used
        return grid

    def prb_utilization(self, window_ms: float) -> float:
        ttis = int(round(window_ms * 1000 / self.tti_us))
        return window_utilization(self.hist, self.last_tti, ttis, self.nprb)
