"""Airtime-sharing abstraction of an 802.11g access point.

Backlogged stations split the medium's airtime equally; a station that needs
less than its share cedes the remainder to the others.  A station's bytes
per second of airtime are ``mac_efficiency * phy_rate / 8``, so slow stations
get the same airtime but less throughput.
"""

from __future__ import annotations

import enum
from collections import deque

from .errors import AlreadyAssociated, DomainError
from ._kernels import get_backend


class AssociationResult(enum.Enum):
    ASSOCIATED = "associated"
    REJECTED = "rejected"


class AssociationRegistry(dict):
    """flow id -> access point id, shared by the APs of a deployment."""


class AccessPoint:
    def __init__(self, ap_id: int = 0, *, mac_efficiency: float = 0.55,
                 beacon_us: int = 100_000, window_us: int = 1_000_000,
                 reject_threshold: float = 0.95, backhaul_bps: float = 0.0,
                 registry: AssociationRegistry | None = None, backend=None):
        if not 0 < mac_efficiency <= 1:
            raise DomainError(f"mac efficiency must be in (0, 1], got {mac_efficiency}")
        self.id = ap_id
        self.eff = mac_efficiency
        self.beacon_us = beacon_us
        self.window_us = window_us
        self.reject_threshold = reject_threshold
        self.backhaul_bps = backhaul_bps
        self.registry = AssociationRegistry() if registry is None else registry
        self.backend = backend
        self.phy: dict[int, float] = {}
        self.queues: dict[int, int] = {}
        self.attempts = 0
        self.rejected = 0
        self.now_us = 0
        self.busy_total_us = 0.0
        self._samples = deque([(0, 0.0)], maxlen=window_us // beacon_us + 1)
        self._util = 0.0

    # -- association -------------------------------------------------------
    def associate_flow(self, fid: int, station_phy_rate: float) -> AssociationResult:
        if fid in self.registry:
            raise AlreadyAssociated(f"flow {fid} is associated with AP {self.registry[fid]}")
        self.attempts += 1
        if self._util >= self.reject_threshold:
            self.rejected += 1
            return AssociationResult.REJECTED
        self.registry[fid] = self.id
        self.phy[fid] = float(station_phy_rate)
        self.queues.setdefault(fid, 0)
        return AssociationResult.ASSOCIATED

    def disassociate(self, fid: int) -> None:
        if self.registry.get(fid) == self.id:
            del self.registry[fid]
        self.phy.pop(fid, None)
        self.queues.pop(fid, None)

    # -- standalone service ------------------------------------------------
    def enqueue(self, fid: int, nbytes: int) -> None:
        if fid not in self.phy:
            raise KeyError(f"flow {fid} not associated with AP {self.id}")
        self.queues[fid] += nbytes

    def serve_interval(self, dt_ms: float) -> dict[int, int]:
        """Serve ``dt_ms`` of airtime; returns bytes delivered per flow."""
        if not dt_ms > 0:
            raise DomainError(f"service interval must be positive, got {dt_ms}")
        dt_us = dt_ms * 1000.0
        fids = [f for f in self.queues if self.queues[f] > 0]
        need = [self.queues[f] * 8 * 1e6 / (self.eff * self.phy[f]) for f in fids]
        give = get_backend(self.backend).airtime_waterfill(need, dt_us) if fids else []
        out = {}
        busy = 0.0
        for f, g, n in zip(fids, give, need):
            if g == n:
                sent = self.queues[f]
            else:
                sent = int(g * self.eff * self.phy[f] / 8e6)
            out[f] = sent
            busy += g
        if self.backhaul_bps > 0 and out:
            cap = self.backhaul_bps * dt_us / 1e6
            total = 8 * sum(out.values())
            if total > cap:
                scale = cap / total
                out = {f: int(b * scale) for f, b in out.items()}
                busy *= scale
        for f, b in out.items():
            self.queues[f] -= b
        self.busy_total_us += busy
        t0 = self.now_us
        self.now_us = int(round(t0 + dt_us))
        # beacons falling inside this interval see the busy time so far
        nb = (t0 // self.beacon_us + 1) * self.beacon_us
        while nb <= self.now_us:
            self.on_beacon(nb)
            nb += self.beacon_us
        return out

    # -- utilization -------------------------------------------------------
    def on_beacon(self, now_us: int, busy_total_us: float | None = None) -> float:
        """Refresh the advertised utilization from the busy-airtime counter."""
        if busy_total_us is not None:
            self.busy_total_us = float(busy_total_us)
        self._samples.append((now_us, self.busy_total_us))
        t_old, b_old = self._samples[0]
        span = now_us - t_old
        if span <= 0:
            self._util = 0.0
        else:
            self._util = min(1.0, max(0.0, (self.busy_total_us - b_old) / span))
        return self._util

    def channel_utilization(self) -> float:
        return self._util

    def airtime_fraction(self, rate_bps: float, phy_bps: float) -> float:
        """Share of airtime a CBR load of ``rate_bps`` occupies at ``phy_bps``."""
        return rate_bps / (self.eff * phy_bps) if phy_bps > 0 else float("inf")
