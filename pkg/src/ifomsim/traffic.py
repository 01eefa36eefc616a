"""Constant-bit-rate downlink sources and per-packet QoS bookkeeping.

Packet ``k`` of a flow is created at ``start + floor(k * bits * 1e6 / rate)``
microseconds, so generated bits never drift from ``rate * elapsed``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DomainError
from .topology import Category

US_PER_S = 1_000_000


class FlowClass(enum.Enum):
    VOIP = "voip"
    VIDEO = "video"
    FTP = "ftp"

    @property
    def realtime(self) -> bool:
        return self is not FlowClass.FTP


# (rate bps, packet bytes, qci, priority, pdb ms, per target)
CLASS_PROFILE = {
    FlowClass.VOIP: (12_200, 33, 1, 2, 100, 1e-2),
    FlowClass.VIDEO: (1_500_000, 250, 2, 4, 150, 1e-3),
    FlowClass.FTP: (None, 1024, 9, 9, 300, None),
}
FTP_RATES = (256_000, 512_000, 1_024_000)


@dataclass(frozen=True)
class Flow:
    fid: int
    owner: int
    cls: FlowClass
    data_rate: int
    packet_size: int
    qci: int
    pdb_ms: float
    per_target: float | None
    start: int = 0  # us
    end: int | None = None  # us, exclusive

    def __post_init__(self):
        rate, size, qci, _prio, pdb, per = CLASS_PROFILE[self.cls]
        if self.cls is FlowClass.FTP:
            if self.data_rate not in FTP_RATES:
                raise DomainError(f"FTP rate must be one of {FTP_RATES}, got {self.data_rate}")
        elif self.data_rate != rate:
            raise DomainError(f"{self.cls.name} rate must be {rate}, got {self.data_rate}")
        if self.packet_size != size or self.qci != qci or self.per_target != per:
            raise DomainError(f"{self.cls.name} profile mismatch: size={self.packet_size} "
                              f"qci={self.qci} per={self.per_target}")
        if self.cls.realtime and self.pdb_ms != pdb:
            raise DomainError(f"{self.cls.name} pdb must be {pdb} ms, got {self.pdb_ms}")
        if self.end is not None and self.end < self.start:
            raise DomainError("flow ends before it starts")

    @classmethod
    def of(cls, fid, owner, flow_class, *, ftp_rate=512_000, ftp_pdb_ms=300.0,
           start=0, end=None):
        fc = FlowClass(flow_class)
        rate, size, qci, _prio, pdb, per = CLASS_PROFILE[fc]
        if fc is FlowClass.FTP:
            rate, pdb = int(ftp_rate), ftp_pdb_ms
        return cls(fid, owner, fc, rate, size, qci, pdb, per, start, end)

    @property
    def priority(self) -> int:
        return CLASS_PROFILE[self.cls][3]

    @property
    def gbr(self) -> int | None:
        return self.data_rate if self.qci in (1, 2) else None

    @property
    def packet_bits(self) -> int:
        return self.packet_size * 8

    @property
    def pdb_us(self) -> int:
        return int(round(self.pdb_ms * 1000))

    def inter_arrival_s(self) -> float:
        return self.packet_bits / self.data_rate

    def created_at(self, k: int) -> int:
        """Creation time (us) of packet ``k``."""
        return self.start + (k * self.packet_bits * US_PER_S) // self.data_rate

    def first_index_at_or_after(self, t: int) -> int:
        """Index of the first packet created at or after time ``t``."""
        d = t - self.start
        if d <= 0:
            return 0
        p = self.packet_bits * US_PER_S
        return (d * self.data_rate + p - 1) // p

    def packets_until(self, t: int) -> int:
        """Number of packets created at or before ``t`` (respecting ``end``)."""
        n = self.first_index_at_or_after(t + 1)
        if self.end is not None:
            n = min(n, self.first_index_at_or_after(self.end))
        return n


def next_arrival(flow: Flow, now: int) -> int | None:
    """Creation time of the first packet strictly after ``now``; None once ended."""
    k = flow.first_index_at_or_after(now + 1)
    t = flow.created_at(k)
    if flow.end is not None and t >= flow.end:
        return None
    return t


@dataclass
class Packet:
    fid: int
    seq: int
    size: int
    created: int
    delivered: int | None = None
    egress: str | None = None

    def __post_init__(self):
        if self.delivered is not None and self.delivered < self.created:
            raise DomainError("packet delivered before it was created")


class Delivery(enum.Enum):
    ON_TIME = "on_time"
    LOST = "lost"


@dataclass(frozen=True)
class DeliveryRecord:
    latency_us: int
    status: Delivery


def record_delivery(pkt: Packet, now: int, pdb_us: int) -> DeliveryRecord:
    """Classify a delivery against the class delay budget (boundary inclusive)."""
    if now < pkt.created:
        raise DomainError("delivery precedes creation")
    pkt.delivered = now
    lat = now - pkt.created
    return DeliveryRecord(lat, Delivery.ON_TIME if lat <= pdb_us else Delivery.LOST)


# scenario -> (realtime class, ftp rate) for IeUs
SCENARIO_PAIRING = {
    1: (FlowClass.VOIP, 256_000),
    2: (FlowClass.VIDEO, 512_000),
}
BACKGROUND_FTP_RATE = 512_000


def make_flow_set(node, scenario: int, *, first_fid: int = 0, ftp_rate: int | None = None,
                  ftp_pdb_ms: float = 300.0, start: int = 0, end: int | None = None):
    """Flows carried by ``node``: real-time + FTP for IeUs, one FTP otherwise."""
    if node.category is Category.BACKGROUND:
        return [Flow.of(first_fid, node.id, FlowClass.FTP, ftp_rate=BACKGROUND_FTP_RATE,
                        ftp_pdb_ms=ftp_pdb_ms, start=start, end=end)]
    try:
        rt, default_ftp = SCENARIO_PAIRING[int(scenario)]
    except KeyError:
        raise DomainError(f"unknown scenario {scenario!r}") from None
    rate = default_ftp if ftp_rate is None else ftp_rate
    return [
        Flow.of(first_fid, node.id, rt, start=start, end=end),
        Flow.of(first_fid + 1, node.id, FlowClass.FTP, ftp_rate=rate,
                ftp_pdb_ms=ftp_pdb_ms, start=start, end=end),
    ]
