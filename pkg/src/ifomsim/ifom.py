"""Home-agent binding cache with multiple care-of addresses and flow bindings.

The HA keeps one :class:`BindingCacheEntry` per (home address, binding id)
and one :class:`FlowBindingRule` per flow id.  Packets headed for a home
address are matched against the flow rules; the chosen binding decides the
egress access and whether the IFOM tunnel header is added.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

from .errors import (BindingInUse, DomainError, NoMatchingRule, UnknownBinding,
                     UnknownFlow)

LTE = "lte"
WLAN = "wlan"
NON_3GPP = frozenset({WLAN})

PLAIN_HEADER = 24
SECURED_HEADER = 68


def tunnel_overhead_pct(header_bytes: int, payload_bytes: int) -> float:
    if payload_bytes <= 0:
        raise DomainError(f"payload must be positive, got {payload_bytes}")
    return 100.0 * header_bytes / payload_bytes


@dataclass(frozen=True)
class TunnelConfig:
    header_bytes: int = SECURED_HEADER
    override: bool = False

    def __post_init__(self):
        if not self.override and self.header_bytes not in (PLAIN_HEADER, SECURED_HEADER):
            raise DomainError(f"tunnel header must be 24 or 68 bytes, got {self.header_bytes}")
        if self.header_bytes < 0:
            raise DomainError("negative tunnel header")


@dataclass(frozen=True)
class TrafficSelector:
    src: str | None = None
    dst: str | None = None
    sport: int | None = None
    dport: int | None = None
    tclass: str | None = None

    def __post_init__(self):
        if all(v is None for v in (self.src, self.dst, self.sport, self.dport, self.tclass)):
            raise DomainError("traffic selector needs at least one match term")

    def matches(self, pkt: "RoutedPacket") -> bool:
        return ((self.src is None or self.src == pkt.src)
                and (self.dst is None or self.dst == pkt.dst)
                and (self.sport is None or self.sport == pkt.sport)
                and (self.dport is None or self.dport == pkt.dport)
                and (self.tclass is None or self.tclass == pkt.tclass))


@dataclass(frozen=True)
class BindingCacheEntry:
    hoa: str
    coa: str
    bid: int
    binding_priority: int
    iface: str


@dataclass(frozen=True)
class FlowBindingRule:
    fid: int
    hoa: str
    selector: TrafficSelector
    bid: int
    fb_priority: int = 0


@dataclass(frozen=True)
class BindingAck:
    hoa: str
    bid: int
    status: str  # "created" | "refreshed" | "deleted" | "bound"


@dataclass(frozen=True)
class SwitchEvent:
    time: int
    fid: int
    old_bid: int
    new_bid: int
    redundant: bool = False


@dataclass(frozen=True)
class RoutedPacket:
    dst: str
    payload_bytes: int
    src: str | None = None
    sport: int | None = None
    dport: int | None = None
    tclass: str | None = None
    time: int = 0


@dataclass
class BindingCache:
    tunnel: TunnelConfig = field(default_factory=TunnelConfig)
    entries: dict = field(default_factory=dict)  # (hoa, bid) -> entry
    rules: dict = field(default_factory=dict)  # fid -> rule
    switch_log: list = field(default_factory=list)
    _order: dict = field(default_factory=dict)  # fid -> insertion counter
    _counter: itertools.count = field(default_factory=itertools.count)

    # -- binding updates ---------------------------------------------------
    def register_binding(self, hoa, coa, bid, priority, iface=LTE) -> BindingAck:
        if not isinstance(bid, int) or bid < 0:
            raise DomainError(f"malformed binding id {bid!r}")
        key = (hoa, bid)
        status = "refreshed" if key in self.entries else "created"
        self.entries[key] = BindingCacheEntry(hoa, coa, bid, priority, iface)
        return BindingAck(hoa, bid, status)

    def deregister_binding(self, hoa, bid) -> BindingAck:
        if (hoa, bid) not in self.entries:
            raise UnknownBinding((hoa, bid))
        for r in self.rules.values():
            if r.hoa == hoa and r.bid == bid:
                raise BindingInUse(f"flow {r.fid} still bound to {hoa}/BID{bid}")
        del self.entries[(hoa, bid)]
        return BindingAck(hoa, bid, "deleted")

    def bind_flow(self, rule: FlowBindingRule) -> BindingAck:
        if (rule.hoa, rule.bid) not in self.entries:
            raise UnknownBinding((rule.hoa, rule.bid))
        if rule.fid not in self._order:
            self._order[rule.fid] = next(self._counter)
        self.rules[rule.fid] = rule
        return BindingAck(rule.hoa, rule.bid, "bound")

    def switch_flow(self, fid, new_bid, at: int = 0) -> SwitchEvent:
        """Retarget ``fid``; packets routed after ``at`` use ``new_bid``."""
        try:
            rule = self.rules[fid]
        except KeyError:
            raise UnknownFlow(fid) from None
        if (rule.hoa, new_bid) not in self.entries:
            raise UnknownBinding((rule.hoa, new_bid))
        ev = SwitchEvent(at, fid, rule.bid, new_bid, redundant=(rule.bid == new_bid))
        if not ev.redundant:
            self.rules[fid] = FlowBindingRule(rule.fid, rule.hoa, rule.selector,
                                              new_bid, rule.fb_priority)
        self.switch_log.append(ev)
        return ev

    # -- lookups -----------------------------------------------------------
    def entry_for(self, fid) -> BindingCacheEntry:
        rule = self.rules[fid]
        return self.entries[(rule.hoa, rule.bid)]

    def default_entry(self, hoa):
        cands = [e for (h, _), e in self.entries.items() if h == hoa]
        if not cands:
            return None
        return min(cands, key=lambda e: (e.binding_priority, e.bid))

    def match_rule(self, pkt: RoutedPacket):
        best = None
        for fid, r in self.rules.items():
            if r.selector.matches(pkt):
                k = (r.fb_priority, self._order[fid])
                if best is None or k < best[0]:
                    best = (k, r)
        return None if best is None else best[1]

    def route_packet(self, pkt: RoutedPacket) -> tuple[str, int]:
        """Return (egress interface, bytes on the access link)."""
        rule = self.match_rule(pkt)
        if rule is not None:
            entry = self.entries[(rule.hoa, rule.bid)]
        else:
            entry = self.default_entry(pkt.dst)
            if entry is None:
                raise NoMatchingRule(f"no rule or default binding for {pkt.dst}")
        size = pkt.payload_bytes
        if entry.iface in NON_3GPP:
            size += self.tunnel.header_bytes
        return entry.iface, size

    # -- audit -------------------------------------------------------------
    def check_invariants(self) -> None:
        seen = set()
        for (hoa, bid), e in self.entries.items():
            assert (e.hoa, e.bid) == (hoa, bid), "entry key mismatch"
            assert (hoa, e.iface) not in seen, f"two entries for {hoa} on {e.iface}"
            seen.add((hoa, e.iface))
        for fid, r in self.rules.items():
            assert r.fid == fid, "rule key mismatch"
            assert (r.hoa, r.bid) in self.entries, f"flow {fid} targets missing BID{r.bid}"

    def snapshot(self) -> list[tuple]:
        rows = []
        for (hoa, bid), e in sorted(self.entries.items()):
            fids = sorted(f for f, r in self.rules.items() if r.hoa == hoa and r.bid == bid)
            rows.append((hoa, e.coa, bid, e.binding_priority, e.iface,
                         ";".join(str(f) for f in fids)))
        return rows

    def write_snapshot(self, fh, time: int | None = None) -> None:
        w = csv.writer(fh, lineterminator="\n")
        for row in self.snapshot():
            w.writerow(([time] if time is not None else []) + list(row))


def write_switch_log(fh, events) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time_us", "fid", "old_bid", "new_bid", "redundant"])
    for e in events:
        w.writerow([e.time, e.fid, e.old_bid, e.new_bid, int(e.redundant)])
