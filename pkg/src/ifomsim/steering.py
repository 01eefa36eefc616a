"""LTE/WLAN placement policies for FTP flows of dual-connected users.

Two adaptive policies are provided, a throughput-maximizing one
(:func:`decide_tmax`) and an energy-aware one (:func:`decide_ee`), plus the
static baselines.  Real-time flows and premium users stay on LTE under every
policy.  :func:`run_epoch` applies a policy to all steerable flows at an
epoch boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .traffic import FlowClass

POLICIES = ("none-all-lte", "none-dual-static", "tmax", "ee")


class Target(enum.Enum):
    LTE = "lte"
    WLAN = "wlan"


class Reason(enum.Enum):
    VIDEO_PIN = "VIDEO_PIN"
    PREMIUM_PIN = "PREMIUM_PIN"
    DIST_FAIL = "DIST_FAIL"
    THPT_FAIL = "THPT_FAIL"
    WLAN_OVERLOAD = "WLAN_OVERLOAD"
    WLAN_OK = "WLAN_OK"
    BETTER_NET = "BETTER_NET"
    STATIC = "STATIC"


class LoadRegime(enum.Enum):
    LIGHT = "light"
    MEDIUM = "medium"
    HEAVY = "heavy"


@dataclass(frozen=True)
class SteeringInputs:
    distance_to_nearest_ap: float
    ftp_throughput: float  # bits/s achieved (or projected) via WLAN
    max_ftp_throughput: float
    wlan_utilization: float
    lte_offered_rate: float
    premium: bool = False

    @property
    def ratio(self) -> float:
        if self.max_ftp_throughput <= 0:
            return 0.0
        return min(1.0, max(0.0, self.ftp_throughput / self.max_ftp_throughput))


@dataclass(frozen=True)
class Thresholds:
    wlan_range_m: float = 60.0
    tmax_ratio: float = 0.70
    ee_ratio: float = 0.50
    ee_overload: float = 0.80


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class PlacementDecision:
    fid: int
    target: Target
    reason: Reason


def _pinned(inp: SteeringInputs, flow) -> PlacementDecision | None:
    if flow.cls.realtime:
        return PlacementDecision(flow.fid, Target.LTE, Reason.VIDEO_PIN)
    if inp.premium:
        return PlacementDecision(flow.fid, Target.LTE, Reason.PREMIUM_PIN)
    return None


def decide_tmax(inp: SteeringInputs, flow, th: Thresholds = DEFAULT_THRESHOLDS) -> PlacementDecision:
    pin = _pinned(inp, flow)
    if pin:
        return pin
    if inp.distance_to_nearest_ap > th.wlan_range_m:
        return PlacementDecision(flow.fid, Target.LTE, Reason.DIST_FAIL)
    if inp.ratio > th.tmax_ratio:
        return PlacementDecision(flow.fid, Target.WLAN, Reason.WLAN_OK)
    return PlacementDecision(flow.fid, Target.LTE, Reason.THPT_FAIL)


def decide_ee(inp: SteeringInputs, flow, load_regime: LoadRegime,
              th: Thresholds = DEFAULT_THRESHOLDS) -> PlacementDecision:
    pin = _pinned(inp, flow)
    if pin:
        return pin
    # an overloaded AP sends FTP to LTE whatever the load regime
    if inp.wlan_utilization > th.ee_overload:
        return PlacementDecision(flow.fid, Target.LTE, Reason.WLAN_OVERLOAD)
    if inp.distance_to_nearest_ap > th.wlan_range_m:
        return PlacementDecision(flow.fid, Target.LTE, Reason.DIST_FAIL)
    if LoadRegime(load_regime) is LoadRegime.LIGHT:
        return PlacementDecision(flow.fid, Target.WLAN, Reason.WLAN_OK)
    if inp.ratio > th.ee_ratio:
        return PlacementDecision(flow.fid, Target.WLAN, Reason.WLAN_OK)
    if inp.lte_offered_rate > inp.ftp_throughput:
        return PlacementDecision(flow.fid, Target.LTE, Reason.BETTER_NET)
    return PlacementDecision(flow.fid, Target.WLAN, Reason.BETTER_NET)


def decide_static(inp: SteeringInputs, flow, policy: str,
                  th: Thresholds = DEFAULT_THRESHOLDS) -> PlacementDecision:
    pin = _pinned(inp, flow)
    if pin:
        return pin
    if policy == "none-dual-static" and inp.distance_to_nearest_ap <= th.wlan_range_m:
        return PlacementDecision(flow.fid, Target.WLAN, Reason.STATIC)
    return PlacementDecision(flow.fid, Target.LTE, Reason.STATIC)


def load_regime(n_ieus: int, mean_prb_util: float, *, light_ieus: int = 36,
                light_util: float = 0.4, heavy_ieus: int = 81) -> LoadRegime:
    if n_ieus <= light_ieus or mean_prb_util < light_util:
        return LoadRegime.LIGHT
    if n_ieus >= heavy_ieus:
        return LoadRegime.HEAVY
    return LoadRegime.MEDIUM


def decide(policy: str, inp: SteeringInputs, flow, regime=LoadRegime.MEDIUM,
           th: Thresholds = DEFAULT_THRESHOLDS) -> PlacementDecision:
    if policy == "tmax":
        return decide_tmax(inp, flow, th)
    if policy == "ee":
        return decide_ee(inp, flow, regime, th)
    if policy in ("none-all-lte", "none-dual-static"):
        return decide_static(inp, flow, policy, th)
    raise ValueError(f"unknown policy {policy!r}")


@dataclass
class EpochEntry:
    """One steerable flow as seen at an epoch boundary."""
    flow: object
    inputs: SteeringInputs
    current: Target
    eligible: bool = True


class Planner:
    """Hook letting decisions inside one epoch see each other's effect.

    The base planner is a no-op; the engine's planner updates per-AP
    utilization and LTE headroom as flows are moved.
    """

    def refresh(self, entry: EpochEntry) -> SteeringInputs:
        return entry.inputs

    def commit(self, entry: EpochEntry, target: Target) -> None:
        pass


def run_epoch(policy: str, entries, now: int, cache=None, *, regime=LoadRegime.MEDIUM,
              thresholds: Thresholds = DEFAULT_THRESHOLDS, bids=None, enact=None,
              planner: Planner | None = None, log: list | None = None):
    """Evaluate ``policy`` for every entry and switch the flows that move.

    ``enact(entry, decision)`` performs a switch and returns the resulting
    SwitchEvent, or None if the target refused the flow.  By default the
    switch is applied to ``cache`` immediately using ``bids[(fid, target)]``.
    Entries marked ineligible (recently switched) keep their binding.
    """
    planner = planner or Planner()
    if enact is None:
        def enact(entry, d):
            return cache.switch_flow(entry.flow.fid, bids[(entry.flow.fid, d.target)], at=now)
    events = []
    for entry in entries:
        if not entry.eligible:
            continue
        inp = planner.refresh(entry)
        d = decide(policy, inp, entry.flow, regime, thresholds)
        moved = False
        if d.target is not entry.current:
            ev = enact(entry, d)
            if ev is not None:
                events.append(ev)
                moved = True
                planner.commit(entry, d.target)
        if log is not None:
            log.append((now, entry.flow.fid, replace(inp), d, moved))
    return events


def is_steerable(flow) -> bool:
    return flow.cls is FlowClass.FTP
