"""Radio energy models and per-flow attribution."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class LteEnergyParams:
    p_idle: float = 90.0
    p_tx: float = 40.0
    alpha: float = 4.27
    p_rx: float = 1.0

    def __post_init__(self):
        if min(self.p_idle, self.p_tx, self.alpha, self.p_rx) <= 0:
            raise DomainError("LTE energy parameters must be positive")


@dataclass(frozen=True)
class WlanEnergyParams:
    i_tx: float = 0.380  # A
    i_rx: float = 0.313
    i_sleep: float = 0.033
    i_idle: float = 0.273
    supply_voltage: float = 3.0

    def __post_init__(self):
        if not self.i_tx > self.i_rx > self.i_idle > self.i_sleep > 0:
            raise DomainError("WLAN currents must satisfy tx > rx > idle > sleep > 0")
        if self.supply_voltage <= 0:
            raise DomainError("supply voltage must be positive")

    def power(self, state: str) -> float:
        return self.supply_voltage * getattr(self, f"i_{state}")


def lte_energy(params: LteEnergyParams, t_idle: float, t_tx: float, t_rx: float) -> float:
    """Linear LTE model: idle + (P_idle + alpha P_tx) t_tx + (P_idle + P_rx) t_rx."""
    if min(t_idle, t_tx, t_rx) < 0:
        raise DomainError(f"negative state time ({t_idle}, {t_tx}, {t_rx})")
    e_idle = params.p_idle * t_idle
    e_tx = (params.p_idle + params.alpha * params.p_tx) * t_tx
    e_rx = (params.p_idle + params.p_rx) * t_rx
    return e_idle + e_tx + e_rx


WLAN_STATES = ("tx", "rx", "idle", "sleep")


def wlan_energy(params: WlanEnergyParams, state_durations: dict) -> float:
    total = 0.0
    for state, t in state_durations.items():
        if state not in WLAN_STATES:
            raise DomainError(f"unknown WLAN radio state {state!r}")
        if t < 0:
            raise DomainError(f"negative duration for {state}")
        total += params.power(state) * t
    return total


def energy_gain(e1: float, e2: float) -> float:
    """Relative saving of cost ``e1`` against reference cost ``e2``."""
    if not e2 > 0:
        raise DomainError(f"reference energy must be positive, got {e2}")
    return (e2 - e1) / e2


@dataclass
class InterfaceAccount:
    """State times (s) and joules of one transmitter or one node radio."""
    t_idle: float = 0.0
    t_tx: float = 0.0
    t_rx: float = 0.0
    t_sleep: float = 0.0
    active_j: float = 0.0
    idle_j: float = 0.0


@dataclass
class EnergyLedger:
    interfaces: dict = field(default_factory=dict)  # (owner, iface) -> InterfaceAccount
    flows: dict = field(default_factory=dict)  # fid -> {"active": J, "idle": J}

    def account(self, owner, iface) -> InterfaceAccount:
        key = (owner, iface)
        if key not in self.interfaces:
            self.interfaces[key] = InterfaceAccount()
        return self.interfaces[key]

    def charge(self, fid, active: float = 0.0, idle: float = 0.0) -> None:
        rec = self.flows.setdefault(fid, {"active": 0.0, "idle": 0.0})
        rec["active"] += active
        rec["idle"] += idle

    def flow_total(self, fid, with_idle: bool = True) -> float:
        rec = self.flows.get(fid)
        if rec is None:
            return 0.0
        return rec["active"] + (rec["idle"] if with_idle else 0.0)


def attribute_flow_energy(active_j: float, idle_j: float, usage: dict,
                          admitted=None) -> dict:
    """Split one interface's joules over an interval among its flows.

    Active joules follow each flow's share of consumed airtime / PRB-time in
    ``usage``; idle joules are divided equally among ``admitted`` flows
    (defaults to the keys of ``usage``).
    """
    admitted = list(usage) if admitted is None else list(admitted)
    out = {f: 0.0 for f in set(admitted) | set(usage)}
    total_use = sum(usage.values())
    if total_use > 0:
        for f, u in usage.items():
            out[f] += active_j * u / total_use
    if admitted:
        share = idle_j / len(admitted)
        for f in admitted:
            out[f] += share
    return out
