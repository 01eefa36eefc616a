"""Link budgets: path loss, shadowing, sector antenna gain, SINR and rate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import stream
from .topology import azimuth_deg, distance, nearest_wap, wrap_angle

THERMAL_DBM_HZ = -174.0
SHANNON_ETA = 0.75
LTE_SE_CAP = 4.8  # bits/s/Hz
WLAN_PHY_CAP = 54e6


class Tech(enum.Enum):
    LTE = "lte"
    WLAN = "wlan"


def db_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_db(mw: float) -> float:
    return 10.0 * math.log10(mw) if mw > 0 else -math.inf


def path_loss_lte(r_km: float) -> float:
    """Macro path loss in dB, ``r_km`` in kilometres."""
    if not r_km > 0:
        raise DomainError(f"distance must be positive, got {r_km} km")
    return 128.1 + 37.6 * math.log10(r_km)


def path_loss_wlan(r_km: float) -> float:
    if not r_km > 0:
        raise DomainError(f"distance must be positive, got {r_km} km")
    return 140.7 + 36.7 * math.log10(r_km)


def sector_antenna_gain(angle_off_boresight: float, peak_gain_db: float = 0.0,
                        theta_3db: float = 70.0, a_max: float = 25.0) -> float:
    """Horizontal sector pattern: peak gain minus min(12 (theta/theta3dB)^2, Am)."""
    theta = wrap_angle(angle_off_boresight) if abs(angle_off_boresight) > 180.0 \
        else angle_off_boresight
    return peak_gain_db - min(12.0 * (theta / theta_3db) ** 2, a_max)


def rate_from_sinr(sinr_db: float, bandwidth: float, tech: Tech, *,
                   eta: float = SHANNON_ETA, lte_se_cap: float = LTE_SE_CAP,
                   wlan_cap: float = WLAN_PHY_CAP) -> float:
    """Attenuated Shannon map capped at the technology peak, bits/s."""
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    tech = Tech(tech)
    if sinr_db == -math.inf:
        return 0.0
    cap = lte_se_cap * bandwidth if tech is Tech.LTE else wlan_cap
    # large sinr overflows 10**x; the cap binds long before that
    if sinr_db > 300.0:
        return cap
    lin = 10.0 ** (sinr_db / 10.0)
    return min(cap, eta * bandwidth * math.log2(1.0 + lin))


@dataclass(frozen=True)
class LinkBudget:
    tx_power: float  # dBm
    path_loss: float  # dB
    shadowing: float  # dB, positive means extra loss
    antenna_gain: float  # dB
    noise_figure: float  # dB
    bandwidth: float  # Hz
    interference: float = 0.0  # mW
    tech: Tech = Tech.LTE
    extra_margin: float = 0.0  # dB

    @property
    def rx_power_dbm(self) -> float:
        return (self.tx_power - self.path_loss - self.shadowing
                + self.antenna_gain - self.extra_margin)

    @property
    def rx_power_mw(self) -> float:
        return db_to_mw(self.rx_power_dbm)

    @property
    def noise_mw(self) -> float:
        return db_to_mw(THERMAL_DBM_HZ + 10.0 * math.log10(self.bandwidth)
                        + self.noise_figure)


@dataclass(frozen=True)
class SinrSample:
    sinr_db: float
    achievable_rate: float


def downlink_sinr(link: LinkBudget, **rate_kw) -> SinrSample:
    sinr = link.rx_power_mw / (link.noise_mw + link.interference)
    sinr_db = mw_to_db(sinr)
    return SinrSample(sinr_db, rate_from_sinr(sinr_db, link.bandwidth, link.tech, **rate_kw))


class ChannelModel:
    """Frozen per-run radio environment for a deployment and its users.

    Shadowing is drawn once per (site, user) and per (access point, user)
    pair; the three sectors of a site share the site's draw.
    """

    def __init__(self, dep, users, radio, seed: int):
        self.dep = dep
        self.users = list(users)
        self.radio = radio
        n_u = len(self.users)
        rng = stream(seed, "shadowing")
        sigma = radio.shadowing_std_db
        self.shadow_lte = rng.normal(0.0, sigma, size=(len(dep.cells), n_u))
        self.shadow_wlan = rng.normal(0.0, sigma, size=(len(dep.waps), n_u))
        self.rate_kw = dict(eta=radio.eta, lte_se_cap=radio.lte_se_cap,
                            wlan_cap=radio.wlan_phy_cap_bps)

        n_s = len(dep.sectors)
        self.sector_cell = np.array([s.cell for s in dep.sectors], dtype=np.int64)
        self.rx_mw = np.zeros((n_u, n_s))
        for u in self.users:
            for s in dep.sectors:
                self.rx_mw[u.id, s.id] = self.lte_link(u.id, s.id).rx_power_mw
        lb = self.lte_link(0, 0) if n_u else None
        self.lte_noise_mw = np.full(n_u, lb.noise_mw if lb else 0.0)

        self.wap_of = np.full(n_u, -1, dtype=np.int64)
        self.wap_dist = np.full(n_u, math.inf)
        self.wlan_phy = np.zeros(n_u)
        for u in self.users:
            ap, d = nearest_wap(dep, u.position)
            self.wap_of[u.id] = ap
            self.wap_dist[u.id] = d
            self.wlan_phy[u.id] = downlink_sinr(self.wlan_link(u.id, ap),
                                                **self.rate_kw).achievable_rate

    def lte_link(self, uid: int, sector_id: int, interference: float = 0.0) -> LinkBudget:
        u = self.users[uid]
        sec = self.dep.sectors[sector_id]
        site = self.dep.cells[sec.cell].site
        d_km = max(distance(u.position, site), 1.0) / 1000.0
        off = wrap_angle(azimuth_deg(site, u.position) - sec.boresight_deg)
        r = self.radio
        return LinkBudget(
            tx_power=r.enb_tx_dbm,
            path_loss=path_loss_lte(d_km),
            shadowing=float(self.shadow_lte[sec.cell, uid]),
            antenna_gain=sector_antenna_gain(off, r.antenna_peak_gain_db),
            noise_figure=r.ue_nf_db,
            bandwidth=r.lte_bandwidth_hz,
            interference=interference,
            tech=Tech.LTE,
            extra_margin=r.extra_margin_db,
        )

    def wlan_link(self, uid: int, ap_id: int) -> LinkBudget:
        u = self.users[uid]
        wap = self.dep.waps[ap_id]
        d_km = max(distance(u.position, wap.position), 1.0) / 1000.0
        r = self.radio
        return LinkBudget(
            tx_power=r.wap_tx_dbm,
            path_loss=path_loss_wlan(d_km),
            shadowing=float(self.shadow_wlan[ap_id, uid]),
            antenna_gain=0.0,
            noise_figure=r.ue_nf_db,
            bandwidth=r.wlan_bandwidth_hz,
            tech=Tech.WLAN,
            extra_margin=r.extra_margin_db,
        )

    def lte_interference(self, uid: int, serving: int, active=None) -> float:
        """Summed interference in mW from sectors of other sites.

        Sectors sharing the serving site belong to the same eNB, whose
        scheduler keeps them orthogonal, so they never interfere.  ``active``
        weights each sector by the fraction of PRBs it occupies (1 = fully
        loaded); ``None`` means every sector is fully loaded.
        """
        row = self.rx_mw[uid]
        cell = self.sector_cell[serving]
        total = 0.0
        for j in range(len(row)):
            if self.sector_cell[j] == cell:
                continue
            w = 1.0 if active is None else active[j]
            if w:
                total += row[j] * w
        return total

    def lte_sinr(self, uid: int, serving: int, active=None) -> SinrSample:
        link = self.lte_link(uid, serving, self.lte_interference(uid, serving, active))
        return downlink_sinr(link, **self.rate_kw)

    def lte_rate(self, uid: int, serving: int, active=None) -> float:
        return self.lte_sinr(uid, serving, active).achievable_rate
