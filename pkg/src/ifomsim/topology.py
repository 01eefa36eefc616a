"""Urban-macro deployment geometry and user drops.

Seven hexagonal cells (a centre site and one ring of six), three sectors per
site, one WLAN hotspot per sector placed on the sector boresight.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field


from .errors import DomainError, PlacementError
from .rng import stream

N_CELLS = 7
SECTORS_PER_SITE = 3
BORESIGHTS_DEG = (30.0, 150.0, 270.0)


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite position ({self.x}, {self.y})")


def distance(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def azimuth_deg(origin: Position, p: Position) -> float:
    """Azimuth of ``p`` seen from ``origin``, degrees in (-180, 180]."""
    return math.degrees(math.atan2(p.y - origin.y, p.x - origin.x))


def wrap_angle(deg: float) -> float:
    """Wrap an angle to [-180, 180)."""
    return (deg + 180.0) % 360.0 - 180.0


class Category(enum.Enum):
    LTE_ONLY_IEU = "lte_only_ieu"
    LTE_WLAN_IEU = "lte_wlan_ieu"
    BACKGROUND = "background"

    @property
    def is_ieu(self) -> bool:
        return self is not Category.BACKGROUND


@dataclass(frozen=True)
class Cell:
    id: int
    site: Position


@dataclass(frozen=True)
class Sector:
    id: int
    cell: int
    boresight_deg: float


@dataclass(frozen=True)
class Hotspot:
    id: int
    sector: int
    center: Position
    radius: float


@dataclass(frozen=True)
class WapSite:
    id: int
    sector: int
    position: Position
    range_m: float


@dataclass(frozen=True)
class Deployment:
    isd: float
    cells: tuple
    sectors: tuple
    hotspots: tuple
    waps: tuple

    @property
    def enb_sites(self) -> tuple:
        return tuple(c.site for c in self.cells)

    def site_of(self, sector_id: int) -> Position:
        return self.cells[self.sectors[sector_id].cell].site

    def central_sectors(self) -> tuple:
        return tuple(s for s in self.sectors if s.cell == 0)

    def in_cell(self, cell_id: int, p: Position) -> bool:
        """True when ``p`` lies inside the hexagon around ``cell_id``'s site."""
        site = self.cells[cell_id].site
        dx, dy = p.x - site.x, p.y - site.y
        half = self.isd / 2.0
        for k in range(6):
            a = math.radians(60.0 * k)
            if dx * math.cos(a) + dy * math.sin(a) > half + 1e-9:
                return False
        return True

    def in_sector(self, sector_id: int, p: Position) -> bool:
        sec = self.sectors[sector_id]
        if not self.in_cell(sec.cell, p):
            return False
        site = self.cells[sec.cell].site
        if p == site:
            return False
        off = wrap_angle(azimuth_deg(site, p) - sec.boresight_deg)
        return -60.0 <= off < 60.0


def generate_deployment(isd: float = 500.0, seed: int = 0, *,
                        hotspot_offset: float = 120.0,
                        wap_range: float = 60.0) -> Deployment:
    """Build the 7-cell / 21-sector layout.

    The geometry is fully determined by ``isd``; ``seed`` is accepted so the
    call signature matches the other per-run builders.
    """
    if not isd > 0:
        raise DomainError(f"inter-site distance must be positive, got {isd}")
    sites = [Position(0.0, 0.0)]
    for k in range(6):
        a = math.radians(60.0 * k)
        sites.append(Position(isd * math.cos(a), isd * math.sin(a)))
    cells = tuple(Cell(i, s) for i, s in enumerate(sites))
    sectors, hotspots, waps = [], [], []
    for cell in cells:
        for j, bs in enumerate(BORESIGHTS_DEG):
            sid = cell.id * SECTORS_PER_SITE + j
            sectors.append(Sector(sid, cell.id, bs))
            a = math.radians(bs)
            center = Position(cell.site.x + hotspot_offset * math.cos(a),
                              cell.site.y + hotspot_offset * math.sin(a))
            hotspots.append(Hotspot(sid, sid, center, wap_range))
            waps.append(WapSite(sid, sid, center, wap_range))
    return Deployment(isd, cells, tuple(sectors), tuple(hotspots), tuple(waps))


@dataclass
class UserNode:
    id: int
    position: Position
    category: Category
    premium: bool
    home_sector: int
    interferer: bool = False
    svc: dict = field(default_factory=dict, repr=False, compare=False)


def _sample_in_sector(dep, sector_id, rng, min_dist, max_attempts):
    site = dep.site_of(sector_id)
    r_max = dep.isd / math.sqrt(3.0)
    for _ in range(max_attempts):
        r = r_max * math.sqrt(rng.random())
        th = 2.0 * math.pi * rng.random()
        p = Position(site.x + r * math.cos(th), site.y + r * math.sin(th))
        if dep.in_sector(sector_id, p) and distance(p, site) >= min_dist:
            return p
    raise PlacementError(f"could not place a user in sector {sector_id} "
                         f"after {max_attempts} attempts")


def _sample_in_hotspot(dep, sector_id, rng, min_dist, max_attempts):
    hs = dep.hotspots[sector_id]
    site = dep.site_of(sector_id)
    for _ in range(max_attempts):
        r = hs.radius * math.sqrt(rng.random())
        th = 2.0 * math.pi * rng.random()
        p = Position(hs.center.x + r * math.cos(th), hs.center.y + r * math.sin(th))
        if distance(p, site) >= min_dist:
            return p
    raise PlacementError(f"could not place a user in hotspot {sector_id} "
                         f"after {max_attempts} attempts")


_DROP_ORDER = (Category.LTE_ONLY_IEU, Category.LTE_WLAN_IEU, Category.BACKGROUND)


def drop_users(dep: Deployment, counts: dict, seed: int, *,
               premium_fraction: float = 0.0,
               min_distance: float = 35.0,
               max_attempts: int = 1000,
               interferers: bool = True) -> list[UserNode]:
    """Drop users into the central cell, plus one interferer per outer sector.

    ``counts`` maps :class:`Category` to the number of central-cell users.
    Users are dealt to the three central sectors in turn so each sector holds
    an equal share; LTE-WLAN IeUs fall uniformly inside their sector's hotspot
    disk, everyone else uniformly inside the sector.
    """
    counts = {Category(k) if not isinstance(k, Category) else k: int(v)
              for k, v in counts.items()}
    if any(v < 0 for v in counts.values()):
        raise DomainError(f"negative user count in {counts}")
    rng = stream(seed, "drops")
    central = [s.id for s in dep.central_sectors()]
    users: list[UserNode] = []
    turn = 0
    for cat in _DROP_ORDER:
        for _ in range(counts.get(cat, 0)):
            sid = central[turn % len(central)]
            turn += 1
            if cat is Category.LTE_WLAN_IEU:
                p = _sample_in_hotspot(dep, sid, rng, min_distance, max_attempts)
            else:
                p = _sample_in_sector(dep, sid, rng, min_distance, max_attempts)
            users.append(UserNode(len(users), p, cat, False, sid))
    if interferers:
        for sec in dep.sectors:
            if sec.cell == 0:
                continue
            p = _sample_in_sector(dep, sec.id, rng, min_distance, max_attempts)
            users.append(UserNode(len(users), p, Category.BACKGROUND, False,
                                  sec.id, interferer=True))
    ieus = [u for u in users if u.category.is_ieu]
    n_premium = int(round(premium_fraction * len(ieus)))
    if n_premium:
        prng = stream(seed, "premium")
        for i in sorted(prng.choice(len(ieus), size=n_premium, replace=False)):
            ieus[int(i)].premium = True
    return users


def nearest_wap(dep: Deployment, p: Position) -> tuple[int, float]:
    best, best_d = -1, math.inf
    for w in dep.waps:
        d = distance(p, w.position)
        if d < best_d:
            best, best_d = w.id, d
    return best, best_d


def write_deployment(path, dep: Deployment, users=()) -> None:
    """One comma-separated record per entity."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity", "id", "x", "y", "parent", "attr"])
        for c in dep.cells:
            w.writerow(["cell", c.id, f"{c.site.x:.6f}", f"{c.site.y:.6f}", "", ""])
        for s in dep.sectors:
            site = dep.site_of(s.id)
            w.writerow(["sector", s.id, f"{site.x:.6f}", f"{site.y:.6f}", s.cell,
                        f"{s.boresight_deg:g}"])
        for h in dep.hotspots:
            w.writerow(["hotspot", h.id, f"{h.center.x:.6f}", f"{h.center.y:.6f}",
                        h.sector, f"{h.radius:g}"])
        for a in dep.waps:
            w.writerow(["wap", a.id, f"{a.position.x:.6f}", f"{a.position.y:.6f}",
                        a.sector, f"{a.range_m:g}"])
        for u in users:
            attr = u.category.value + (";premium" if u.premium else "") + \
                (";interferer" if u.interferer else "")
            w.writerow(["user", u.id, f"{u.position.x:.6f}", f"{u.position.y:.6f}",
                        u.home_sector, attr])
