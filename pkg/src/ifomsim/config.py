"""Scenario configuration: INI-style sections, strict keys, resolved echo."""

from __future__ import annotations

import configparser
import dataclasses
import io
import re
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .steering import POLICIES

LOAD_PRESETS = {"light": 36, "medium": 54, "heavy": 81}


@dataclass
class RunSection:
    scenario: int = 2
    policy: str = "tmax"
    load: str = "medium"
    drop: str = "auto"  # auto | lte_only | lte_wlan | mixed
    seed: int = 1
    reps: int = 10
    duration_s: float = 30.0
    warmup_s: float = 2.0
    tail_s: float = 0.5
    backend: str = "auto"


@dataclass
class DeploymentSection:
    isd_m: float = 500.0
    hotspot_offset_m: float = 120.0
    wap_range_m: float = 60.0
    min_distance_m: float = 35.0
    placement_attempts: int = 1000
    premium_fraction: float = 0.1
    interferers: bool = True
    ieus_per_sector_s1: int = 2  # scenario 1: one LTE-only and one LTE-WLAN IeU per sector


@dataclass
class RadioSection:
    enb_tx_dbm: float = 46.0
    ue_tx_dbm: float = 23.0
    wap_tx_dbm: float = 23.0
    enb_height_m: float = 32.0
    ue_height_m: float = 1.5
    wap_height_m: float = 2.5
    antenna_peak_gain_db: float = 14.0
    enb_nf_db: float = 9.0
    ue_nf_db: float = 5.0
    wap_nf_db: float = 4.0
    extra_margin_db: float = 0.0
    lte_bandwidth_hz: float = 10e6
    wlan_bandwidth_hz: float = 20e6
    shadowing_std_db: float = 8.0
    eta: float = 0.75
    lte_se_cap: float = 4.8
    wlan_phy_cap_bps: float = 54e6


@dataclass
class LteSection:
    prbs: int = 50
    tti_ms: float = 1.0
    core_delay_ms: float = 1.0
    admission_threshold: float = 0.9
    admission_interference: str = "expected"  # expected | none | full
    hol_wait_ms: float = 5.0
    discard_ms: float = 500.0


@dataclass
class WlanSection:
    mac_efficiency: float = 0.55
    path_delay_ms: float = 3.0
    serve_interval_ms: float = 1.0
    beacon_ms: float = 100.0
    util_window_ms: float = 1000.0
    reject_utilization: float = 0.95
    backhaul_bps: float = 0.0


@dataclass
class IfomSection:
    header_bytes: int = 68
    header_override: bool = False
    bu_delay_ms: float = 20.0


@dataclass
class TrafficSection:
    ftp_rate_bps: int = 0  # 0 selects the scenario default
    ftp_pdb_ms: float = 300.0
    background_ftp_rate_bps: int = 512_000
    background_header_bytes: int = 0
    start_jitter_ms: float = 50.0


@dataclass
class EnergySection:
    p_idle_w: float = 90.0
    p_tx_w: float = 40.0
    alpha: float = 4.27
    p_rx_w: float = 1.0
    i_tx_a: float = 0.380
    i_rx_a: float = 0.313
    i_idle_a: float = 0.273
    i_sleep_a: float = 0.033
    supply_v: float = 3.0


@dataclass
class SteeringSection:
    epoch_ms: float = 1000.0
    hysteresis_epochs: int = 2
    wlan_range_m: float = 60.0
    tmax_ratio: float = 0.70
    ee_ratio: float = 0.50
    ee_overload: float = 0.80
    light_ieus: int = 36
    heavy_ieus: int = 81
    light_prb_util: float = 0.4
    reference: str = "configured"


@dataclass
class TraceSection:
    packets: bool = False
    bindings: bool = False
    allocations: bool = False
    links: bool = False
    max_packets: int = 2_000_000


SECTIONS = {
    "run": RunSection,
    "deployment": DeploymentSection,
    "radio": RadioSection,
    "lte": LteSection,
    "wlan": WlanSection,
    "ifom": IfomSection,
    "traffic": TrafficSection,
    "energy": EnergySection,
    "steering": SteeringSection,
    "trace": TraceSection,
}

_CHOICES = {
    ("run", "policy"): POLICIES,
    ("run", "drop"): ("auto", "lte_only", "lte_wlan", "mixed"),
    ("run", "backend"): ("auto", "python", "cython"),
    ("lte", "admission_interference"): ("expected", "none", "full"),
    ("steering", "reference"): ("configured",),
}


@dataclass
class ScenarioConfig:
    run: RunSection = field(default_factory=RunSection)
    deployment: DeploymentSection = field(default_factory=DeploymentSection)
    radio: RadioSection = field(default_factory=RadioSection)
    lte: LteSection = field(default_factory=LteSection)
    wlan: WlanSection = field(default_factory=WlanSection)
    ifom: IfomSection = field(default_factory=IfomSection)
    traffic: TrafficSection = field(default_factory=TrafficSection)
    energy: EnergySection = field(default_factory=EnergySection)
    steering: SteeringSection = field(default_factory=SteeringSection)
    trace: TraceSection = field(default_factory=TraceSection)

    @property
    def n_ieus(self) -> int:
        return resolve_load(self.run.load)

    @property
    def ftp_rate(self) -> int:
        if self.traffic.ftp_rate_bps:
            return self.traffic.ftp_rate_bps
        return 256_000 if self.run.scenario == 1 else 512_000

    def replace(self, **overrides) -> "ScenarioConfig":
        """Copy with ``section__key=value`` overrides applied and validated."""
        cfg = dataclasses.replace(self, **{
            name: dataclasses.replace(getattr(self, name)) for name in SECTIONS})
        for dotted, value in overrides.items():
            sec, key = dotted.split("__", 1)
            _set(cfg, sec, key, value, None)
        validate(cfg)
        return cfg


def resolve_load(load) -> int:
    s = str(load).strip().lower()
    if s in LOAD_PRESETS:
        return LOAD_PRESETS[s]
    try:
        n = int(s)
    except ValueError:
        raise ConfigError(f"load must be light, medium, heavy or a count, got {load!r}",
                          key="load") from None
    if n < 0:
        raise ConfigError(f"load must be nonnegative, got {n}", key="load")
    return n


def _convert(typ, raw: str, key, line):
    name = typ if isinstance(typ, str) else typ.__name__
    raw = raw.strip()
    try:
        if name == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if name == "int":
            try:
                return int(raw)
            except ValueError:
                x = float(raw)  # accepts 512e3
                if not x.is_integer():
                    raise
                return int(x)
        if name == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {key}", key=key, line=line) from None


def _set(cfg, sec, key, value, line):
    if sec not in SECTIONS:
        raise ConfigError(f"unknown section [{sec}]", key=sec, line=line)
    obj = getattr(cfg, sec)
    ftypes = {f.name: f.type for f in fields(obj)}
    if key not in ftypes:
        raise ConfigError(f"unknown key {key!r} in [{sec}]", key=key, line=line)
    if isinstance(value, str):
        value = _convert(ftypes[key], value, key, line)
    setattr(obj, key, value)


def _line_of(text: str, sec: str, key: str):
    cur = None
    for no, ln in enumerate(text.splitlines(), 1):
        s = ln.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            cur = m.group(1).strip().lower()
            continue
        if cur == sec and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
            return no
    return None


def _section_line(text: str, sec: str):
    for no, ln in enumerate(text.splitlines(), 1):
        if ln.strip().lower() == f"[{sec}]":
            return no
    return None


def validate(cfg: ScenarioConfig) -> None:
    for (sec, key), allowed in _CHOICES.items():
        val = getattr(getattr(cfg, sec), key)
        if val not in allowed:
            raise ConfigError(f"{key} must be one of {', '.join(allowed)}; got {val!r}", key=key)
    resolve_load(cfg.run.load)
    r = cfg.run
    if r.scenario not in (1, 2):
        raise ConfigError(f"scenario must be 1 or 2, got {r.scenario}", key="scenario")
    if r.duration_s <= 0 or r.warmup_s < 0 or r.tail_s < 0:
        raise ConfigError("duration must be positive and warmup/tail nonnegative",
                          key="duration_s")
    if r.duration_s < r.warmup_s:
        raise ConfigError("duration must be at least the warmup", key="duration_s")
    if r.reps < 1:
        raise ConfigError("reps must be at least 1", key="reps")
    if cfg.deployment.isd_m <= 0:
        raise ConfigError("isd_m must be positive", key="isd_m")
    if not 0 <= cfg.deployment.premium_fraction <= 1:
        raise ConfigError("premium_fraction must be in [0, 1]", key="premium_fraction")
    if cfg.traffic.ftp_rate_bps not in (0, 256_000, 512_000, 1_024_000):
        raise ConfigError("ftp_rate_bps must be 256000, 512000 or 1024000",
                          key="ftp_rate_bps")
    if not cfg.ifom.header_override and cfg.ifom.header_bytes not in (24, 68):
        raise ConfigError("header_bytes must be 24 or 68 (set header_override to bypass)",
                          key="header_bytes")
    if cfg.lte.prbs < 1 or cfg.lte.tti_ms <= 0:
        raise ConfigError("prbs and tti_ms must be positive", key="prbs")
    if not 0 < cfg.wlan.mac_efficiency <= 1:
        raise ConfigError("mac_efficiency must be in (0, 1]", key="mac_efficiency")
    if cfg.wlan.beacon_ms <= 0 or cfg.wlan.util_window_ms < cfg.wlan.beacon_ms:
        raise ConfigError("beacon_ms must be positive and no longer than util_window_ms",
                          key="beacon_ms")
    if cfg.steering.epoch_ms <= 0:
        raise ConfigError("epoch_ms must be positive", key="epoch_ms")


def parse_config(source=None, overrides: dict | None = None) -> ScenarioConfig:
    """Build a resolved config from an INI file path, INI text, or nothing.

    ``overrides`` maps ``"section.key"`` to a value applied after the file.
    """
    text = ""
    if source is not None:
        if isinstance(source, str) and (not source.strip() or "\n" in source or "[" in source):
            text = source
        else:
            try:
                with open(source) as fh:
                    text = fh.read()
            except OSError as e:
                raise ConfigError(f"cannot read config {source}: {e}") from None
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r}", key=e.option, line=e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", key=e.section,
                          line=e.lineno) from None
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    cfg = ScenarioConfig()
    for sec in cp.sections():
        name = sec.strip().lower()
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", key=sec,
                              line=_section_line(text, name))
        for key, raw in cp.items(sec):
            _set(cfg, name, key, raw, _line_of(text, name, key))
    for dotted, value in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        _set(cfg, sec, key, value if isinstance(value, str) else str(value), None)
    validate(cfg)
    return cfg


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def echo(cfg: ScenarioConfig) -> str:
    """Resolved config as INI text; parsing it reproduces ``cfg``."""
    buf = io.StringIO()
    for name in SECTIONS:
        buf.write(f"[{name}]\n")
        obj = getattr(cfg, name)
        for f in fields(obj):
            buf.write(f"{f.name} = {_fmt(getattr(obj, f.name))}\n")
        buf.write("\n")
    return buf.getvalue()


def write_echo(path, cfg: ScenarioConfig) -> None:
    with open(path, "w") as fh:
        fh.write(echo(cfg))
