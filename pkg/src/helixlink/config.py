"""Scenario configuration: INI-style sections with strict keys and defaults.

Example::

    [profile]
    kind = sprint
    speed_mph = 180

    [controller]
    mode = tuned
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field, fields, replace

from .antenna import (HelixGeometry, REFERENCE_CONDUCTOR_WIDTH_M, REFERENCE_PITCH_ANGLE_DEG,
                      REFERENCE_TURNS)
from .channel import ENV_ALIASES, environment
from .constants import CARRIERS_HZ, F0_HZ, MPH_TO_MPS, SPEED_OF_LIGHT
from .control import ControlMode, ControllerConfig
from .errors import ConfigSyntaxError, ConfigurationError, InvalidValueError, UnknownKeyError
from .flight import (RECEIVER_HEIGHT_M, RECEIVER_OFFSET_M, FlightProfile, ProfileKind)
from .link import RfConfig

OUTPUT_FORMATS = ("csv", "records")


@dataclass(frozen=True)
class ProfileSection:
    kind: str = "sprint"
    speed_mph: float = 180.0
    acceleration_mps2: float = 20.0
    cruise_s: float = 4.0
    turn_radius_m: float = 200.0
    straight_m: float = 300.0
    laps: float = 1.0
    altitude_m: float = 30.0
    altitude_low_m: float = 10.0
    altitude_high_m: float = 100.0
    sweep_period_s: float = 20.0
    duration_s: float = 30.0
    heading_deg: float = 0.0


@dataclass(frozen=True)
class EnvironmentSection:
    kind: str = "open_field"


@dataclass(frozen=True)
class RfSection:
    carrier_hz: float = F0_HZ
    tx_power_dbm: float = 20.0
    noise_floor_dbm: float = -105.0
    rx_gain_dbi: float = 2.0
    packet_rate_hz: float = 250.0


@dataclass(frozen=True)
class ControllerSection:
    mode: str = "tuned"
    tick_rate_hz: float = 100.0
    prediction_horizon_s: str = "auto"


@dataclass(frozen=True)
class AntennaSection:
    turns: int = REFERENCE_TURNS
    pitch_angle_deg: float = REFERENCE_PITCH_ANGLE_DEG
    conductor_width_mm: float = REFERENCE_CONDUCTOR_WIDTH_M * 1e3


@dataclass(frozen=True)
class ReceiverSection:
    offset_m: float = RECEIVER_OFFSET_M
    height_m: float = RECEIVER_HEIGHT_M


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    runs: int = 30
    rssi_window_s: float = 0.15


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    format: str = "csv"
    calibration_table: str = "calibration.csv"


SECTIONS = {
    "profile": ProfileSection,
    "environment": EnvironmentSection,
    "rf": RfSection,
    "controller": ControllerSection,
    "antenna": AntennaSection,
    "receiver": ReceiverSection,
    "run": RunSection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class ScenarioConfig:
    profile: ProfileSection = field(default_factory=ProfileSection)
    environment: EnvironmentSection = field(default_factory=EnvironmentSection)
    rf: RfSection = field(default_factory=RfSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    antenna: AntennaSection = field(default_factory=AntennaSection)
    receiver: ReceiverSection = field(default_factory=ReceiverSection)
    run: RunSection = field(default_factory=RunSection)
    output: OutputSection = field(default_factory=OutputSection)

    # derived views used by the engine

    @property
    def carrier_hz(self):
        return self.rf.carrier_hz

    @property
    def wavelength_m(self):
        return SPEED_OF_LIGHT / self.rf.carrier_hz

    @property
    def mode(self):
        return ControlMode(self.controller.mode)

    def flight_profile(self):
        p = self.profile
        return FlightProfile(
            ProfileKind(p.kind), p.speed_mph * MPH_TO_MPS,
            acceleration_mps2=p.acceleration_mps2, cruise_s=p.cruise_s,
            turn_radius_m=p.turn_radius_m, straight_m=p.straight_m, laps=p.laps,
            altitude_m=p.altitude_m, altitude_band_m=(p.altitude_low_m, p.altitude_high_m),
            sweep_period_s=p.sweep_period_s, sweep_duration_s=p.duration_s,
            heading_rad=math.radians(p.heading_deg))

    def channel_environment(self):
        return environment(self.environment.kind)

    def rf_config(self):
        r = self.rf
        return RfConfig(carrier_hz=r.carrier_hz, tx_power_dbm=r.tx_power_dbm,
                        noise_floor_dbm=r.noise_floor_dbm, rx_gain_dbi=r.rx_gain_dbi,
                        packet_rate_hz=r.packet_rate_hz).with_fit()

    def controller_config(self):
        h = self.controller.prediction_horizon_s
        horizon = None if h == "auto" else float(h)
        return ControllerConfig(tick_rate_hz=self.controller.tick_rate_hz,
                                prediction_horizon_s=horizon, mode=self.mode)

    def geometry(self):
        """Reference helix at the configured carrier: circumference of one
        wavelength and the configured pitch angle."""
        lam = self.wavelength_m
        a = self.antenna
        return HelixGeometry(diameter_m=lam / math.pi,
                             pitch_spacing_m=lam * math.tan(math.radians(a.pitch_angle_deg)),
                             turns=a.turns, conductor_width_m=a.conductor_width_mm * 1e-3)

    def with_overrides(self, **sections):
        """``cfg.with_overrides(run={'seed': 3}, controller={'mode': 'static'})``"""
        out = self
        for name, values in sections.items():
            sec = replace(getattr(out, name), **values)
            out = replace(out, **{name: sec})
        validate(out)
        return out


def _coerce(section, key, raw, ftype, line):
    raw = raw.strip()
    try:
        if ftype in ("int", int):
            if not re.fullmatch(r"[+-]?\d+", raw):
                raise ValueError
            return int(raw)
        if ftype in ("float", float):
            return float(raw)
    except ValueError:
        raise InvalidValueError(f"{section}.{key}", raw, f"expected {ftype if isinstance(ftype, str) else ftype.__name__}", line) from None
    return raw


def _key_lines(text):
    """Map (section, key) to the 1-based line where it is defined."""
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = i
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), i)
    return lines


def parse_config(text):
    """Parse and validate scenario text; missing keys take their defaults."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigSyntaxError("key outside any [section]", e.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigSyntaxError(str(e).split(":", 1)[-1].strip(), getattr(e, "lineno", None)) from None
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigSyntaxError("malformed line", line) from None
    lines = _key_lines(text)

    built = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise UnknownKeyError(f"[{section}]", lines.get((section, None)))
        cls = SECTIONS[section]
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in types:
                raise UnknownKeyError(f"{section}.{key}", line)
            values[key] = _coerce(section, key, raw, types[key], line)
        built[section] = cls(**values)
    cfg = ScenarioConfig(**built)
    validate(cfg, lines)
    return cfg


def _check(cond, key, value, reason, lines):
    if not cond:
        sec, _, name = key.partition(".")
        raise InvalidValueError(key, value, reason, lines.get((sec, name)))


def validate(cfg, lines=None):
    lines = lines or {}
    p = cfg.profile
    _check(p.kind in {k.value for k in ProfileKind}, "profile.kind", p.kind,
           f"expected one of {[k.value for k in ProfileKind]}", lines)
    _check(p.speed_mph >= 0, "profile.speed_mph", p.speed_mph, "must be >= 0", lines)
    _check(cfg.environment.kind in ENV_ALIASES, "environment.kind", cfg.environment.kind,
           f"expected one of {sorted(ENV_ALIASES)}", lines)
    _check(cfg.rf.carrier_hz in CARRIERS_HZ, "rf.carrier_hz", cfg.rf.carrier_hz,
           f"expected one of {list(CARRIERS_HZ)}", lines)
    _check(cfg.rf.packet_rate_hz > 0, "rf.packet_rate_hz", cfg.rf.packet_rate_hz, "must be positive", lines)
    _check(cfg.controller.mode in {m.value for m in ControlMode}, "controller.mode", cfg.controller.mode,
           "expected 'static' or 'tuned'", lines)
    _check(cfg.controller.tick_rate_hz > 0, "controller.tick_rate_hz", cfg.controller.tick_rate_hz,
           "must be positive", lines)
    h = cfg.controller.prediction_horizon_s
    if h != "auto":
        try:
            ok = float(h) >= 0
        except ValueError:
            ok = False
        _check(ok, "controller.prediction_horizon_s", h, "expected 'auto' or a non-negative number", lines)
    a = cfg.antenna
    _check(a.turns >= 1, "antenna.turns", a.turns, "must be >= 1", lines)
    _check(12.0 <= a.pitch_angle_deg <= 14.0, "antenna.pitch_angle_deg", a.pitch_angle_deg,
           "axial-mode pitch angle must lie in [12, 14] deg", lines)
    _check(a.conductor_width_mm > 0, "antenna.conductor_width_mm", a.conductor_width_mm, "must be positive", lines)
    _check(cfg.receiver.offset_m > 0, "receiver.offset_m", cfg.receiver.offset_m, "must be positive", lines)
    _check(cfg.receiver.height_m >= 0, "receiver.height_m", cfg.receiver.height_m, "must be >= 0", lines)
    _check(0 <= cfg.run.seed < 2**64, "run.seed", cfg.run.seed, "must be an unsigned 64-bit integer", lines)
    _check(cfg.run.runs >= 1, "run.runs", cfg.run.runs, "must be >= 1", lines)
    _check(cfg.run.rssi_window_s >= 0, "run.rssi_window_s", cfg.run.rssi_window_s, "must be >= 0", lines)
    _check(cfg.output.format in OUTPUT_FORMATS, "output.format", cfg.output.format,
           f"expected one of {list(OUTPUT_FORMATS)}", lines)
    # building the derived objects surfaces the remaining range checks
    try:
        cfg.flight_profile()
        cfg.geometry()
    except ConfigurationError as e:
        raise InvalidValueError("profile", "", str(e)) from None
    return cfg


def format_config(cfg, sections=tuple(SECTIONS)):
    """Render a config back to parseable text with every key explicit."""
    out = []
    for name in sections:
        out.append(f"[{name}]")
        sec = getattr(cfg, name)
        for f in fields(sec):
            v = getattr(sec, f.name)
            out.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
        out.append("")
    return "\n".join(out)


def config_hash(cfg):
    """Digest of the simulation-relevant sections (output paths excluded)."""
    text = format_config(cfg, [s for s in SECTIONS if s != "output"])
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text)
