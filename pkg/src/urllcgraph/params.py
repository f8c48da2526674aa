"""System parameters, device/channel records and the key-value config format."""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol constants. Defaults reproduce the reference setup.

    ``transmit_snr_db`` is the only quantity kept in dB; the linear value is
    derived once and cached as ``transmit_snr``.
    """

    subcarrier_spacing: float = 15e3  # omega [Hz]
    slot_duration: float = 0.144e-3  # tau [s]
    channel_bandwidth: float = 180e3  # B [Hz]
    transmit_snr_db: float = 100.0  # Gamma_T [dB]
    pathloss_exp: float = 3.0  # alpha
    max_interf: float = 4.0  # Y_M
    packet_bits: int = 100  # ell [bit]
    cycle_slots: int = 70  # T [slot]
    delay_slots: int = 35  # Delta [slot]
    reliability: float = 0.99999  # rho
    pairing_limit: int = 15  # M_T [slot]
    area_radius: float = 50.0  # L [m]

    def __post_init__(self):
        if not self.channel_bandwidth * self.slot_duration > 0:
            raise ValueError("B * tau must be positive")
        if not 0.0 < self.reliability < 1.0:
            raise ValueError("reliability must lie in (0, 1)")
        if not 1 <= self.delay_slots <= self.cycle_slots:
            raise ValueError("need 1 <= delay_slots <= cycle_slots")
        if not 0 <= self.pairing_limit <= self.delay_slots:
            raise ValueError("need 0 <= pairing_limit <= delay_slots")
        if self.max_interf < 0:
            raise ValueError("max_interf must be non-negative")
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be >= 1")
        if self.area_radius <= 0:
            raise ValueError("area_radius must be positive")

    @property
    def q(self) -> float:
        """Symbols per RU, B * tau."""
        return self.channel_bandwidth * self.slot_duration

    @cached_property
    def transmit_snr(self) -> float:
        return 10.0 ** (self.transmit_snr_db / 10.0)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Device:
    id: int
    distance: float
    issue_time: int
    delay_bound: int

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError(f"device {self.id}: distance must be positive")
        if self.issue_time < 1:
            raise ValueError(f"device {self.id}: issue_time must be >= 1")


@dataclass(frozen=True)
class Channel:
    id: int
    interf_factor: float = field(default=1.0)

    def __post_init__(self):
        if self.interf_factor < 1.0:
            raise ValueError(f"channel {self.id}: interference factor below 1")


# Table symbols accepted as aliases in config files.
ALIASES = {
    "omega": "subcarrier_spacing",
    "tau": "slot_duration",
    "B": "channel_bandwidth",
    "Gamma_T_dB": "transmit_snr_db",
    "alpha": "pathloss_exp",
    "Y_M": "max_interf",
    "ell": "packet_bits",
    "T": "cycle_slots",
    "Delta": "delay_slots",
    "rho": "reliability",
    "M_T": "pairing_limit",
    "M_D": "pairing_limit",
    "L": "area_radius",
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemParams)}


def coerce(name: str, value) -> int | float:
    kind = _FIELD_TYPES[name]
    if kind in ("int", int):
        as_float = float(value)
        if not as_float.is_integer():
            raise ValueError(f"{name} must be an integer, got {value!r}")
        return int(as_float)
    return float(value)


def canonical_key(key: str) -> str:
    if key in _FIELD_TYPES:
        return key
    # configparser lower-cases keys; match aliases case-insensitively
    for alias, target in ALIASES.items():
        if alias.lower() == key.lower():
            return target
    raise ValueError(f"unknown parameter {key!r}")


def load_config(path: str | Path, **overrides) -> SystemParams:
    """Read a ``[system]`` section of ``key = value`` lines.

    Keys are either field names or the table symbols in ``ALIASES``.
    Overrides (already canonical names) win over file values; ``None``
    values are ignored so argparse namespaces can be passed straight in.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    values = {}
    if parser.has_section("system"):
        for key, raw in parser.items("system"):
            name = canonical_key(key)
            values[name] = coerce(name, raw)
    for name, raw in overrides.items():
        if raw is not None:
            values[name] = coerce(name, raw)
    return SystemParams(**values)


def dump_config(params: SystemParams) -> str:
    symbols = {v: k for k, v in ALIASES.items() if k != "M_D"}
    lines = ["[system]"]
    for f in dataclasses.fields(SystemParams):
        value = getattr(params, f.name)
        text = str(value) if isinstance(value, int) else f"{value:.9g}"
        lines.append(f"{f.name} = {text}  # {symbols[f.name]}")
    return "\n".join(lines) + "\n"


def params_from_overrides(**overrides) -> SystemParams:
    values = {k: coerce(k, v) for k, v in overrides.items() if v is not None}
    return SystemParams(**values)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)
