"""Workbench configuration: flat `section.key = value` lines, `#` comments.

Parsing is total: every malformed line, unknown key, type mismatch or
constraint violation surfaces as a ConfigFileError carrying the 1-based line
number.  Missing keys fall back to the module defaults (the laser section
defaults to the dye-system constant block).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .csvio import format_float
from .errors import ConfigFileError, ConfigurationError
from .laser import LaserConfig, derive_params


@dataclass(frozen=True)
class TunnelSettings:
    """Inputs of the `tunnel` subcommand; defaults are the worked dye-electron
    case (hydrogenic 1->2 barrier, 0.75 eV electrons, 0.5 nm width)."""

    barrier_height_ev: float = 10.2
    particle_energy_ev: float = 0.75
    width_m: float = 0.5e-9
    mass_kg: float = 9.1e-31


@dataclass(frozen=True)
class OptimizeSettings:
    gap: float = 1.0
    drive_energy: float = 1.0
    safety: float = 10.0
    ramp_steps: int = 0          # 0 = derive from tau
    n_seeds: int = 32            # hill-climb seeds for ising mining
    size: int = 1000             # random-table size for `optimize run`
    table: tuple[float, ...] = ()  # explicit energy table; overrides size
    energy_scale_ev: float = 1.0
    length_scale_m: float = 0.5e-9
    sizes: tuple[int, ...] = (3000, 5000, 10000, 20000, 30000, 40000,
                              50000, 60000, 70000, 80000, 90000, 100000)
    trials: int = 5


@dataclass(frozen=True)
class DmftSettings:
    t: float = 1.0
    u: float = 1.0
    beta: float = 16.0
    mu: Optional[float] = None   # None = half filling (U/2)
    n_freq: int = 512
    alpha: float = 1e-6
    max_iter: int = 100
    mixing: float = 0.7


@dataclass(frozen=True)
class RunConfig:
    laser: LaserConfig = LaserConfig()
    tunnel: TunnelSettings = TunnelSettings()
    optimize: OptimizeSettings = OptimizeSettings()
    dmft: DmftSettings = DmftSettings()
    output_dir: str = "out"
    seed: int = 42
    format_version: int = 1


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


def _open_unit(x):
    return 0 < x < 1


def _half_open_unit(x):
    return 0 < x <= 1


# (kind, constraint, constraint description); kind in
# {"float", "int", "str", "float_list", "int_list", "opt_float"}
_SCHEMA = {
    "laser": {
        "c": ("float", _positive, "> 0"),
        "lambda_pump": ("float", _positive, "> 0"),
        "lambda_laser": ("float", _positive, "> 0"),
        "r1": ("float", _open_unit, "in (0, 1)"),
        "r2": ("float", _half_open_unit, "in (0, 1]"),
        "beam_area": ("float", _positive, "> 0"),
        "cavity_len": ("float", _positive, "> 0"),
        "gain_len": ("float", _positive, "> 0"),
        "sigma_se": ("float", _positive, "> 0"),
        "dt": ("float", _positive, "> 0"),
        "eta1": ("float", _positive, "> 0"),
        "h": ("float", _positive, "> 0"),
        "e_in": ("float", _positive, "> 0"),
        "pump_vol": ("float", _positive, "> 0"),
        "phi0": ("float", _non_negative, ">= 0"),
        "steps": ("int", _non_negative, ">= 0"),
        "inversion_factor": ("float", _positive, "> 0"),
    },
    "tunnel": {
        "barrier_height_ev": ("float", _positive, "> 0"),
        "particle_energy_ev": ("float", _non_negative, ">= 0"),
        "width_m": ("float", _non_negative, ">= 0"),
        "mass_kg": ("float", _positive, "> 0"),
    },
    "optimize": {
        "gap": ("float", _positive, "> 0"),
        "drive_energy": ("float", _positive, "> 0"),
        "safety": ("float", lambda x: x >= 1, ">= 1"),
        "ramp_steps": ("int", _non_negative, ">= 0"),
        "n_seeds": ("int", _positive, "> 0"),
        "size": ("int", _positive, "> 0"),
        "table": ("float_list", None, None),
        "energy_scale_ev": ("float", _positive, "> 0"),
        "length_scale_m": ("float", _positive, "> 0"),
        "sizes": ("int_list", _positive, "> 0"),
        "trials": ("int", _positive, "> 0"),
    },
    "dmft": {
        "t": ("float", _positive, "> 0"),
        "u": ("float", _non_negative, ">= 0"),
        "beta": ("float", _positive, "> 0"),
        "mu": ("opt_float", None, None),
        "n_freq": ("int", _positive, "> 0"),
        "alpha": ("float", _positive, "> 0"),
        "max_iter": ("int", _positive, "> 0"),
        "mixing": ("float", _half_open_unit, "in (0, 1]"),
    },
    "": {
        "output_dir": ("str", None, None),
        "seed": ("int", None, None),
        "format_version": ("int", lambda x: x == 1, "= 1"),
    },
}

_SECTION_TYPES = {
    "laser": LaserConfig,
    "tunnel": TunnelSettings,
    "optimize": OptimizeSettings,
    "dmft": DmftSettings,
}


def _parse_scalar(raw: str, kind: str, lineno: int):
    try:
        if kind in ("float", "opt_float"):
            return float(raw)
        if kind == "int":
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        if kind == "float_list":
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if kind == "int_list":
            out = []
            for part in raw.split(","):
                if not part.strip():
                    continue
                as_float = float(part)
                if as_float != int(as_float):
                    raise ValueError
                out.append(int(as_float))
            return tuple(out)
        return raw
    except ValueError:
        raise ConfigFileError(lineno, f"cannot parse {raw!r} as {kind}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config file body."""
    values: dict[tuple[str, str], object] = {}
    lines: dict[tuple[str, str], int] = {}
    last_line: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(lineno, f"expected 'key = value', got {line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if "." in key:
            section, _, name = key.partition(".")
        else:
            section, name = "", key
        spec = _SCHEMA.get(section, {}).get(name)
        if spec is None:
            raise ConfigFileError(lineno, f"unknown key {key!r}")
        if (section, name) in values:
            raise ConfigFileError(
                lineno, f"duplicate key {key!r} (first set on line {lines[(section, name)]})")
        kind, check, describe = spec
        value = _parse_scalar(raw_value, kind, lineno)
        if check is not None:
            items = value if isinstance(value, tuple) else (value,)
            for item in items:
                if not check(item):
                    raise ConfigFileError(
                        lineno, f"{key} must be {describe}, got {raw_value}")
        values[(section, name)] = value
        lines[(section, name)] = lineno
        last_line[section] = lineno

    sections = {}
    for section, cls in _SECTION_TYPES.items():
        kwargs = {name: v for (sec, name), v in values.items() if sec == section}
        try:
            sections[section] = cls(**kwargs)
        except ConfigurationError as exc:
            raise ConfigFileError(last_line.get(section, 0),
                                  f"[{section}] {exc}") from None
    top = {name: v for (sec, name), v in values.items() if sec == ""}
    cfg = RunConfig(laser=sections["laser"], tunnel=sections["tunnel"],
                    optimize=sections["optimize"], dmft=sections["dmft"], **top)
    try:
        derive_params(cfg.laser)  # cross-field checks: cavity loss, Euler guard
    except ConfigurationError as exc:
        raise ConfigFileError(last_line.get("laser", 0), f"[laser] {exc}") from None
    return cfg


def _format_value(value, kind: str) -> str:
    if kind in ("float", "opt_float"):
        return format_float(value)
    if kind == "float_list":
        return ",".join(format_float(v) for v in value)
    if kind == "int_list":
        return ",".join(str(v) for v in value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) reproduces cfg exactly."""
    out = []
    for section, names in _SCHEMA.items():
        holder = cfg if section == "" else getattr(cfg, section)
        for name, (kind, _, _) in names.items():
            value = getattr(holder, name)
            if value is None:
                continue
            prefix = f"{section}." if section else ""
            out.append(f"{prefix}{name} = {_format_value(value, kind)}")
    return "\n".join(out) + "\n"


def load_config(path: Optional[str]) -> RunConfig:
    """Read a config file; None or a missing value means all defaults."""
    if path is None:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
