"""INI experiment files: spectrum, modulation, time grid and physical units.

Every dimensional input is given in physical units and converted with one
reference frequency ``[units] frequency`` (rad per time unit):
internal = physical / frequency**dim, where dim is +1 for frequencies,
-1 for times, and so on.  Numbers may be simple arithmetic such as
``2*pi*0.091``.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import modulation as mod_
from . import spectra

__all__ = [
    "ConfigError",
    "Units",
    "ExperimentConfig",
    "load_config",
    "list_presets",
    "preset_text",
    "parse_number",
    "SPECTRUM_PARAMS",
    "MODULATION_PARAMS",
]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}
_NAMES = {"pi": math.pi, "inf": math.inf, "e": math.e}


def parse_number(text: str) -> float:
    """Float from a literal or a small arithmetic expression (+ - * / **, pi, inf, e)."""

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ConfigError(f"not a number: {text!r} ({exc})") from None


# parameter name -> frequency dimension
SPECTRUM_PARAMS = {
    "band_edge": {"C": 0.5, "Gamma": 1, "cutoff": 1},
    "lorentzian": {"g": 2, "omega_0": 1, "w": 1},
    "flat": {"G_0": 1, "omega_cut": 1, "omega_low": 1},
    "lattice": {"g": 1, "omega_g": 1, "p": 0, "q": 0},
    "tabulated": {},
}
MODULATION_PARAMS = {
    "none": {},
    "constant": {"eps0": 0},
    "monochromatic": {"eps0": 0, "delta": 1},
    "pm": {"phi": 0, "tau": -1},
    "am": {"tau_on": -1, "period": -1},
    "quasiperiodic": {},
    "random_lorentzian": {"delta": 1, "nu": 1, "intensity": 0},
    "measurement": {"tau_on": -1},
}
_SPECTRUM_CLASSES = {
    "band_edge": spectra.BandEdge,
    "lorentzian": spectra.LorentzianPeak,
    "flat": spectra.FlatCutoff,
    "lattice": spectra.ParametricLatticePeak,
}
_MODULATION_CLASSES = {
    "constant": mod_.Constant,
    "monochromatic": mod_.Monochromatic,
    "pm": mod_.ImpulsivePM,
    "am": mod_.OnOffAM,
    "random_lorentzian": mod_.RandomLorentzian,
    "measurement": mod_.MeasurementSinc,
}


@dataclass(frozen=True)
class Units:
    """Reference frequency (rad per time unit) linking physical and internal values."""

    frequency: float = 1.0
    time_unit: str = ""

    def __post_init__(self):
        if not (self.frequency > 0 and math.isfinite(self.frequency)):
            raise ConfigError("[units] frequency must be positive")

    def to_internal(self, value, dim: float):
        return np.asarray(value, dtype=float) / self.frequency**dim if np.ndim(value) else value / self.frequency**dim

    def to_physical(self, value, dim: float):
        return np.asarray(value, dtype=float) * self.frequency**dim if np.ndim(value) else value * self.frequency**dim


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    spectrum: spectra.CouplingSpectrum
    modulation: object
    units: Units
    times: np.ndarray | None = None
    axis: str = "time"
    sections: dict = field(default_factory=dict)
    name: str = ""
    meta: dict = field(default_factory=dict)
    base: Path = Path(".")

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def number(self, section: str, key: str, dim: float = 0, default=None) -> float:
        raw = self.section(section).get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"[{section}] {key} is required")
            return default
        return float(self.units.to_internal(parse_number(raw), dim))

    def numbers(self, section: str, key: str, dim: float = 0) -> list[float]:
        raw = self.section(section).get(key)
        if raw is None:
            raise ConfigError(f"[{section}] {key} is required")
        parts = [p for p in raw.replace(";", ",").split(",") if p.strip()]
        return [float(self.units.to_internal(parse_number(p), dim)) for p in parts]

    def path(self, section: str, key: str) -> Path:
        raw = self.section(section).get(key)
        if raw is None:
            raise ConfigError(f"[{section}] {key} is required")
        p = Path(raw.strip())
        if not p.is_absolute():
            p = self.base / p
        if not p.exists():
            raise ConfigError(f"[{section}] {key}: file {p} does not exist")
        return p


def _read_params(sec: dict, table: dict, units: Units, where: str) -> dict:
    out = {}
    for key, raw in sec.items():
        if key in ("model", "scheme", "omega_a", "file"):
            continue
        if key not in table:
            raise ConfigError(f"[{where}] unknown parameter {key!r}; expected one of {sorted(table)}")
        out[key] = float(units.to_internal(parse_number(raw), table[key]))
    return out


def _build_spectrum(cfg: dict, units: Units, base: Path) -> spectra.CouplingSpectrum:
    sec = cfg.get("spectrum")
    if sec is None:
        raise ConfigError("missing [spectrum] section")
    model = sec.get("model", "").strip()
    if model not in SPECTRUM_PARAMS:
        raise ConfigError(f"[spectrum] model must be one of {sorted(SPECTRUM_PARAMS)}")
    if "omega_a" not in sec:
        raise ConfigError("[spectrum] omega_a is required")
    omega_a = units.to_internal(parse_number(sec["omega_a"]), 1)
    params = _read_params(sec, SPECTRUM_PARAMS[model], units, "spectrum")
    try:
        if model == "tabulated":
            path = _file(sec, base, "spectrum")
            tab = spectra.load_tabulated(path)
            m = spectra.Tabulated(units.to_internal(tab.omega, 1), units.to_internal(tab.values, 1))
        else:
            m = _SPECTRUM_CLASSES[model](**params)
        return spectra.CouplingSpectrum(m, float(omega_a))
    except (spectra.SpectrumError, TypeError) as exc:
        raise ConfigError(f"[spectrum] {exc}") from None


def _file(sec: dict, base: Path, where: str) -> Path:
    if "file" not in sec:
        raise ConfigError(f"[{where}] file is required")
    p = Path(sec["file"].strip())
    p = p if p.is_absolute() else base / p
    if not p.exists():
        raise ConfigError(f"[{where}] file {p} does not exist")
    return p


def _build_modulation(cfg: dict, units: Units, base: Path):
    sec = cfg.get("modulation", {"scheme": "constant"})
    scheme = sec.get("scheme", "").strip()
    if scheme not in MODULATION_PARAMS:
        raise ConfigError(f"[modulation] scheme must be one of {sorted(MODULATION_PARAMS)}")
    params = _read_params(sec, MODULATION_PARAMS[scheme], units, "modulation")
    try:
        if scheme == "none":
            return mod_.Quasiperiodic()
        if scheme == "quasiperiodic":
            q = mod_.load_harmonics(_file(sec, base, "modulation"))
            return mod_.Quasiperiodic(units.to_internal(q.omegas, 1), q.amps)
        return _MODULATION_CLASSES[scheme](**params)
    except (mod_.ModulationError, TypeError, ValueError) as exc:
        raise ConfigError(f"[modulation] {exc}") from None


def _build_times(cfg: dict, units: Units):
    sec = cfg.get("time")
    if sec is None:
        return None, "time"
    axis = sec.get("axis", "time").strip()
    if axis not in ("time", "coupling"):
        raise ConfigError("[time] axis must be 'time' or 'coupling'")
    if "values" in sec:
        vals = [parse_number(v) for v in sec["values"].replace(";", ",").split(",") if v.strip()]
    else:
        try:
            start, stop = parse_number(sec["start"]), parse_number(sec["stop"])
            count = int(sec.get("count", "11"))
        except KeyError as exc:
            raise ConfigError(f"[time] needs 'values' or start/stop/count (missing {exc})") from None
        vals = np.linspace(start, stop, count).tolist()
    t = np.asarray(units.to_internal(np.asarray(vals, dtype=float), -1), dtype=float)
    if t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ConfigError("[time] values must be nonnegative and strictly increasing")
    return t, axis


def _lattice_meta(cfg: dict) -> dict:
    sec = cfg.get("lattice")
    if not sec:
        return {}
    a = parse_number(sec["acceleration"])
    d = parse_number(sec["spacing"])
    omega_g = 2.0 * math.pi * parse_number(sec["frequency_hz"])
    T = omega_g * d / (math.pi * a)
    return {"lattice_T_s": T, "lattice_omega_g_T": omega_g * T}


def _parse(text: str, source: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str  # parameter names are case sensitive (C, Gamma, G_0)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return {s: dict(cp[s]) for s in cp.sections()}


def list_presets() -> dict[str, str]:
    """Preset names mapped to their one-line descriptions."""
    out = {}
    for entry in sorted((resources.files("decayctl") / "presets").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".ini"):
            first = entry.read_text().splitlines()[0] if entry.read_text() else ""
            out[entry.name[:-4]] = first.lstrip("#; ").strip()
    return out


def preset_text(name: str) -> str:
    res = resources.files("decayctl") / "presets" / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return res.read_text()


def load_config(path=None, preset: str | None = None) -> ExperimentConfig:
    """Read a preset, a file, or a preset overlaid by a file."""
    if path is None and preset is None:
        raise ConfigError("give --config or --preset")
    cfg: dict = {}
    base = Path(".")
    name = preset or ""
    if preset is not None:
        cfg = _parse(preset_text(preset), f"preset {preset}")
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        overlay = _parse(p.read_text(), str(p))
        for sec, vals in overlay.items():
            cfg.setdefault(sec, {}).update(vals)
        base = p.parent
        name = name or p.stem
    u = cfg.get("units", {})
    units = Units(parse_number(u.get("frequency", "1")), u.get("time_unit", "").strip())
    spectrum = _build_spectrum(cfg, units, base)
    modulation = _build_modulation(cfg, units, base)
    times, axis = _build_times(cfg, units)
    try:
        meta = _lattice_meta(cfg)
    except KeyError as exc:
        raise ConfigError(f"[lattice] missing {exc}") from None
    return ExperimentConfig(
        spectrum=spectrum,
        modulation=modulation,
        units=units,
        times=times,
        axis=axis,
        sections=cfg,
        name=name,
        meta=meta,
        base=base,
    )
