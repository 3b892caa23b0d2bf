"""Run configuration: INI-style key-value files with nested sections.

A run is described by a [run] section (mode, output directory, formats),
one of [dicke] or [physical] for the model parameters, and optional [grid],
[modulation], [evolve] and [figure] sections consumed by the individual
modes.  Command line flags override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .params import DickeParams, ParameterError, PhysicalParams, map_to_dicke

MODES = ("steady-state", "evolve", "spectrum", "photon-flux", "g2", "g2-map",
         "modulate", "map-params", "reproduce-figure")
FORMATS = ("csv", "json", "both")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_DICKE_KEYS = ("omega", "omega0", "lam", "lam_prime", "kappa", "atom_number")
_PHYSICAL_KEYS = ("pump_cavity_detuning", "dispersive_shift", "pump_coupling",
                  "atom_number", "condensate_length", "cavity_length",
                  "trap_displacement", "cavity_wavevector", "atom_mass",
                  "kappa", "hbar", "max_displacement_fraction")
_PHYSICAL_OPTIONAL = ("hbar", "max_displacement_fraction")


@dataclass
class RunConfig:
    mode: str
    out_dir: str = "./out"
    out_format: str = "csv"
    plots: bool = False
    workers: int = 1
    dicke: DickeParams | None = None
    physical: PhysicalParams | None = None
    grid: dict = field(default_factory=dict)
    modulation: dict = field(default_factory=dict)
    evolve: dict = field(default_factory=dict)
    figure_id: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; valid: {MODES}")
        if self.out_format not in FORMATS:
            raise ConfigError(f"unknown format {self.out_format!r}; valid: {FORMATS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def require_dicke(self) -> DickeParams:
        """Model parameters, mapping the physical block if necessary."""
        if self.dicke is not None:
            return self.dicke
        if self.physical is not None:
            return map_to_dicke(self.physical)
        raise ConfigError("this mode needs a [dicke] or [physical] section")

    def lam_grid(self) -> np.ndarray:
        g = self.grid
        if "lam_list" in g:
            values = np.asarray(g["lam_list"], dtype=float)
        elif {"lam_min", "lam_max", "lam_points"} <= g.keys():
            n = int(g["lam_points"])
            if n < 1:
                raise ConfigError("lam_points must be >= 1")
            values = np.linspace(float(g["lam_min"]), float(g["lam_max"]), n)
        else:
            raise ConfigError(
                "missing coupling grid: give lam_list or lam_min/lam_max/lam_points")
        if values.size == 0:
            raise ConfigError("empty coupling grid")
        if np.any(np.diff(values) < 0):
            raise ConfigError("coupling grid must be sorted ascending")
        return values

    def nu_grid(self) -> np.ndarray:
        g = self.grid
        if not {"nu_min", "nu_max", "nu_points"} <= g.keys():
            raise ConfigError("missing modulation grid: nu_min/nu_max/nu_points")
        n = int(g["nu_points"])
        if n < 1:
            raise ConfigError("nu_points must be >= 1")
        values = np.linspace(float(g["nu_min"]), float(g["nu_max"]), n)
        if np.any(values <= 0):
            raise ConfigError("modulation frequencies must be positive")
        return values


def _parse_float_list(text: str) -> list[float]:
    seps = text.replace(",", " ").split()
    return [float(tok) for tok in seps]


def _section_floats(cp: configparser.ConfigParser, name: str) -> dict:
    out: dict = {}
    for key, raw in cp[name].items():
        if key.endswith("_list"):
            out[key] = _parse_float_list(raw)
        else:
            try:
                out[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key}: not a number: {raw!r}") from exc
    return out


def load_config(path: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse a run configuration file, applying ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section.strip(), key.strip(), value.strip())

    return build_config(cp)


def build_config(cp: configparser.ConfigParser) -> RunConfig:
    if not cp.has_section("run"):
        raise ConfigError("missing [run] section")
    run = cp["run"]
    mode = run.get("mode", "").strip()
    try:
        cfg = RunConfig(
            mode=mode,
            out_dir=run.get("out", "./out").strip(),
            out_format=run.get("format", "csv").strip(),
            plots=run.getboolean("plots", fallback=False),
            workers=run.getint("workers", fallback=1),
        )
    except ValueError as exc:
        raise ConfigError(f"[run]: {exc}") from exc

    if cp.has_section("dicke"):
        values = _section_floats(cp, "dicke")
        unknown = set(values) - set(_DICKE_KEYS)
        if unknown:
            raise ConfigError(f"[dicke]: unknown keys {sorted(unknown)}")
        missing = set(_DICKE_KEYS) - set(values)
        if missing:
            raise ConfigError(f"[dicke]: missing keys {sorted(missing)}")
        try:
            cfg.dicke = DickeParams(**values)
        except ParameterError as exc:
            raise ConfigError(f"[dicke]: {exc}") from exc

    if cp.has_section("physical"):
        values = _section_floats(cp, "physical")
        unknown = set(values) - set(_PHYSICAL_KEYS)
        if unknown:
            raise ConfigError(f"[physical]: unknown keys {sorted(unknown)}")
        missing = set(_PHYSICAL_KEYS) - set(_PHYSICAL_OPTIONAL) - set(values)
        if missing:
            raise ConfigError(f"[physical]: missing keys {sorted(missing)}")
        values["atom_number"] = int(values["atom_number"])
        try:
            cfg.physical = PhysicalParams(**values)
        except ParameterError as exc:
            raise ConfigError(f"[physical]: {exc}") from exc

    if cp.has_section("grid"):
        cfg.grid = _section_floats(cp, "grid")
    if cp.has_section("modulation"):
        cfg.modulation = _section_floats(cp, "modulation")
    if cp.has_section("evolve"):
        cfg.evolve = _section_floats(cp, "evolve")
    if cp.has_section("figure"):
        cfg.figure_id = cp["figure"].get("id", "").strip() or None
    return cfg
