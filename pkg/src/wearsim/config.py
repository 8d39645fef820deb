"""Sectioned plain-text run configuration.

One file fully determines a run (mesh seed included). Unknown keys and
type errors are reported with their section.key path; absent fields
fall back to the standard non-dimensional defaults (D=1, E=1, nu=0.2,
Gc=1, eta=1e-6, ell=0.02, delta=0.005).
"""

from __future__ import annotations

import configparser
import io as _io
import warnings
from dataclasses import dataclass, field, fields as dc_fields
from typing import Optional

from .constitutive import MaterialParams, SplitKind
from .geometry import JunctionParams
from .postprocess import ClassifierConfig
from .solver import SolverConfig

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize_config",
           "load_config"]


class ConfigError(ValueError):
    pass


@dataclass
class MeshConfig:
    delta_fine: float = 0.005
    delta_coarse: Optional[float] = None   # None -> 8 * delta_fine
    seed: int = 0


@dataclass
class OutputConfig:
    directory: str = "out"
    snapshot_every: int = 0


@dataclass
class RunConfig:
    geometry: JunctionParams = field(default_factory=JunctionParams)
    material: MaterialParams = field(default_factory=MaterialParams)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    split: SplitKind = SplitKind.POSITIVE_HYDROSTATIC

    def validate(self) -> "RunConfig":
        self.geometry.validate(double=self.geometry.delta_gap is not None)
        dfine = self.mesh.delta_fine
        if dfine <= 0:
            raise ConfigError("mesh.delta_fine must be positive")
        if self.mesh.delta_coarse is not None \
                and self.mesh.delta_coarse < dfine:
            raise ConfigError("mesh.delta_coarse must be >= delta_fine")
        ell = self.material.ell
        if dfine > ell / 4.0 * (1 + 1e-12):
            warnings.warn(
                f"delta_fine={dfine} exceeds ell/4={ell / 4}; crack "
                "energies become mesh-dependent", stacklevel=2)
        if ell / self.geometry.D > 1.0 / 30.0 + 1e-12:
            warnings.warn(
                f"ell/D={ell / self.geometry.D:.4f} above 1/30; the "
                "regularized model is far from its sharp-crack limit",
                stacklevel=2)
        return self


_SECTIONS = {
    "geometry": (JunctionParams, "geometry"),
    "material": (MaterialParams, "material"),
    "mesh": (MeshConfig, "mesh"),
    "solver": (SolverConfig, "solver"),
    "classifier": (ClassifierConfig, "classifier"),
    "output": (OutputConfig, "output"),
}

_OPTIONAL_FLOATS = {"delta_gap", "fine_length_over_D", "delta_coarse",
                    "du_t"}


def _coerce(cls, key: str, raw: str, path: str):
    ftypes = {f.name: f.type for f in dc_fields(cls)}
    if key not in ftypes:
        raise ConfigError(f"unknown key {path}")
    raw = raw.strip()
    if key in _OPTIONAL_FLOATS:
        if raw.lower() in ("", "none"):
            return None
        return float(raw)
    t = ftypes[key]
    try:
        if t in ("float", float):
            return float(raw)
        if t in ("int", int):
            return int(raw)
        if t in ("bool", bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {path}: {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a sectioned key-value configuration."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    kwargs = {}
    split = SplitKind.POSITIVE_HYDROSTATIC
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        cls, attr = _SECTIONS[section]
        values = {}
        for key, raw in cp.items(section):
            if section == "solver" and key == "split":
                try:
                    split = SplitKind.parse(raw)
                except ValueError as exc:
                    raise ConfigError(f"solver.split: {exc}") from exc
                continue
            values[key] = _coerce(cls, key, raw, f"{section}.{key}")
        try:
            kwargs[attr] = cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc
    cfg = RunConfig(split=split, **kwargs)
    return cfg.validate()


def load_config(path) -> RunConfig:
    with open(path) as f:
        return parse_config(f.read())


def _emit(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Inverse of parse_config: parse(serialize(c)) == c."""
    out = _io.StringIO()
    for section, (cls, attr) in _SECTIONS.items():
        obj = getattr(cfg, attr)
        out.write(f"[{section}]\n")
        if section == "solver":
            out.write(f"split = {cfg.split.value}\n")
        for f in dc_fields(cls):
            if not f.init:
                continue
            out.write(f"{f.name} = {_emit(getattr(obj, f.name))}\n")
        out.write("\n")
    return out.getvalue()
