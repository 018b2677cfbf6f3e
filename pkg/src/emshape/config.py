"""Run configuration: an INI file with a fixed schema.

Every section and key is declared in ``SCHEMA``; anything else is an error
reporting the offending line. Missing keys take the defaults below.

Example::

    [run]
    seed = 0
    band_limit = 10

    [materials]
    omega = 1.0
    eps_i = 2.25

    [incident]
    inc_dir = 0, 0, 1
    inc_pol = 1, 0, 0

    [deformation]
    kind = gaussian_bump
    width = 0.5

    [fd]
    steps = 1e-2, 5e-3

    [tolerances]
    solution_fd_rel = 1e-3
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emfield import ScatteringConfig
from .geometry import DeformationField, make_deformation

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace("[", " ").replace("]", " ").replace(",", " ").split())


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "default") else int(text)


TOLERANCES: dict[str, float] = {
    # geometry
    "geometry_order_lo": 1.8,
    "geometry_order_hi": 2.2,
    "geometry_rel_at_1e-3": 1e-5,
    "geometry_exact": 1e-10,
    # surface operators
    "surfops_identity": 1e-9,
    "surfops_spectrum": 1e-8,
    "surfops_order_lo": 1.8,
    "surfops_order_hi": 2.2,
    "surfops_fd_rel": 1e-4,
    "surfops_roundtrip": 1e-8,
    "surfops_exact": 1e-10,
    # kernels
    "kernels_selftest": 1e-8,
    "kernels_eigen": 1e-6,
    "kernels_potential": 1e-6,
    "kernels_order_lo": 1.8,
    "kernels_order_hi": 2.2,
    "kernels_fd_rel": 1e-5,
    "kernels_translation": 1e-9,
    "kernels_phase_law": 1e-10,
    # electromagnetic layer
    "emfield_two_route": 1e-6,
    "emfield_curl": 1e-4,
    "emfield_maxwell": 1e-4,
    "emfield_order_lo": 1.7,
    "emfield_order_hi": 2.3,
    "emfield_fd_rel": 1e-4,
    "emfield_translation": 1e-9,
    "emfield_farfield_limit": 1e-3,
    # scattering
    "scattering_null": 1e-5,
    "scattering_transmission": 1e-3,
    "scattering_maxwell": 1e-4,
    "scattering_silver_mueller_ratio": 0.5,
    "solution_fd_rel": 1e-3,
    "solution_order_min": 1.7,
    "characterization_rel": 5e-2,
    "characterization_tangential_abs": 1e-6,
    "scattering_equivariance": 1e-6,
    "scattering_phase_law": 1e-9,
    "scattering_condition": 1e6,
}

# section -> key -> parser
SCHEMA: dict[str, dict] = {
    "run": {"seed": int, "band_limit": _opt_int},
    "materials": {"kappa_i": complex, "kappa_e": complex, "eps_i": float, "eps_e": float,
                  "mu_i": float, "mu_e": float, "omega": float, "eta": float},
    "incident": {"inc_dir": _floats, "inc_pol": _floats, "amplitude": complex},
    "deformation": {"kind": str, "c": _floats, "scale": float, "omega": _floats, "center": _floats,
                    "width": float, "amp": _floats, "degree": int, "order": int},
    "fd": {"steps": _floats},
    "probes": {"exterior": _floats, "interior": _floats, "n_dirs": int},
    "tolerances": {k: float for k in TOLERANCES},
}


@dataclass
class RunConfig:
    """Parsed configuration with defaults filled in."""

    seed: int = 0
    band_limit: int | None = None
    materials: dict = field(default_factory=dict)
    inc_dir: tuple = (0.0, 0.0, 1.0)
    inc_pol: tuple = (1.0, 0.0, 0.0)
    amplitude: complex = 1.0
    deformation: dict = field(default_factory=lambda: {"kind": "gaussian_bump"})
    fd_steps: tuple = (1e-2, 5e-3)
    exterior_probes: tuple = (0.0, 0.0, 2.0, 3.0, 4.0, 0.0)
    interior_probes: tuple = (0.0, 0.0, 0.3, 0.3, -0.2, 0.3)
    n_dirs: int = 8
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    source: str = "<defaults>"

    def tol(self, key: str) -> float:
        return self.tolerances[key]

    def scattering_config(self) -> ScatteringConfig:
        m = dict(self.materials)
        try:
            if "kappa_i" in m or "kappa_e" in m:
                base = ScatteringConfig()
                vals = {k: m.get(k, getattr(base, k)) for k in
                        ("kappa_i", "kappa_e", "eps_i", "eps_e", "mu_i", "mu_e", "omega", "eta")}
                return ScatteringConfig(**vals)
            keys = ("omega", "eps_i", "eps_e", "mu_i", "mu_e", "eta")
            defaults = {"omega": 1.0, "eps_i": 2.25, "eps_e": 1.0, "mu_i": 1.0, "mu_e": 1.0, "eta": 1.0}
            return ScatteringConfig.from_materials(**{k: m.get(k, defaults[k]) for k in keys})
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [materials] {exc}") from exc

    def incident(self):
        from .scattering import IncidentField

        cfg = self.scattering_config()
        d = np.asarray(self.inc_dir, float)
        P = np.asarray(self.inc_pol, float)
        if d.size != 3 or P.size != 3:
            raise ConfigError(f"{self.source}: inc_dir and inc_pol need three components")
        try:
            return IncidentField(tuple(d / np.linalg.norm(d)), tuple(P), cfg.kappa_e, self.amplitude)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [incident] {exc}") from exc

    def deformation_field(self, kind: str | None = None) -> DeformationField:
        params = dict(self.deformation)
        base_kind = params.pop("kind", "gaussian_bump")
        if kind is not None and kind != base_kind:
            params = {}
        try:
            return make_deformation(kind or base_kind, **params)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [deformation] {exc}") from exc

    def probes(self, which: str) -> np.ndarray:
        vals = self.exterior_probes if which == "exterior" else self.interior_probes
        arr = np.asarray(vals, float)
        if arr.size % 3:
            raise ConfigError(f"{self.source}: [probes] {which} needs triples of coordinates")
        return arr.reshape(-1, 3)

    def echo(self) -> dict:
        """Flat key-value summary for reports."""
        out = {"seed": self.seed, "band_limit": self.band_limit if self.band_limit is not None else "default"}
        out.update({f"materials.{k}": v for k, v in sorted(self.materials.items())})
        return out


def _line_of(text: str, section: str, key: str | None) -> int:
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and line.split("=", 1)[0].split(":", 1)[0].strip().lower() == key:
            return no
    return 0


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse INI text against the schema."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(source=source)
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}:{_line_of(text, section, None)}: unknown section [{section}]")
        spec = SCHEMA[section]
        for key, raw in cp.items(section):
            line = _line_of(text, section, key)
            if key not in spec:
                raise ConfigError(f"{source}:{line}: unknown key '{key}' in [{section}]")
            try:
                value = spec[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{line}: bad value for '{key}': {raw!r}") from exc
            _assign(cfg, section, key, value)
    # validate derived objects eagerly so errors surface at load time
    cfg.scattering_config()
    cfg.incident()
    cfg.deformation_field()
    if len(cfg.fd_steps) < 2 or any(s <= 0 for s in cfg.fd_steps):
        raise ConfigError(f"{source}: [fd] steps needs at least two positive values")
    return cfg


def _assign(cfg: RunConfig, section: str, key: str, value) -> None:
    if section == "run":
        setattr(cfg, key, value)
    elif section == "materials":
        cfg.materials[key] = value
    elif section == "incident":
        setattr(cfg, key, value)
    elif section == "deformation":
        if key == "kind":
            cfg.deformation = {"kind": value, **{k: v for k, v in cfg.deformation.items() if k != "kind"}}
        else:
            cfg.deformation[key] = int(value) if key in ("degree", "order") else value
    elif section == "fd":
        cfg.fd_steps = tuple(value)
    elif section == "probes":
        attr = {"exterior": "exterior_probes", "interior": "interior_probes", "n_dirs": "n_dirs"}[key]
        setattr(cfg, attr, value)
    elif section == "tolerances":
        cfg.tolerances[key] = value


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))
