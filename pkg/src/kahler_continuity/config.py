"""Run configuration: flat ``key = value`` text with dotted section prefixes.

Example::

    geometry.kind = axisym_sphere
    geometry.grid = 128
    geometry.area = 4*pi
    perturbation.modes = 2 0.05
    run.t_max = 2
    run.snapshot_times = 0, 0.5

Blank lines and ``#`` comments are ignored.  Mode lists separate modes by
``;`` and the numbers within a mode by whitespace.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from . import geometry as geo
from .errors import ConfigError, GaugeError, GeometryError
from .gauge import Gauge, default_gauge, shifted_gauge

KEYS = {
    "geometry.kind", "geometry.n", "geometry.grid", "geometry.area",
    "perturbation.modes", "gauge.mode", "gauge.v_modes",
    "run.t_max", "run.dt_init", "run.snapshot_times", "run.bootstrap_check",
    "tol.newton", "tol.lin", "tol.vol", "tol.disc",
    "output.dir", "seed",
}

_PI = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*$")


def parse_real(text: str) -> float:
    """Float, optionally written as a multiple of pi (``4*pi``, ``2pi``, ``pi``)."""
    m = _PI.match(text)
    try:
        if m:
            coef = m.group(1)
            return (float(coef) if coef not in ("", "+") else 1.0) * math.pi
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_modes(text: str) -> list:
    modes = []
    for chunk in text.split(";"):
        if chunk.strip():
            try:
                modes.append(tuple(float(v) for v in chunk.split()))
            except ValueError as exc:
                raise ConfigError(f"bad mode entry {chunk!r}") from exc
    return modes


def _format_modes(modes) -> str:
    return "; ".join(" ".join(repr(v) for v in m) for m in modes)


@dataclass
class RunConfig:
    kind: str = geo.FLAT_TORUS
    n: int = 1
    grid: int = 64
    area: float | None = None
    perturbation_modes: list = field(default_factory=list)
    gauge_mode: str = "default"
    gauge_v_modes: list = field(default_factory=list)
    t_max: float = 1.0
    dt_init: float = 1e-3
    snapshot_times: list = field(default_factory=list)
    bootstrap_check: bool = False
    tol_newton: float | None = None
    tol_lin: float = 1e-10
    tol_vol: float | None = None
    tol_disc: float | None = None
    out_dir: str | None = None
    seed: int = 0

    def validate(self):
        if self.gauge_mode not in ("default", "explicit"):
            raise ConfigError(f"gauge.mode must be default or explicit, got {self.gauge_mode!r}")
        if not (self.t_max > 0 and self.dt_init > 0):
            raise ConfigError("run.t_max and run.dt_init must be positive")
        for name in ("tol_newton", "tol_lin", "tol_vol", "tol_disc"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"{name} must be positive")
        for ts in self.snapshot_times:
            if not 0 <= ts <= self.t_max:
                raise ConfigError(f"snapshot time {ts} outside [0, t_max]")
        return self

    def build_geometry(self) -> geo.Geometry:
        try:
            return geo.build_geometry(self.kind, self.n, self.grid, self.area, self.tol_disc)
        except GeometryError as exc:
            raise ConfigError(str(exc)) from exc

    def build_gauge(self, geom) -> Gauge:
        """Default gauge for omega_0 = omega_ref + ddbar phi0, shifted by v if explicit."""
        try:
            phi0 = geo.mode_field(geom, self.perturbation_modes)
            gauge = default_gauge(geom, phi0)
            if self.gauge_mode == "explicit":
                gauge = shifted_gauge(geom, gauge, geo.mode_field(geom, self.gauge_v_modes))
        except (GaugeError, GeometryError) as exc:
            raise ConfigError(f"invalid initial data: {exc}") from exc
        return gauge

    def as_dict(self) -> dict:
        return {
            "geometry.kind": self.kind, "geometry.n": self.n, "geometry.grid": self.grid,
            "geometry.area": self.area,
            "perturbation.modes": [list(m) for m in self.perturbation_modes],
            "gauge.mode": self.gauge_mode, "gauge.v_modes": [list(m) for m in self.gauge_v_modes],
            "run.t_max": self.t_max, "run.dt_init": self.dt_init,
            "run.snapshot_times": list(self.snapshot_times), "run.bootstrap_check": self.bootstrap_check,
            "tol.newton": self.tol_newton, "tol.lin": self.tol_lin, "tol.vol": self.tol_vol,
            "tol.disc": self.tol_disc, "output.dir": self.out_dir, "seed": self.seed,
        }

    def to_text(self) -> str:
        lines = [
            f"geometry.kind = {self.kind}",
            f"geometry.n = {self.n}",
            f"geometry.grid = {self.grid}",
        ]
        if self.area is not None:
            lines.append(f"geometry.area = {self.area!r}")
        if self.perturbation_modes:
            lines.append(f"perturbation.modes = {_format_modes(self.perturbation_modes)}")
        lines.append(f"gauge.mode = {self.gauge_mode}")
        if self.gauge_v_modes:
            lines.append(f"gauge.v_modes = {_format_modes(self.gauge_v_modes)}")
        lines += [
            f"run.t_max = {self.t_max!r}",
            f"run.dt_init = {self.dt_init!r}",
            f"run.bootstrap_check = {str(self.bootstrap_check).lower()}",
            f"tol.lin = {self.tol_lin!r}",
        ]
        if self.tol_newton is not None:
            lines.append(f"tol.newton = {self.tol_newton!r}")
        if self.snapshot_times:
            lines.append("run.snapshot_times = " + ", ".join(repr(t) for t in self.snapshot_times))
        for key, val in (("tol.vol", self.tol_vol), ("tol.disc", self.tol_disc), ("output.dir", self.out_dir)):
            if val is not None:
                lines.append(f"{key} = {val}")
        lines.append(f"seed = {self.seed}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    cfg = RunConfig()
    try:
        if "geometry.kind" in raw:
            cfg.kind = raw["geometry.kind"]
        if "geometry.n" in raw:
            cfg.n = int(raw["geometry.n"])
        if "geometry.grid" in raw:
            cfg.grid = int(raw["geometry.grid"])
        if "geometry.area" in raw:
            cfg.area = parse_real(raw["geometry.area"])
        if "perturbation.modes" in raw:
            cfg.perturbation_modes = parse_modes(raw["perturbation.modes"])
        if "gauge.mode" in raw:
            cfg.gauge_mode = raw["gauge.mode"]
        if "gauge.v_modes" in raw:
            cfg.gauge_v_modes = parse_modes(raw["gauge.v_modes"])
        if "run.t_max" in raw:
            cfg.t_max = parse_real(raw["run.t_max"])
        if "run.dt_init" in raw:
            cfg.dt_init = parse_real(raw["run.dt_init"])
        if "run.snapshot_times" in raw:
            cfg.snapshot_times = [parse_real(s) for s in raw["run.snapshot_times"].split(",") if s.strip()]
        if "run.bootstrap_check" in raw:
            flag = raw["run.bootstrap_check"].lower()
            if flag not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"run.bootstrap_check must be a boolean, got {flag!r}")
            cfg.bootstrap_check = flag in ("true", "1", "yes")
        for key, attr in (("tol.newton", "tol_newton"), ("tol.lin", "tol_lin"),
                          ("tol.vol", "tol_vol"), ("tol.disc", "tol_disc")):
            if key in raw:
                setattr(cfg, attr, parse_real(raw[key]))
        if "output.dir" in raw:
            cfg.out_dir = raw["output.dir"]
        if "seed" in raw:
            cfg.seed = int(raw["seed"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
