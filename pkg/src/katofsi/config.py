"""Run configuration: dataclasses, YAML parsing and validation.

Schema (all sections optional except where noted)::

    mode: sweep              # ns | euler | frozen_body | sweep | diagnose | corrector | identities
    grid:   {n: 128, L: 4.0}                 # n required
    body:   {shape: disk, radius: 1.0, density: 2.0, vertices: null}
    fluid:  {nu_list: [0.04, 0.02], penalty_eps: 1.0e-8}
    time:   {T: 1.0, cfl: 0.4, sample_stride: 10}
    gravity: [0.0, -1.0]
    kato:   {c: 25.0}
    corrector: {xi_profile: quadratic}
    output: {dir: runs, checkpoint_stride: 0}
    initial: {ell: [0.0, 0.0], r: 1.0}       # body velocity at t = 0
    sweep:  {workers: 1}
"""
from __future__ import annotations

import copy
import dataclasses
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

MODES = ("ns", "euler", "frozen_body", "sweep", "diagnose", "corrector", "identities")
OUTPUT_ENV = "KATOFSI_OUTPUT_ROOT"


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class GridConfig:
    n: int
    L: float = 4.0

    @property
    def h(self) -> float:
        return 2 * self.L / self.n


@dataclass(frozen=True)
class BodyConfig:
    shape: str = "disk"
    radius: float | None = 1.0
    density: float = 2.0
    vertices: tuple | None = None


@dataclass(frozen=True)
class FluidConfig:
    nu_list: tuple = ()
    penalty_eps: float = 1e-8


@dataclass(frozen=True)
class TimeConfig:
    T: float = 1.0
    cfl: float = 0.4
    sample_stride: int = 10


@dataclass(frozen=True)
class KatoConfig:
    c: float = 25.0


@dataclass(frozen=True)
class CorrectorConfig:
    xi_profile: str = "quadratic"


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "runs"
    checkpoint_stride: int = 0


@dataclass(frozen=True)
class InitialConfig:
    ell: tuple = (0.0, 0.0)
    r: float = 1.0


@dataclass(frozen=True)
class SweepConfig:
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    mode: str = "sweep"
    body: BodyConfig = field(default_factory=BodyConfig)
    fluid: FluidConfig = field(default_factory=FluidConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    gravity: tuple = (0.0, -1.0)
    kato: KatoConfig = field(default_factory=KatoConfig)
    corrector: CorrectorConfig = field(default_factory=CorrectorConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def geometry(self):
        from .body import BodyGeometry

        if self.body.shape == "disk":
            return BodyGeometry.disk(self.body.radius, self.body.density)
        return BodyGeometry.polygon(self.body.vertices, self.body.density)

    def make_grid(self):
        from .grid import Grid

        return Grid(self.grid.n, self.grid.L, True)

    def output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ENV)
        out = Path(self.output.dir)
        return out if out.is_absolute() or not root else Path(root) / out

    def to_dict(self) -> dict:
        d = asdict(self)
        return _plain(d)


_SECTIONS = {
    "grid": GridConfig, "body": BodyConfig, "fluid": FluidConfig, "time": TimeConfig,
    "kato": KatoConfig, "corrector": CorrectorConfig, "output": OutputConfig,
    "initial": InitialConfig, "sweep": SweepConfig,
}


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def _number(name: str, v, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"{name} must be an integer, got {v!r}")
        return int(v)
    return float(v)


def _build_section(name: str, cls, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")
    kw = {k: _tuplify(v) for k, v in raw.items()}
    for k, v in kw.items():
        if isinstance(known[k].default, float) and isinstance(v, int) and not isinstance(v, bool):
            kw[k] = float(v)
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"section {name}: {exc}") from None


def from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping at top level")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - top)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    if "grid" not in raw or not isinstance(raw["grid"], dict) or "n" not in raw["grid"]:
        raise ConfigError("missing required key grid.n")
    kw = {}
    for name, cls in _SECTIONS.items():
        if name in raw:
            kw[name] = _build_section(name, cls, raw[name] if raw[name] is not None else {})
    if "mode" in raw:
        kw["mode"] = raw["mode"]
    if "gravity" in raw:
        g = raw["gravity"]
        kw["gravity"] = tuple(float(x) if isinstance(x, int) and not isinstance(x, bool) else x for x in g) \
            if isinstance(g, list) else g
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def min_grid_for(L: float, width: float, cells: float = 4.0) -> int:
    """Smallest even ``n`` with ``cells`` cells across a strip of the given width."""
    n = math.ceil(2 * L * cells / width - 1e-9)
    return n + (n % 2)


def validate(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {cfg.mode!r}")
    n = _number("grid.n", cfg.grid.n, int)
    L = _number("grid.L", cfg.grid.L)
    if n < 8:
        raise ConfigError(f"grid.n must be at least 8, got {n}")
    if L <= 0:
        raise ConfigError(f"grid.L must be positive, got {L}")
    b = cfg.body
    if b.shape not in ("disk", "polygon"):
        raise ConfigError(f"body.shape must be disk or polygon, got {b.shape!r}")
    if b.shape == "disk" and (b.radius is None or _number("body.radius", b.radius) <= 0):
        raise ConfigError("body.radius must be positive for a disk")
    if b.shape == "polygon" and not b.vertices:
        raise ConfigError("body.vertices is required for a polygon")
    if _number("body.density", b.density) <= 0:
        raise ConfigError("body.density must be positive")
    if _number("time.T", cfg.time.T) <= 0:
        raise ConfigError(f"time.T must be positive, got {cfg.time.T}")
    if not 0 < _number("time.cfl", cfg.time.cfl) <= 1:
        raise ConfigError("time.cfl must lie in (0, 1]")
    if _number("time.sample_stride", cfg.time.sample_stride, int) < 1:
        raise ConfigError("time.sample_stride must be at least 1")
    if len(cfg.gravity) != 2:
        raise ConfigError("gravity must be a 2-vector")
    for i, gi in enumerate(cfg.gravity):
        _number(f"gravity[{i}]", gi)
    if len(cfg.initial.ell) != 2:
        raise ConfigError("initial.ell must be a 2-vector")
    if cfg.corrector.xi_profile not in ("quadratic", "cubic"):
        raise ConfigError("corrector.xi_profile must be quadratic or cubic")
    if _number("output.checkpoint_stride", cfg.output.checkpoint_stride, int) < 0:
        raise ConfigError("output.checkpoint_stride must be nonnegative")
    if _number("sweep.workers", cfg.sweep.workers, int) < 1:
        raise ConfigError("sweep.workers must be at least 1")
    nus = [_number("fluid.nu_list entry", v) for v in cfg.fluid.nu_list]
    if any(v <= 0 for v in nus):
        raise ConfigError("every viscosity in fluid.nu_list must be positive")
    for a, bb in zip(nus, nus[1:]):
        if not bb < a:
            raise ConfigError(f"fluid.nu_list must be strictly decreasing; offending pair ({a:g}, {bb:g})")
    if cfg.mode in ("ns", "frozen_body", "sweep", "diagnose", "corrector") and not nus:
        raise ConfigError(f"mode {cfg.mode} needs a nonempty fluid.nu_list")
    if nus:
        c = _number("kato.c", cfg.kato.c)
        if c <= 0:
            raise ConfigError("kato.c must be positive")
        h = 2 * L / n
        if c * min(nus) < 4 * h:
            need = min_grid_for(L, c * min(nus))
            raise ConfigError(
                f"strip c*nu_min = {c * min(nus):.4g} is narrower than 4 cells (h = {h:.4g}); "
                f"use grid.n >= {need} or a larger kato.c")
        a = b.radius if b.shape == "disk" else cfg.geometry().inscribed_radius
        if a + 2 * c * max(nus) >= L:
            raise ConfigError(
                f"body does not fit: radius + 2 c nu_max = {a + 2 * c * max(nus):.4g} >= L = {L:g}")


def parse_config(text: str) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return from_dict(raw if raw is not None else {})


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``a.b=value`` strings; values are parsed as YAML scalars or lists."""
    out = copy.deepcopy(raw) if raw else {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key.path=value")
        key, val = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r} descends into a non-section")
            node = nxt
        node[parts[-1]] = yaml.safe_load(val)
    return out


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def replace_grid(cfg: RunConfig, n: int, L: float) -> RunConfig:
    """Same run on another box; revalidated."""
    out = dataclasses.replace(cfg, grid=GridConfig(n, float(L)))
    validate(out)
    return out
