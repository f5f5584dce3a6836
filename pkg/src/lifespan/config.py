"""Experiment configuration: an INI file of ``key = value`` sections, overridable from the CLI."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace

from .bounds import BoundConstants
from .data import BumpProfile
from .solver import SolverConfig
from .spaces import TimeGrid
from .spectral import Grid


class ConfigError(ValueError):
    pass


def _floats(text):
    out = []
    for tok in str(text).replace(",", " ").split():
        if "/" in tok:
            num, den = tok.split("/", 1)
            out.append(float(num) / float(den))
        else:
            out.append(float(tok))
    return tuple(out)


def _float(text):
    vals = _floats(text)
    if len(vals) != 1:
        raise ConfigError(f"expected one number, got {text!r}")
    return vals[0]


def _box(text):
    t = str(text).strip().lower().replace(" ", "")
    if t in ("pi", "1pi"):
        return math.pi
    if t.endswith("pi"):
        return float(t[:-2].rstrip("*")) * math.pi
    return float(t)


@dataclass
class GridSection:
    n: int = 32
    box: float = 2 * math.pi


@dataclass
class TimeSection:
    t_min: float = None
    t_max: float = None
    count: int = None


@dataclass
class FamilySection:
    eps: tuple = (1 / 8, 1 / 16, 1 / 32, 1 / 64)
    alpha: float = 0.75
    gamma: tuple = (0.1, 0.25, 0.4)
    sigma: tuple = (0.75, 1.0, 1.5)
    kappa: float = 0.25
    eta: float = 0.5
    c0_const: float = 1.0
    profile: tuple = ("flat", "gaussian", "raised_cosine")
    radii: tuple = (1.0, 0.6, 1.0)
    amplitude: str = "normalized"  # or "physical"


@dataclass
class SolverSection:
    dt: float = 1e-3
    t_end: float = 0.5
    sample_every: int = 10
    cfl_safety: float = 0.0
    blowup_threshold: float = 1e8
    tail_tol: float = 1e-6
    c_check: float = 10.0


@dataclass
class RunSection:
    data: str = "fixture"
    norms: str = "L2,Linf,Bheat:1:inf:inf,Bheat:1:inf:2,Bdyadic:1:inf:inf,H:0.5"
    out: str = "out"
    seed: int = 0
    threads: int = 1


@dataclass
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    constants: dict = field(default_factory=dict)
    family: FamilySection = field(default_factory=FamilySection)
    solver: SolverSection = field(default_factory=SolverSection)
    run: RunSection = field(default_factory=RunSection)

    # derived objects
    def make_grid(self) -> Grid:
        return Grid(self.grid.n, box_len=self.grid.box)

    def make_time_grid(self, grid: Grid) -> TimeGrid:
        d = TimeGrid.default(grid)
        t = self.time
        return TimeGrid(t.t_min or d.t_min, t.t_max or d.t_max, t.count or d.count)

    def make_constants(self) -> BoundConstants:
        return BoundConstants(**self.constants)

    def make_profile(self) -> BumpProfile:
        return BumpProfile(tuple(self.family.profile), tuple(self.family.radii))

    def make_solver(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(s.dt, s.t_end, s.sample_every, s.cfl_safety, s.blowup_threshold, s.tail_tol, False)

    def validate(self):
        try:
            grid = self.make_grid()
            self.make_time_grid(grid)
            self.make_constants()
            self.make_solver()
            self.make_profile()
        except ValueError as err:
            raise ConfigError(str(err)) from err
        f = self.family
        for e in f.eps:
            if not 0 < e < 1:
                raise ConfigError(f"eps values must lie in (0, 1), got {e}")
        for g in f.gamma:
            if not 0 < g < 0.5:
                raise ConfigError(f"gamma must lie in (0, 1/2), got {g}")
        for s in f.sigma:
            if not s > 0:
                raise ConfigError(f"sigma must be positive, got {s}")
        if not 0 < f.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {f.alpha}")
        if not 0 < f.eta < 1 or not 0 < f.kappa < f.eta:
            raise ConfigError("need 0 < kappa < eta < 1")
        if f.amplitude not in ("normalized", "physical"):
            raise ConfigError("amplitude must be 'normalized' or 'physical'")
        if self.run.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.run.seed < 0 or self.run.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return self


_PARSERS = {
    "grid": {"n": int, "box": _box},
    "time": {"t_min": _float, "t_max": _float, "count": int},
    "constants": {"c_fp": _float, "C_tl": _float, "K": _float, "c0": _float},
    "family": {
        "eps": _floats, "alpha": _float, "gamma": _floats, "sigma": _floats, "kappa": _float,
        "eta": _float, "c0_const": _float, "profile": lambda s: tuple(s.replace(",", " ").split()),
        "radii": _floats, "amplitude": str.strip,
    },
    "solver": {
        "dt": _float, "t_end": _float, "sample_every": int, "cfl_safety": _float,
        "blowup_threshold": _float, "tail_tol": _float, "c_check": _float,
    },
    "run": {"data": str.strip, "norms": str.strip, "out": str.strip, "seed": int, "threads": int},
}


def parse_config(text: str, base: ExperimentConfig = None) -> ExperimentConfig:
    """Parse INI text; unknown sections or keys are rejected."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(str(err)) from err
    cfg = base or ExperimentConfig()
    for section in cp.sections():
        if section not in _PARSERS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _PARSERS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                value = _PARSERS[section][key](raw)
            except (ValueError, TypeError) as err:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from err
            set_value(cfg, section, key, value)
    return cfg


def set_value(cfg: ExperimentConfig, section: str, key: str, value):
    if section == "constants":
        cfg.constants[key] = value
        return
    sub = getattr(cfg, section)
    if key not in {f.name for f in fields(sub)}:
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    setattr(cfg, section, replace(sub, **{key: value}))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return parse_config(text)
