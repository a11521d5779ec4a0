# -*- coding: utf-8 -*-
"""Run configuration: one INI file, one section per concern.

Example::

    [lattice]
    dim = 1
    lengths = 10

    [measurement]
    gamma = 0.3
    kind = projective

    [run]
    horizon = 200
    trajectories = 50
    engine = exact
    master_seed = 1234

Unknown sections and keys are rejected, as are out-of-range values; every
error is reported as a `ConfigError` naming the offending key. Lists are
comma separated; an empty value is an empty list. Omitted keys take their
defaults. `serialize` writes every key, so ``parse(serialize(c)) == c``.
"""

__all__ = ["ConfigError", "RunConfig", "LatticeSection", "GatesSection", "MeasurementSection",
           "InitialSection", "RunSection", "SweepSection", "TheorySection",
           "OBSERVABLES", "parse", "load", "serialize", "with_overrides", "geometry_of",
           "theory_params"]

import configparser
import re
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynassign import dyn
from .gates import GateFamily
from .lattice import GeometryError, LatticeGeometry

OBSERVABLES = ("var_q", "var_p", "entropy", "correlators", "renyi2")
_ENGINE = re.compile(r"^(exact|pf:([1-9][0-9]*))$")

class ConfigError(ValueError):
    """Invalid configuration file or value."""

def _split(value, convert):
    if isinstance(value, str):
        return tuple(convert(item.strip()) for item in value.split(",") if item.strip())
    return value

class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

class LatticeSection(_Section):
    dim: int = Field(1, ge=1, le=2)
    lengths: Tuple[int, ...] = (10,)

    @field_validator("lengths", mode="before")
    @classmethod
    def _lengths(cls, v):
        return _split(v, int)

class GatesSection(_Section):
    family: Literal["minimal-pair", "full-mixing"] = "full-mixing"
    gate_probability: float = Field(1.0, gt=0, le=1)

class MeasurementSection(_Section):
    gamma: float = Field(0.3, ge=0, le=1)
    kind: Literal["projective", "weak"] = "projective"
    gamma_w: float = Field(1.0, gt=0)

class InitialSection(_Section):
    recipe: Literal["charge-band", "dipole-band", "uniform", "delta"] = "dipole-band"
    band_width: int = Field(1, ge=0)
    bits: Optional[str] = Field(None, pattern=r"^[01]+$")

class RunSection(_Section):
    horizon: int = Field(100, gt=0)
    trajectories: int = Field(10, gt=0)
    engine: str = "exact"
    fallback: bool = False
    fallback_particles: int = Field(1000, gt=0)
    master_seed: int = Field(0, ge=0, lt=1 << 64)
    out: str = "run"
    observables: Tuple[str, ...] = ("var_q", "var_p", "entropy")
    epsilon: float = Field(0.01, gt=0)
    jobs: int = Field(1, ge=1)
    snapshot_every: int = Field(0, ge=0)

    @field_validator("engine")
    @classmethod
    def _engine(cls, v):
        if not _ENGINE.match(v):
            raise ValueError("engine must be 'exact' or 'pf:N' with N >= 1, got '{}'".format(v))
        return v

    @field_validator("master_seed", mode="before")
    @classmethod
    def _seed(cls, v):
        # hex seeds are fine, as on the command line
        return int(v, 0) if isinstance(v, str) else v

    @field_validator("observables", mode="before")
    @classmethod
    def _observables(cls, v):
        v = _split(v, str)
        unknown = [o for o in v if o not in OBSERVABLES]
        if unknown:
            raise ValueError("unknown observables {}; expected some of {}".format(unknown, OBSERVABLES))
        return v

    @property
    def engine_kind(self):
        return "exact" if self.engine == "exact" else "pf"

    @property
    def n_particles(self):
        """Particle count of a ``pf:N`` engine, else `None`."""
        m = _ENGINE.match(self.engine)
        return int(m.group(2)) if m.group(2) else None

class SweepSection(_Section):
    lengths: Tuple[int, ...] = ()
    gammas: Tuple[float, ...] = ()

    @field_validator("lengths", mode="before")
    @classmethod
    def _lengths(cls, v):
        return _split(v, int)

    @field_validator("gammas", mode="before")
    @classmethod
    def _gammas(cls, v):
        v = _split(v, float)
        if any(not 0 <= g <= 1 for g in v):
            raise ValueError("sweep gammas must lie in [0, 1], got {}".format(v))
        return v

class TheorySection(_Section):
    J: float = Field(16.0 / 9.0, gt=0)
    E_b: float = 0.0
    E_s: float = 0.0
    lambda1: float = Field(1.0, gt=0)
    m_d: float = Field(0.0, ge=0)
    cutoff: float = Field(50.0, gt=0)
    r_min: float = Field(10.0, gt=0)
    r_max: float = Field(100.0, gt=0)
    r_points: int = Field(20, ge=4)

    @model_validator(mode="after")
    def _range(self):
        if not self.r_min < self.r_max:
            raise ValueError("need r_min < r_max, got {} and {}".format(self.r_min, self.r_max))
        return self

_SECTIONS = {"lattice": LatticeSection, "gates": GatesSection, "measurement": MeasurementSection,
             "initial": InitialSection, "run": RunSection, "sweep": SweepSection,
             "theory": TheorySection}

class RunConfig(BaseModel):
    """A validated run configuration; one attribute per INI section."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    lattice: LatticeSection = LatticeSection()
    gates: GatesSection = GatesSection()
    measurement: MeasurementSection = MeasurementSection()
    initial: InitialSection = InitialSection()
    run: RunSection = RunSection()
    sweep: SweepSection = SweepSection()
    theory: TheorySection = TheorySection()

    @model_validator(mode="after")
    def _consistent(self):
        lengths = self.lattice.lengths
        if len(lengths) != self.lattice.dim:
            raise ValueError("lattice.lengths has {} entries for dim = {}".format(len(lengths), self.lattice.dim))
        try:
            geometry = LatticeGeometry(lengths)
            if self.run.engine_kind == "exact":
                geometry.check_exact()
        except GeometryError as err:
            raise ValueError(str(err)) from None
        for L in self.sweep.lengths:
            if L < 1 or L ** self.lattice.dim > 62:
                raise ValueError("sweep length {} gives an invalid lattice".format(L))
            if self.run.engine_kind == "exact" and L ** self.lattice.dim > dyn.exact_site_cap:
                raise ValueError("sweep length {} exceeds the exact-mode cap of {} sites".format(L, dyn.exact_site_cap))
        if self.initial.recipe == "delta":
            if self.initial.bits is None or len(self.initial.bits) != geometry.n_sites:
                raise ValueError("initial.recipe = delta needs bits, a 0/1 string of length {}".format(geometry.n_sites))
        if self.lattice.dim != 1 and set(self.run.observables) & {"correlators", "renyi2"}:
            raise ValueError("correlators and renyi2 observables are defined for 1D chains")
        if self.run.engine_kind == "pf" and "renyi2" in self.run.observables:
            raise ValueError("renyi2 needs posterior probabilities; use the exact engine")
        return self

    @property
    def family(self):
        return GateFamily.parse(self.gates.family)

def _wrap(thunk, what):
    try:
        return thunk()
    except ValidationError as err:
        problems = "; ".join("{}: {}".format(".".join(str(p) for p in e["loc"]) or "config", e["msg"])
                             for e in err.errors())
        raise ConfigError("invalid configuration ({}): {}".format(what, problems)) from None

def parse(text, source="<string>"):
    """Parse INI text into a `RunConfig`. Raises `ConfigError`."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError("cannot read {}: {}".format(source, err)) from None
    unknown = [s for s in parser.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError("unknown sections {} in {}; expected some of {}".format(unknown, source, list(_SECTIONS)))
    data = {name: dict(parser.items(name)) for name in parser.sections()}
    for section in data.values():
        for key, value in section.items():
            if key == "bits" and not value.strip():
                section[key] = None
    return _wrap(lambda: RunConfig.model_validate(data), source)

def load(path):
    """Read and parse a config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise ConfigError("cannot read config file: {}".format(err)) from None
    return parse(text, source=str(path))

def _format(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)

def serialize(config):
    """INI text with every key of every section."""
    lines = []
    for name in _SECTIONS:
        section = getattr(config, name)
        lines.append("[{}]".format(name))
        for key in type(section).model_fields:
            lines.append("{} = {}".format(key, _format(getattr(section, key))))
        lines.append("")
    return "\n".join(lines)

def with_overrides(config, seed=None, out=None, engine=None, jobs=None, **sections):
    """A copy of `config` with CLI-level overrides, revalidated.

    `sections` are ``{section: {key: value}}`` updates.
    """
    data = config.model_dump()
    run = data["run"]
    for key, value in (("master_seed", seed), ("out", out), ("engine", engine), ("jobs", jobs)):
        if value is not None:
            run[key] = value
    for name, updates in sections.items():
        data[name].update(updates)
    return _wrap(lambda: RunConfig.model_validate(data), "overrides")

def geometry_of(config):
    return LatticeGeometry(config.lattice.lengths)

def theory_params(config, **overrides):
    """The `theory.TheoryParams` of a config; the rate comes from ``[measurement] gamma``."""
    from .theory import TheoryParams
    t = config.theory
    values = dict(J=t.J, gamma=config.measurement.gamma or 1.0, E_b=t.E_b, E_s=t.E_s,
                  lambda1=t.lambda1, m_d=t.m_d, cutoff=t.cutoff)
    values.update(overrides)
    return _wrap(lambda: TheoryParams(**values), "theory")
