"""JSON run configuration.

Three sections, all optional::

    {"nls": {"p": 3, "omega": 1},
     "solver": {"gridsize": 16, "dt": 0.01, "dealias": "two_thirds"},
     "experiment": {"kind": "thm1", "rho": 1, "delta": 0.1, "s": -0.25, ...}}

Unknown keys are rejected; errors name the offending field by dotted path.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .closed_form import NlsParams
from .errors import ConfigError
from .experiments import HORIZON_FACTOR, ROTATION_MARGIN, SMALLNESS, Caps
from .solver import SolverConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NlsSection(_Strict):
    p: int = 3
    omega: Literal[1, -1] = 1

    @field_validator("p")
    @classmethod
    def _odd(cls, v):
        if v < 3 or v % 2 == 0:
            raise ValueError("must be an odd integer >= 3")
        return v

    def build(self) -> NlsParams:
        return NlsParams(self.p, self.omega)


class SolverSection(_Strict):
    gridsize: Optional[int] = None
    dt: Optional[float] = Field(default=None, gt=0)
    dealias: Literal["two_thirds", "none"] = "two_thirds"

    @field_validator("gridsize")
    @classmethod
    def _power_of_two(cls, v):
        if v is not None and (v < 8 or v & (v - 1)):
            raise ValueError("must be a power of two >= 8")
        return v

    def build(self, default: SolverConfig) -> SolverConfig:
        return SolverConfig(
            gridsize=self.gridsize or default.gridsize,
            dt=self.dt or default.dt,
            dealias=self.dealias,
        )


class CapsSection(_Strict):
    n_max: int = Field(default=Caps.n_max, ge=1)
    gridsize_max: int = Field(default=Caps.gridsize_max, ge=8)
    max_steps: int = Field(default=Caps.max_steps, ge=1)

    def build(self) -> Caps:
        return Caps(self.n_max, self.gridsize_max, self.max_steps)


class ExperimentSection(_Strict):
    kind: Optional[Literal["simulate", "approx", "ode", "verify-bound", "thm1", "thm2"]] = None
    rho: float = Field(default=1.0, gt=0)
    delta: float = Field(default=0.1, gt=0)
    s: float = Field(default=-0.25, lt=0)
    M: Optional[float] = Field(default=None, gt=0)
    N: Optional[int] = Field(default=None, ge=1)
    horizon_factor: float = Field(default=HORIZON_FACTOR, gt=0)
    rotation_margin: float = Field(default=ROTATION_MARGIN, gt=0)
    smallness: float = Field(default=SMALLNESS, gt=0)
    caps: CapsSection = CapsSection()
    sigma: Optional[float] = Field(default=None, gt=0, lt=1)
    sigmas: Optional[list[float]] = None
    alpha: Optional[list[float]] = None
    beta: Optional[list[float]] = None
    t_final: Optional[float] = Field(default=None, ge=0)
    samples: int = Field(default=400, ge=1)
    certify: bool = False

    @field_validator("alpha", "beta")
    @classmethod
    def _complex_pair(cls, v):
        if v is not None and len(v) != 2:
            raise ValueError("complex numbers are written as [re, im]")
        return v


class RunConfig(_Strict):
    nls: NlsSection = NlsSection()
    solver: SolverSection = SolverSection()
    experiment: ExperimentSection = ExperimentSection()


def _path(loc) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(obj) -> RunConfig:
    """Validate a decoded JSON object, raising :class:`ConfigError` with a field path."""
    try:
        return RunConfig.model_validate(obj)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(_path(first["loc"]), first["msg"]) from None


def load_config(path) -> RunConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ConfigError("", f"{path}: {exc.strerror}") from None
    return parse_config(obj)
