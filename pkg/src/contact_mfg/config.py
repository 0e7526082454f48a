"""JSON run configuration, validated with pydantic (unknown keys rejected)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ConfigError
from .expr import ExpressionError, parse_expression
from .grid import PeriodicGrid
from .mfg import EquilibriumConfig
from .model import ContactModel, Coupling, Func1D, Theta, WrappedGaussian
from .weak_kam import SemigroupConfig

__all__ = ["RunConfig", "Problem", "load_config", "parse_config", "build_problem"]

_PERIODIC_TOL = 1e-9


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_expression(v: str) -> str:
    try:
        parse_expression(v)
    except ExpressionError as exc:
        raise ValueError(str(exc)) from None
    return v


class ThetaBlock(_Strict):
    kind: Literal["linear", "sine", "arctan"] = "linear"
    slope: float = Field(1.0, gt=0)
    amplitude: float = 0.0


class ModelBlock(_Strict):
    theta: ThetaBlock = Field(default_factory=ThetaBlock)
    kinetic_coeff: str = "1"
    potential: str = "0"

    _kc = field_validator("kinetic_coeff", "potential")(_check_expression)


class KernelBlock(_Strict):
    kind: Literal["wrapped_gaussian"] = "wrapped_gaussian"
    eps: float = Field(0.1, gt=0)


class CouplingBlock(_Strict):
    base: str = "0"
    strength: float = 0.0
    kernel: Optional[KernelBlock] = None

    _b = field_validator("base")(_check_expression)


class SolverBlock(_Strict):
    dt: Optional[float] = Field(None, gt=0)
    v_max: Optional[float] = Field(None, gt=0)
    tol_conv: Optional[float] = Field(None, gt=0)
    max_steps: Optional[int] = Field(None, ge=1)
    inner_tol: float = Field(1e-13, gt=0)
    method: Literal["relax", "march"] = "relax"


class EquilibriumBlock(_Strict):
    selection: Literal["uniform", "residual"] = "uniform"
    damping: Union[Literal["averaging"], float] = "averaging"
    tol_m: Optional[float] = Field(None, gt=0)
    tol_mass: float = Field(1e-3, ge=0)
    max_outer: int = Field(200, ge=1)
    modes: int = Field(8, ge=1)
    tol_h: Optional[float] = Field(None, gt=0)
    tol_g: Optional[float] = Field(None, gt=0)

    @field_validator("damping")
    @classmethod
    def _damping(cls, v):
        if v != "averaging" and not 0 < float(v) <= 1:
            raise ValueError("fixed damping must lie in (0, 1]")
        return v


class RunConfig(_Strict):
    grid_n: int = Field(128, ge=8)
    model: ModelBlock = Field(default_factory=ModelBlock)
    coupling: CouplingBlock = Field(default_factory=CouplingBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)
    equilibrium: EquilibriumBlock = Field(default_factory=EquilibriumBlock)
    output_dir: str = "out"
    emit_svg: bool = False
    seed: int = Field(0, ge=0, lt=2**64)


@dataclass(frozen=True)
class Problem:
    """Objects built from a validated configuration."""

    grid: PeriodicGrid
    model: ContactModel
    coupling: Coupling
    semigroup: SemigroupConfig
    equilibrium: EquilibriumConfig
    config: RunConfig


def _loc(err) -> str:
    return ".".join(str(p) for p in err["loc"])


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded JSON document; schema violations become ``ConfigError``."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(_loc(first), first["msg"]) from None


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError("", f"{path}: top-level JSON value must be an object")
    return parse_config(data)


def _func(text: str, path: str, periodic: bool) -> Func1D:
    f = Func1D.from_expression(parse_expression(text))
    xs = np.linspace(0.0, 1.0, 4097)
    with np.errstate(all="ignore"):
        vals, dvals = f(xs), f.d(xs)
    bad = ~(np.isfinite(vals) & np.isfinite(dvals))
    if np.any(bad):
        raise ConfigError(path, f"expression is not finite on [0, 1] (witness x={xs[np.argmax(bad)]!r})")
    if periodic and abs(vals[0] - vals[-1]) > _PERIODIC_TOL:
        raise ConfigError(path, f"expression is not periodic: f(0)={vals[0]!r}, f(1)={vals[-1]!r}")
    return f


def build_problem(cfg: RunConfig, grid_n: int | None = None) -> Problem:
    """Instantiate grid, model, coupling and solver settings; validates the expressions."""
    n = cfg.grid_n if grid_n is None else grid_n
    if n < 8:
        raise ConfigError("grid_n", "must be >= 8")
    grid = PeriodicGrid(n)
    mb = cfg.model
    if mb.theta.kind == "sine" and not abs(mb.theta.amplitude) < mb.theta.slope:
        raise ConfigError("model.theta.amplitude", "sine theta needs |amplitude| < slope")
    theta = Theta(mb.theta.kind, mb.theta.slope, mb.theta.amplitude)
    a = _func(mb.kinetic_coeff, "model.kinetic_coeff", periodic=True)
    a_nodes = a(np.linspace(0.0, 1.0, 4097))
    if np.any(a_nodes <= 0):
        i = int(np.argmin(a_nodes))
        raise ConfigError("model.kinetic_coeff", f"kinetic_coeff not positive (witness x={i / 4096!r}, a={a_nodes[i]!r})")
    V = _func(mb.potential, "model.potential", periodic=True)
    cb = cfg.coupling
    g = _func(cb.base, "coupling.base", periodic=True)
    if cb.strength != 0.0 and cb.kernel is None:
        raise ConfigError("coupling.kernel", "a nonzero strength needs a kernel")
    kernel = WrappedGaussian(cb.kernel.eps) if cb.kernel is not None else None
    coupling = Coupling(g, cb.strength, kernel)
    semigroup = SemigroupConfig(**cfg.solver.model_dump())
    eq = cfg.equilibrium.model_dump()
    equilibrium = EquilibriumConfig(semigroup=semigroup, **eq)
    return Problem(grid, ContactModel(theta, a, V), coupling, semigroup, equilibrium, cfg)
