"""Run configuration and run summary documents (JSON)."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .optimizer import SolveOptions
from .problem import ProblemError, ProblemSpec, RadialPolynomial, constants, validate
from .verification import Tolerances


class ConfigError(ValueError):
    """Malformed or invalid configuration document."""


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int
    Lambda: Optional[float] = None
    lambda_over_gamma: Optional[float] = None
    beta: float = 0.0
    p: list[float] = Field(default_factory=lambda: [0.0])
    q: list[float] = Field(default_factory=lambda: [0.0])

    L: int = 64
    M: Optional[int] = None
    max_iter: int = 20000
    grad_tol: float = 1e-8
    step0: float = 1.0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    seed: int = 0
    random_start: bool = False

    inner_window: tuple[float, float] = (1e-3, 1e-2)
    outer_window: tuple[float, float] = (1e2, 1e3)
    tol_slope: float = 0.10
    tol_inner_slope: float = 0.10
    tol_drift: float = 0.05
    tol_volume: float = 1e-6
    tol_kelvin: float = 1e-2
    kelvin_radii: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0])
    S_rad: int = 16
    K_ang: int = 16

    out_dir: str = "."

    @model_validator(mode="after")
    def _one_volume_key(self):
        if (self.Lambda is None) == (self.lambda_over_gamma is None):
            raise ValueError("exactly one of 'Lambda' and 'lambda_over_gamma' must be given")
        if self.M is None:
            object.__setattr__(self, "M", 2 * self.L + 16)
        return self

    def problem(self) -> ProblemSpec:
        if self.n < 3:
            # dimension checks come before constants(n) can be formed
            validate(ProblemSpec(n=self.n, Lambda=1.0))
        Lam = self.Lambda if self.Lambda is not None else (
            self.lambda_over_gamma * constants(self.n).gamma_n)
        return ProblemSpec(n=self.n, Lambda=Lam, beta=self.beta,
                           p=RadialPolynomial(tuple(self.p)), q=RadialPolynomial(tuple(self.q)))

    def solve_options(self) -> SolveOptions:
        return SolveOptions(L=self.L, M=self.M, max_iter=self.max_iter, grad_tol=self.grad_tol,
                            step0=self.step0, armijo_c=self.armijo_c, backtrack=self.backtrack,
                            seed=self.seed, random_start=self.random_start)

    def tolerances(self) -> Tolerances:
        return Tolerances(slope_rel=self.tol_slope, slope_abs_inner=self.tol_inner_slope,
                          drift=self.tol_drift, volume=self.tol_volume, kelvin=self.tol_kelvin,
                          inner=tuple(self.inner_window), outer=tuple(self.outer_window),
                          kelvin_radii=tuple(self.kelvin_radii), S_rad=self.S_rad,
                          K_ang=self.K_ang)


def load_config(data: dict, out_dir: Optional[str] = None) -> RunConfig:
    if out_dir is not None:
        data = {**data, "out_dir": out_dir}
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"schema violation: {exc}") from exc
    try:
        cfg.solve_options()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    # ProblemError (including the nonexistence message) propagates unchanged
    validate(cfg.problem())
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory not writable: {out}")
    return cfg


def parse_config(path, out_dir: Optional[str] = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    return load_config(data, out_dir)


class SolveSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    case: str
    L: int
    M: int
    psi: list[float]
    c_psi: float
    J_value: float
    grad_norm: float
    el_residual: float
    iterations: int
    converged: bool
    history: list[tuple[int, float, float, float]]


class RunSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: str
    config: dict
    solve: Optional[SolveSummary] = None
    verification: Optional[dict] = None
    timings: dict[str, float] = Field(default_factory=dict)

    def deterministic_json(self) -> str:
        """Serialization with the timings excluded (stable across identical runs)."""
        return self.model_dump_json(exclude={"timings"}, indent=1)


__all__ = ["RunConfig", "RunSummary", "SolveSummary", "ConfigError", "parse_config",
           "load_config", "ProblemError"]
