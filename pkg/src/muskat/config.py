"""Run configuration: strict JSON schema with field-path error reporting."""

from __future__ import annotations

import json
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

__all__ = [
    "GridConfig",
    "ParamsConfig",
    "StepperConfig",
    "DnConfig",
    "InitConfig",
    "OutputConfig",
    "ExperimentConfig",
    "RunConfig",
    "parse_config",
    "load_config",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class GridConfig(_Strict):
    dim: Literal[1, 2] = 1
    n: int = 32
    period: float = Field(2.0 * math.pi, gt=0)

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v < 8 or v & (v - 1):
            raise ValueError("must be a power of two >= 8")
        return v


class ParamsConfig(_Strict):
    kappa: float = Field(1.0, gt=0)
    mu: float = Field(1.0, gt=0)
    rho: float = Field(1.0, gt=0)
    gravity: float = Field(1.0, gt=0)
    surface_tension: float = Field(1.0, ge=0)
    galerkin_R: Optional[float] = Field(None, gt=0)


class StepperConfig(_Strict):
    scheme: Literal["ETD_exponential", "RK4_explicit", "IMEX_linear_implicit"] = "ETD_exponential"
    dt: float = Field(1e-3, gt=0)
    nonlinearity: Literal["full", "linear_only", "no_remainder"] = "full"
    etd_order: Literal[1, 2, 4] = 4
    lyapunov_tol: Optional[float] = Field(1e-10, gt=0)


class DnConfig(_Strict):
    backend: Literal["fixed_point", "elliptic"] = "fixed_point"
    z_levels: int = Field(200, ge=2)
    z_max: Optional[float] = Field(None, gt=0)
    ratio: float = Field(1.05, ge=1.0)
    tol: float = Field(1e-12, gt=0)
    max_iter: int = Field(60, ge=1)
    contraction_guard: float = Field(0.9, gt=0)
    quadrature_order: Literal[1, 3] = 1
    depth: float = Field(8.0, gt=0)
    nz: int = Field(400, ge=100)


class InitConfig(_Strict):
    preset: Literal["single_mode", "two_mode", "random_band", "gaussian_bump"] = "single_mode"
    amplitude: float = Field(0.01, gt=0)
    seed: int = 0
    mode: int = Field(1, ge=1)
    band: tuple[int, int] = (1, 4)
    width: float = Field(0.5, gt=0)


class OutputConfig(_Strict):
    dir: str = "muskat_out"
    cadence: int = Field(10, ge=1)
    snapshots: bool = True


class ExperimentConfig(_Strict):
    kind: Literal["evolve", "dn-check", "oracle-compare", "lyapunov-scan", "contraction"] = "evolve"
    t_final: float = Field(1.0, ge=0)
    s: float = 4.0
    samples: int = Field(100, ge=1)
    perturbation: float = Field(1e-4, gt=0)


class RunConfig(_Strict):
    grid: GridConfig = GridConfig()
    params: ParamsConfig = ParamsConfig()
    stepper: StepperConfig = StepperConfig()
    dn: DnConfig = DnConfig()
    init: InitConfig = InitConfig()
    output: OutputConfig = OutputConfig()
    experiment: ExperimentConfig = ExperimentConfig()


def _violations(exc: ValidationError) -> list[tuple[str, str]]:
    out = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<document>"
        out.append((path, err["msg"]))
    return out


def parse_config(text: str | bytes | dict) -> RunConfig:
    """Validate a JSON document (or an already decoded mapping).

    Raises
    ------
    ConfigError
        Listing every violation with its dotted field path.
    """
    if isinstance(text, dict):
        data = text
    else:
        try:
            data = json.loads(text) if str(text).strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError([("<document>", f"invalid JSON: {exc}")]) from exc
    if not isinstance(data, dict):
        raise ConfigError([("<document>", "top level must be a JSON object")])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_violations(exc)) from exc


def load_config(path) -> RunConfig:
    """Read and validate a configuration file; I/O errors propagate as ``OSError``."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Return a validated copy with dotted-path overrides applied."""
    data = cfg.model_dump()
    for key, value in overrides.items():
        if value is None:
            continue
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    return parse_config(data)
