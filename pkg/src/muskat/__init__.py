"""Pseudo-spectral simulator for the one-phase Muskat problem with surface tension."""

from .errors import (
    ConfigError,
    DegenerateJacobian,
    MuskatError,
    NegativePressure,
    NoContraction,
    NonConvergence,
    RegimeError,
    StepRejected,
)
from .kernels import BACKEND
from .spectral import SpectralField, TorusGrid
from .layers import LayeredField, VerticalGrid
from .fixed_point import DnOptions, FixedPointDN, solve_dn
from .elliptic import EllipticDN, StripGrid, solve_straightened
from .evolution import MuskatParams, StepperSpec, run, step
from .presets import make_initial
from .config import RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    "ConfigError",
    "DegenerateJacobian",
    "MuskatError",
    "NegativePressure",
    "NoContraction",
    "NonConvergence",
    "RegimeError",
    "StepRejected",
    "SpectralField",
    "TorusGrid",
    "LayeredField",
    "VerticalGrid",
    "DnOptions",
    "FixedPointDN",
    "solve_dn",
    "EllipticDN",
    "StripGrid",
    "solve_straightened",
    "MuskatParams",
    "StepperSpec",
    "run",
    "step",
    "make_initial",
    "RunConfig",
    "parse_config",
]
