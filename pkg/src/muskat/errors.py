"""Exception types shared across the package."""

from __future__ import annotations


class MuskatError(Exception):
    """Base class for all package errors."""


class RegimeError(MuskatError):
    """The data left the small-amplitude regime where the solvers are valid."""


class DegenerateJacobian(RegimeError):
    """The flattening map stopped being a diffeomorphism at tolerance."""


class NoContraction(RegimeError):
    """Picard iteration failed to contract."""


class StepRejected(RegimeError):
    """A time step increased the L2 norm beyond the Lyapunov guard."""


class NonConvergence(MuskatError):
    """An iterative linear solve did not reach its tolerance."""


class NegativePressure(RegimeError):
    """The hydraulic pressure became negative inside the fluid."""


class ConfigError(MuskatError):
    """Configuration validation failure.

    Parameters
    ----------
    errors : list of (str, str)
        Pairs of dotted field path and message.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{path}: {msg}" for path, msg in self.errors]
        super().__init__("invalid configuration\n" + "\n".join(lines))
