"""Mean curvature of graphs and related geometric scalars."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Gradient,
    SpectralField,
    from_padded_samples,
    padded_samples,
    to_samples,
)

__all__ = [
    "CurvatureDecomposition",
    "TaylorCoefficient",
    "h1_profile",
    "mean_curvature",
    "taylor_coefficient",
]


def h1_profile(p, vector_axis: int | None = None) -> np.ndarray:
    """``H1(p) = (1 + |p|^2)^(-1/2) - 1`` in a cancellation-free form.

    Parameters
    ----------
    p : array_like
        Gradient samples.  Without ``vector_axis`` the entries are treated as
        scalar slopes (the one-dimensional case).
    vector_axis : int, optional
        Axis holding the gradient components.
    """
    p = np.asarray(p, dtype=float)
    q = p * p if vector_axis is None else np.sum(p * p, axis=vector_axis)
    r = np.sqrt(1.0 + q)
    return -q / (r * (1.0 + r))


@dataclass
class CurvatureDecomposition:
    """``H(f) = -Lap f - div(grad f H1(grad f))``."""

    linear_part: SpectralField
    nonlinear_part: SpectralField
    total: SpectralField


def _pad_size(n: int) -> int:
    return 3 * n // 2


def mean_curvature(f: SpectralField) -> CurvatureDecomposition:
    """Mean curvature split into its linear and nonlinear parts.

    The product ``grad f H1(grad f)`` is formed on a 3/2-padded grid and the
    result is restricted to the 2/3-rule band before the divergence.
    """
    grid = f.grid
    m = _pad_size(grid.n)
    grads = [Gradient(i).symbol(grid) for i in range(grid.dim)]
    p = np.stack([padded_samples(g * f.coeffs, grid, m) for g in grads])
    h1 = h1_profile(p, vector_axis=0)
    flux = from_padded_samples(p * h1, grid) * grid.dealias_mask
    nonlin = -sum(g * flux[i] for i, g in enumerate(grads))
    lin = grid.xi_abs**2 * f.coeffs
    return CurvatureDecomposition(
        linear_part=SpectralField(grid, lin),
        nonlinear_part=SpectralField(grid, nonlin),
        total=SpectralField(grid, lin + nonlin),
    )


@dataclass
class TaylorCoefficient:
    samples: np.ndarray
    a_min: float


def taylor_coefficient(f: SpectralField, Gff: SpectralField) -> TaylorCoefficient:
    """``a = (1 - G(f) f) / (1 + |grad f|^2)`` on the grid."""
    grid = f.grid
    grad2 = sum(to_samples(Gradient(i).symbol(grid) * f.coeffs, grid) ** 2 for i in range(grid.dim))
    a = (1.0 - Gff.samples()) / (1.0 + grad2)
    return TaylorCoefficient(a, float(a.min()))
