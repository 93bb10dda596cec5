"""Mean-zero initial interfaces."""

from __future__ import annotations

import numpy as np

from .spectral import SpectralField, TorusGrid, forward_transform

__all__ = ["PRESETS", "make_initial"]

PRESETS = ("single_mode", "two_mode", "random_band", "gaussian_bump")


def _zero_mean(f: SpectralField) -> SpectralField:
    f.coeffs[(0,) * f.grid.dim] = 0.0
    return f


def _scale_sup(f: SpectralField, amplitude: float) -> SpectralField:
    peak = float(np.abs(f.samples()).max())
    return f * (amplitude / peak) if peak > 0 else f


def _cosine(grid: TorusGrid, kvec: tuple[int, ...], amplitude: float) -> np.ndarray:
    """Exact coefficients of ``amplitude * cos(k1 k . x)``."""
    c = np.zeros(grid.shape, dtype=complex)
    c[tuple(k % grid.n for k in kvec)] += amplitude / 2.0
    c[tuple(-k % grid.n for k in kvec)] += amplitude / 2.0
    return c


def make_initial(preset: str, grid: TorusGrid, amplitude: float = 0.01, seed: int = 0,
                 mode: int = 1, band: tuple[int, int] = (1, 4), width: float = 0.5) -> SpectralField:
    """Build a preset interface with zero mean.

    Parameters
    ----------
    preset : str
        ``single_mode``: ``A cos(mode x)``.
        ``two_mode``: ``A (cos x + cos 2x / 2)`` (``x + y`` in the second mode for d = 2).
        ``random_band``: Gaussian coefficients on ``band[0] <= |k| <= band[1]``, sup norm ``A``.
        ``gaussian_bump``: periodized Gaussian of the given width, mean removed, sup norm ``A``.
    amplitude : float
        Positive amplitude ``A``.
    seed : int
        Seed for ``random_band``.

    Raises
    ------
    ValueError
        For unknown presets or a nonpositive amplitude.
    """
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    x = grid.points
    pad = (0,) * (grid.dim - 1)
    if preset == "single_mode":
        f = SpectralField(grid, _cosine(grid, (mode,) + pad, amplitude))
    elif preset == "two_mode":
        second = (1, 1) if grid.dim == 2 else (2,)
        f = SpectralField(grid, _cosine(grid, (1,) + pad, amplitude) + _cosine(grid, second, 0.5 * amplitude))
    elif preset == "random_band":
        rng = np.random.default_rng(seed)
        kabs = np.sqrt(sum(k.astype(float) ** 2 for k in grid.wavenumbers))
        sel = (kabs >= band[0]) & (kabs <= band[1])
        c = np.zeros(grid.shape, dtype=complex)
        c[sel] = rng.standard_normal(int(sel.sum())) + 1j * rng.standard_normal(int(sel.sum()))
        axes = tuple(range(grid.dim))
        mirror = np.conj(np.roll(np.flip(c, axis=axes), 1, axis=axes))
        f = _scale_sup(_zero_mean(SpectralField(grid, 0.5 * (c + mirror))), amplitude)
    elif preset == "gaussian_bump":
        L = grid.period
        bump = np.ones(grid.shape)
        for xi in x:
            acc = np.zeros(grid.shape)
            for img in range(-3, 4):
                acc += np.exp(-((xi - L / 2 + img * L) ** 2) / (2.0 * width**2))
            bump = bump * acc
        f = _scale_sup(_zero_mean(forward_transform(bump, grid)), amplitude)
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    return _zero_mean(f)
