"""Lebesgue, Sobolev, Besov, Lipschitz and Chemin-Lerner norms on the torus."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .spectral import (
    LPBlock,
    SpectralField,
    TorusGrid,
    lp_annulus,
    lp_max_level,
    padded_samples,
    to_samples,
)

__all__ = [
    "Lebesgue",
    "Sobolev",
    "HomSobolev",
    "Besov",
    "HomBesov",
    "LipschitzW1inf",
    "NonzeroMeanWarning",
    "Trajectory",
    "norm",
    "lebesgue",
    "sobolev",
    "hom_sobolev",
    "besov",
    "hom_besov",
    "lipschitz",
    "chemin_lerner_norm",
]


class NonzeroMeanWarning(UserWarning):
    """A homogeneous norm ignored a nonzero mean."""


def _check_exponent(name, p):
    if not (p == math.inf or p >= 1):
        raise ValueError(f"{name} must lie in [1, inf], got {p}")


@dataclass(frozen=True)
class Lebesgue:
    p: float = 2.0

    def __post_init__(self):
        _check_exponent("p", self.p)


@dataclass(frozen=True)
class Sobolev:
    s: float


@dataclass(frozen=True)
class HomSobolev:
    s: float


@dataclass(frozen=True)
class Besov:
    s: float
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        _check_exponent("p", self.p)
        _check_exponent("q", self.q)


@dataclass(frozen=True)
class HomBesov(Besov):
    pass


@dataclass(frozen=True)
class LipschitzW1inf:
    oversample: int = 8


NormSpec = Lebesgue | Sobolev | HomSobolev | Besov | HomBesov | LipschitzW1inf


def _l2_coeffs(c: np.ndarray, grid: TorusGrid, weight: np.ndarray | None = None) -> float:
    a = np.abs(c) ** 2
    if weight is not None:
        a = a * weight
    return float(math.sqrt(grid.volume * a.sum()))


def _lp_samples(x: np.ndarray, grid: TorusGrid, p: float) -> float:
    if p == math.inf:
        return float(np.abs(x).max()) if x.size else 0.0
    cell = grid.volume / x.size
    return float((cell * np.sum(np.abs(x) ** p)) ** (1.0 / p))


def lebesgue(f: SpectralField, p: float = 2.0) -> float:
    """``L^p`` norm; ``p = 2`` by Parseval, otherwise grid quadrature."""
    if p == 2:
        return _l2_coeffs(f.coeffs, f.grid)
    return _lp_samples(f.samples(), f.grid, p)


def sobolev(f: SpectralField, s: float) -> float:
    """``(L^d sum (1 + |xi|^2)^s |fhat|^2)^(1/2)``."""
    return _l2_coeffs(f.coeffs, f.grid, (1.0 + f.grid.xi_abs**2) ** s)


def _mean_check(f: SpectralField, s: float) -> None:
    m = abs(f.mean)
    if m > 1e-14 * max(1.0, float(np.abs(f.coeffs).max())):
        if s < 0:
            raise ValueError("negative-order homogeneous norm of a field with nonzero mean")
        warnings.warn("homogeneous norm ignores the nonzero mean", NonzeroMeanWarning, stacklevel=3)


def hom_sobolev(f: SpectralField, s: float) -> float:
    """``(L^d sum_{k != 0} |xi|^(2s) |fhat|^2)^(1/2)``.

    A nonzero mean is dropped with a :class:`NonzeroMeanWarning` for
    ``s >= 0`` and rejected for ``s < 0``.
    """
    _mean_check(f, s)
    r = f.grid.xi_abs
    w = np.zeros_like(r)
    nz = r > 0
    w[nz] = r[nz] ** (2.0 * s)
    return _l2_coeffs(f.coeffs, f.grid, w)


def _lq(values: Sequence[float], q: float) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    if q == math.inf:
        return float(v.max())
    return float(np.sum(v**q) ** (1.0 / q))


def _block_norm(c: np.ndarray, grid: TorusGrid, p: float) -> float:
    if p == 2:
        return _l2_coeffs(c, grid)
    return _lp_samples(to_samples(c, grid), grid, p)


def _besov_terms(f: SpectralField, s: float, p: float) -> list[float]:
    terms = [_block_norm(f.coeffs * LPBlock(-1).symbol(f.grid), f.grid, p)]
    for j in range(lp_max_level(f.grid) + 1):
        terms.append(2.0 ** (s * j) * _block_norm(f.coeffs * LPBlock(j).symbol(f.grid), f.grid, p))
    return terms


def besov(f: SpectralField, s: float, p: float = 2.0, q: float = 2.0) -> float:
    """Inhomogeneous Besov norm: ``l^q`` over the low block and ``2^(js) ||P_j f||_p``."""
    _check_exponent("p", p)
    _check_exponent("q", q)
    return _lq(_besov_terms(f, s, p), q)


def _hom_levels(grid: TorusGrid) -> range:
    jlo = int(math.floor(math.log2(grid.k_min / (8.0 / 5.0))))
    return range(jlo, lp_max_level(grid) + 1)


def hom_besov(f: SpectralField, s: float, p: float = 2.0, q: float = 2.0) -> float:
    """Homogeneous Besov norm over all dyadic blocks ``j in Z`` meeting the grid."""
    _check_exponent("p", p)
    _check_exponent("q", q)
    _mean_check(f, s)
    r = f.grid.xi_abs
    terms = []
    for j in _hom_levels(f.grid):
        sym = lp_annulus(r / 2.0**j)
        terms.append(2.0 ** (s * j) * _block_norm(f.coeffs * sym, f.grid, p))
    return _lq(terms, q)


# ---------------------------------------------------------------------------
# Lipschitz norm


def _trig_eval(c: np.ndarray, grid: TorusGrid, x: np.ndarray):
    """Value, gradient and Hessian of a trigonometric polynomial at one point."""
    keep = np.ones(grid.shape, dtype=bool)
    for ny in grid.nyquist:
        keep &= ~ny
    xi = [a[keep] for a in grid.xi]
    cc = c[keep]
    ph = np.exp(1j * sum(a * b for a, b in zip(xi, x))) * cc
    val = ph.sum().real
    grad = np.array([(1j * a * ph).sum().real for a in xi])
    hess = np.array([[(-a * b * ph).sum().real for b in xi] for a in xi])
    return val, grad, hess


def _polish_max(c: np.ndarray, grid: TorusGrid, x0: np.ndarray, v0: float, iters: int = 8) -> float:
    """Newton refinement of ``max |h|`` starting from a sampled maximizer."""
    x = np.array(x0, dtype=float)
    best = abs(v0)
    sign = 1.0 if v0 >= 0 else -1.0
    for _ in range(iters):
        val, g, h = _trig_eval(c, grid, x)
        best = max(best, abs(val))
        try:
            step = np.linalg.solve(sign * h, -sign * g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or np.linalg.norm(step) > grid.period / grid.n:
            break
        x = x + step
        if np.linalg.norm(step) < 1e-14 * grid.period:
            break
    val, _, _ = _trig_eval(c, grid, x)
    return max(best, abs(val))


def lipschitz(f: SpectralField, oversample: int = 8) -> float:
    """``max(||f||_inf, max_i ||d_i f||_inf)``.

    Maxima are located on a refined grid and polished by Newton iteration on
    the trigonometric interpolant.
    """
    grid = f.grid
    m = grid.n * oversample
    fine_h = grid.period / m
    best = 0.0
    comps = [f.coeffs] + [f.coeffs * np.where(grid.nyquist[i], 0.0, 1j * grid.xi[i]) for i in range(grid.dim)]
    for c in comps:
        if not np.any(c):
            continue
        vals = padded_samples(c, grid, m)
        idx = np.unravel_index(int(np.argmax(np.abs(vals))), vals.shape)
        x0 = np.array(idx, dtype=float) * fine_h
        best = max(best, _polish_max(c, grid, x0, float(vals[idx])))
    return best


def norm(f: SpectralField, spec) -> float:
    """Evaluate ``f`` in the space described by ``spec``."""
    if isinstance(spec, Lebesgue):
        return lebesgue(f, spec.p)
    if isinstance(spec, Sobolev):
        return sobolev(f, spec.s)
    if isinstance(spec, HomSobolev):
        return hom_sobolev(f, spec.s)
    if isinstance(spec, HomBesov):
        return hom_besov(f, spec.s, spec.p, spec.q)
    if isinstance(spec, Besov):
        return besov(f, spec.s, spec.p, spec.q)
    if isinstance(spec, LipschitzW1inf):
        return lipschitz(f, spec.oversample)
    raise TypeError(f"unknown norm spec {spec!r}")


# ---------------------------------------------------------------------------
# Time-dependent norms


@dataclass
class Trajectory:
    """Fields sampled at strictly increasing times on one grid."""

    times: np.ndarray
    fields: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.fields) != self.times.size:
            raise ValueError("times and fields must have matching lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.fields and any(fl.grid != self.fields[0].grid for fl in self.fields):
            raise ValueError("trajectory fields must share one grid")

    def __len__(self):
        return len(self.fields)

    def append(self, t: float, f: SpectralField) -> None:
        if self.times.size and t <= self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        if self.fields and f.grid != self.fields[0].grid:
            raise ValueError("trajectory fields must share one grid")
        self.times = np.append(self.times, t)
        self.fields.append(f)

    @property
    def final(self) -> SpectralField:
        return self.fields[-1]


def _time_norm(t: np.ndarray, a: np.ndarray, rho: float) -> float:
    if rho == math.inf:
        return float(a.max())
    return float(trapezoid(a**rho, t) ** (1.0 / rho))


def chemin_lerner_norm(traj: Trajectory, rho_t: float, spec: Besov) -> float:
    """Time norm taken inside each dyadic block before the ``l^q`` sum.

    Raises
    ------
    ValueError
        With fewer than two time samples.
    """
    if len(traj) < 2:
        raise ValueError("Chemin-Lerner norms need at least two time samples")
    _check_exponent("rho_t", rho_t)
    blocks = np.array([_besov_terms(f, spec.s, spec.p) for f in traj.fields])  # (T, J)
    per_block = [_time_norm(traj.times, blocks[:, j], rho_t) for j in range(blocks.shape[1])]
    return _lq(per_block, spec.q)
