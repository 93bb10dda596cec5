"""Torus grids, spectral transforms and Fourier multipliers.

Coefficients use the unit-amplitude convention

    f(x) = sum_k fhat(k) exp(i xi_k . x),    xi_k = 2 pi k / L,

so ``cos x`` has ``fhat(+-1) = 1/2``.  Parseval then reads

    int_T |f|^2 dx = L^d sum_k |fhat(k)|^2,

and every L2 quantity in the package carries that single ``L^d`` factor.
Coefficient arrays are stored in FFT order (``numpy.fft.fftfreq``) along the
trailing ``d`` axes; any leading axes are batch axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "TorusGrid",
    "SpectralField",
    "Multiplier",
    "AbsNabla",
    "AbsNablaPow",
    "PoissonSemigroup",
    "SharpCutoff",
    "LPBlock",
    "LPLow",
    "OperatorA",
    "SemigroupA",
    "Gradient",
    "Laplacian",
    "forward_transform",
    "inverse_transform",
    "to_coeffs",
    "to_samples",
    "apply_multiplier",
    "lp_bump",
    "lp_annulus",
    "lp_project",
    "lp_blocks",
    "lp_max_level",
    "fourier_truncate",
    "dealias",
    "poisson_extend",
    "padded_samples",
    "from_padded_samples",
]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus ``[0, L)^d``.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    n : int
        Points per dimension, a power of two not smaller than 8.
    period : float
        Period ``L`` in every direction.
    """

    dim: int = 1
    n: int = 64
    period: float = 2.0 * math.pi

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def points_per_dim(self) -> int:
        return self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        """Trailing axes that hold the spatial grid."""
        return tuple(range(-self.dim, 0))

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        return self.period**self.dim

    @property
    def k_min(self) -> float:
        """Smallest nonzero frequency magnitude."""
        return 2.0 * math.pi / self.period

    @property
    def dealias_radius(self) -> float:
        """Radius of the 2/3-rule band, ``(2/3)(N/2)(2 pi / L)``."""
        return (self.n / 3.0) * self.k_min

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis, broadcast to the full grid."""
        k1 = np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64)
        return tuple(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Physical frequencies ``2 pi k / L`` per axis."""
        return tuple(self.k_min * k.astype(float) for k in self.wavenumbers)

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.xi))

    @cached_property
    def nyquist(self) -> tuple[np.ndarray, ...]:
        """Per-axis masks of the unpaired Nyquist wavenumber."""
        return tuple(np.abs(k) == self.n // 2 for k in self.wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return self.xi_abs <= self.dealias_radius * (1 + 1e-12)

    @cached_property
    def points(self) -> tuple[np.ndarray, ...]:
        x1 = self.period * np.arange(self.n) / self.n
        return tuple(np.meshgrid(*([x1] * self.dim), indexing="ij"))


def to_coeffs(samples: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Forward transform along the trailing grid axes."""
    return sfft.fftn(samples, axes=grid.axes) / grid.size


def to_samples(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Inverse transform along the trailing grid axes, real part."""
    return sfft.ifftn(coeffs, axes=grid.axes).real * grid.size


class SpectralField:
    """Real function on the torus stored as Fourier coefficients.

    Parameters
    ----------
    grid : TorusGrid
    coeffs : ndarray
        Complex array of shape ``grid.shape`` in FFT order.
    """

    __slots__ = ("grid", "coeffs")
    __array_priority__ = 100

    def __init__(self, grid: TorusGrid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != grid.shape:
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_samples(cls, grid: TorusGrid, samples) -> "SpectralField":
        return forward_transform(samples, grid)

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable[..., np.ndarray]) -> "SpectralField":
        """Sample ``func(*points)`` on the grid and transform."""
        return forward_transform(np.broadcast_to(func(*grid.points), grid.shape), grid)

    def samples(self) -> np.ndarray:
        return inverse_transform(self)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    @property
    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.grid.dim].real)

    def inner(self, other: "SpectralField") -> float:
        """L2 pairing ``int f g dx``."""
        _check_same_grid(self, other)
        return float(self.grid.volume * np.vdot(other.coeffs, self.coeffs).real)

    def l2(self) -> float:
        return float(math.sqrt(self.grid.volume) * np.linalg.norm(self.coeffs))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        flipped = np.conj(np.roll(np.flip(self.coeffs, self.grid.axes), 1, self.grid.axes))
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        return bool(np.abs(self.coeffs - flipped).max() <= tol * scale)

    def in_band(self, radius: float) -> bool:
        """True when every coefficient outside ``|xi| <= radius`` is exactly zero."""
        outside = self.grid.xi_abs > radius * (1 + 1e-12)
        return bool(not np.any(self.coeffs[outside]))

    def __add__(self, other):
        if isinstance(other, SpectralField):
            _check_same_grid(self, other)
            return SpectralField(self.grid, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            _check_same_grid(self, other)
            return SpectralField(self.grid, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if np.isscalar(scalar) and np.isrealobj(scalar):
            return SpectralField(self.grid, self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if np.isscalar(scalar) and np.isrealobj(scalar):
            return SpectralField(self.grid, self.coeffs / scalar)
        return NotImplemented

    def __repr__(self):
        return f"SpectralField(dim={self.grid.dim}, n={self.grid.n}, l2={self.l2():.3e})"


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def forward_transform(samples, grid: TorusGrid) -> SpectralField:
    """Transform real grid samples to a :class:`SpectralField`.

    Raises
    ------
    ValueError
        If the samples do not match the grid.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size != grid.size:
        raise ValueError(f"expected {grid.size} samples, got {samples.size}")
    return SpectralField(grid, to_coeffs(samples.reshape(grid.shape), grid))


def inverse_transform(field: SpectralField) -> np.ndarray:
    return to_samples(field.coeffs, field.grid)


# ---------------------------------------------------------------------------
# Littlewood-Paley profile

_PHI_IN = 5.0 / 4.0
_PHI_OUT = 8.0 / 5.0


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step, 0 for t <= 0 and 1 for t >= 1."""
    t = np.asarray(t, dtype=float)

    def h(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a = h(t)
    b = h(1.0 - t)
    return a / (a + b)


def lp_bump(r) -> np.ndarray:
    """Radial bump ``phi``: 1 on ``r <= 5/4`` and 0 on ``r >= 8/5``."""
    r = np.abs(np.asarray(r, dtype=float))
    return _smooth_step((_PHI_OUT - r) / (_PHI_OUT - _PHI_IN))


def lp_annulus(r) -> np.ndarray:
    """Annular profile ``psi(r) = phi(r) - phi(2 r)``."""
    r = np.asarray(r, dtype=float)
    return lp_bump(r) - lp_bump(2.0 * r)


# ---------------------------------------------------------------------------
# Multipliers


class Multiplier:
    """Fourier multiplier; subclasses supply :meth:`symbol`."""

    def symbol(self, grid: TorusGrid) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, field: SpectralField) -> SpectralField:
        return apply_multiplier(field, self)


@dataclass(frozen=True)
class AbsNabla(Multiplier):
    """``|xi|``."""

    def symbol(self, grid):
        return grid.xi_abs


@dataclass(frozen=True)
class AbsNablaPow(Multiplier):
    """``|xi|^s``, with the zero mode set to 0 for ``s != 0``."""

    s: float

    def symbol(self, grid):
        if self.s == 0:
            return np.ones(grid.shape)
        r = grid.xi_abs
        out = np.zeros(grid.shape)
        nz = r > 0
        out[nz] = r[nz] ** self.s
        return out


@dataclass(frozen=True)
class PoissonSemigroup(Multiplier):
    """``exp(z |xi|)`` for ``z <= 0``."""

    z: float

    def __post_init__(self):
        if self.z > 0:
            raise ValueError(f"Poisson semigroup needs z <= 0, got {self.z}")

    def symbol(self, grid):
        return np.exp(self.z * grid.xi_abs)


@dataclass(frozen=True)
class SharpCutoff(Multiplier):
    """Indicator of ``|xi| <= R``."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"cutoff radius must be positive, got {self.radius}")

    def symbol(self, grid):
        return (grid.xi_abs <= self.radius * (1 + 1e-12)).astype(float)


@dataclass(frozen=True)
class LPBlock(Multiplier):
    """Dyadic block ``psi(2^-j xi)``; ``j = -1`` is the low block."""

    j: int

    def __post_init__(self):
        if self.j < -1:
            raise ValueError(f"block index must be >= -1, got {self.j}")

    def symbol(self, grid):
        if self.j == -1:
            return LPLow().symbol(grid)
        return lp_annulus(grid.xi_abs / 2.0**self.j)


@dataclass(frozen=True)
class LPLow(Multiplier):
    """Low-frequency block ``phi(2 xi)`` completing the dyadic partition."""

    def symbol(self, grid):
        return lp_bump(2.0 * grid.xi_abs)


@dataclass(frozen=True)
class OperatorA(Multiplier):
    """``|xi| (c0 + c2 |xi|^2)``; the defaults give ``|xi|(1 + |xi|^2)``."""

    c0: float = 1.0
    c2: float = 1.0

    def symbol(self, grid):
        r = grid.xi_abs
        return r * (self.c0 + self.c2 * r**2)


@dataclass(frozen=True)
class SemigroupA(Multiplier):
    """``exp(-t |xi| (c0 + c2 |xi|^2))`` for ``t >= 0``."""

    t: float
    c0: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"semigroup time must be >= 0, got {self.t}")

    def symbol(self, grid):
        return np.exp(-self.t * OperatorA(self.c0, self.c2).symbol(grid))


@dataclass(frozen=True)
class Gradient(Multiplier):
    """``i xi_i``; the unpaired Nyquist mode is dropped to keep the output real."""

    i: int = 0

    def symbol(self, grid):
        if not 0 <= self.i < grid.dim:
            raise ValueError(f"gradient component {self.i} out of range")
        return np.where(grid.nyquist[self.i], 0.0, 1j * grid.xi[self.i])


@dataclass(frozen=True)
class Laplacian(Multiplier):
    """``-|xi|^2``."""

    def symbol(self, grid):
        return -(grid.xi_abs**2)


def apply_multiplier(field: SpectralField, m: Multiplier) -> SpectralField:
    return SpectralField(field.grid, field.coeffs * m.symbol(field.grid))


# ---------------------------------------------------------------------------
# Projections


def lp_max_level(grid: TorusGrid) -> int:
    """Largest block index meeting the frequencies of the grid."""
    rmax = float(grid.xi_abs.max())
    return max(0, int(math.ceil(math.log2(rmax / (5.0 / 8.0)))))


def lp_project(field: SpectralField, j: int) -> SpectralField:
    return apply_multiplier(field, LPBlock(j))


def lp_blocks(field: SpectralField) -> dict[int, SpectralField]:
    """All nonempty dyadic blocks keyed by ``j >= -1``; they sum to ``field``."""
    return {j: lp_project(field, j) for j in range(-1, lp_max_level(field.grid) + 1)}


def fourier_truncate(field: SpectralField, radius: float) -> SpectralField:
    """Sharp cutoff ``S_R``."""
    return apply_multiplier(field, SharpCutoff(radius))


def dealias(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Zero coefficients outside the 2/3-rule band (any leading batch axes)."""
    return coeffs * grid.dealias_mask


def poisson_extend(f: SpectralField, z_levels):
    """Harmonic extension ``exp(z |nabla|) f`` on the given levels.

    Returns
    -------
    LayeredField
    """
    from .layers import LayeredField, VerticalGrid

    zgrid = z_levels if isinstance(z_levels, VerticalGrid) else VerticalGrid(np.asarray(z_levels, float))
    z = zgrid.z.reshape((-1,) + (1,) * f.grid.dim)
    return LayeredField(f.grid, zgrid, np.exp(z * f.grid.xi_abs) * f.coeffs)


# ---------------------------------------------------------------------------
# Padded products


def _pad_index(n: int, m: int) -> np.ndarray:
    k = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
    k[np.abs(k) == n // 2] = 0  # Nyquist handled by the caller
    return np.mod(k, m)


def padded_samples(coeffs: np.ndarray, grid: TorusGrid, m: int) -> np.ndarray:
    """Evaluate coefficients on a refined ``m^d`` grid (``m >= n``).

    The unpaired Nyquist coefficient is dropped so the result stays real.
    """
    n = grid.n
    lead = coeffs.shape[: coeffs.ndim - grid.dim]
    big = np.zeros(lead + (m,) * grid.dim, dtype=complex)
    idx = _pad_index(n, m)
    keep = np.abs(np.fft.fftfreq(n, 1.0 / n)) < n / 2
    sel = np.ix_(*([idx[keep]] * grid.dim))
    src = np.ix_(*([np.nonzero(keep)[0]] * grid.dim))
    big[(Ellipsis,) + sel] = coeffs[(Ellipsis,) + src]
    return sfft.ifftn(big, axes=grid.axes).real * m**grid.dim


def from_padded_samples(samples: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Inverse of :func:`padded_samples`: project refined samples onto grid modes."""
    n = grid.n
    m = samples.shape[-1]
    big = sfft.fftn(samples, axes=grid.axes) / m**grid.dim
    idx = _pad_index(n, m)
    keep = np.abs(np.fft.fftfreq(n, 1.0 / n)) < n / 2
    out = np.zeros(samples.shape[: samples.ndim - grid.dim] + grid.shape, dtype=complex)
    sel = np.ix_(*([idx[keep]] * grid.dim))
    dst = np.ix_(*([np.nonzero(keep)[0]] * grid.dim))
    out[(Ellipsis,) + dst] = big[(Ellipsis,) + sel]
    return out
