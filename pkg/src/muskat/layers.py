"""Vertical grids and fields on torus x vertical-level products."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralField, TorusGrid, to_samples

__all__ = ["VerticalGrid", "LayeredField"]


@dataclass(frozen=True, eq=False)
class VerticalGrid:
    """Strictly ascending levels in ``[-Z_max, 0]`` ending at ``z = 0``.

    Parameters
    ----------
    z : ndarray
        Level positions.
    ratio : float, optional
        Spacing growth factor away from ``z = 0`` when built geometrically.
    """

    z: np.ndarray
    ratio: float | None = field(default=None)

    def __post_init__(self):
        z = np.ascontiguousarray(np.asarray(self.z, dtype=float))
        if z.ndim != 1 or z.size < 2:
            raise ValueError("need at least two vertical levels")
        if np.any(np.diff(z) <= 0):
            raise ValueError("vertical levels must be strictly ascending")
        if z[-1] != 0.0:
            raise ValueError("the last vertical level must be z = 0")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def geometric(cls, z_max: float = 40.0, n_intervals: int = 200, ratio: float = 1.05) -> "VerticalGrid":
        """Levels refined toward ``z = 0``: spacing grows by ``ratio`` per interval."""
        if z_max <= 0 or n_intervals < 1 or ratio < 1:
            raise ValueError("need z_max > 0, n_intervals >= 1 and ratio >= 1")
        if ratio == 1.0:
            return cls.uniform(z_max, n_intervals)
        h = (ratio - 1.0) / (ratio**n_intervals - 1.0) * z_max * ratio ** np.arange(n_intervals)
        z = -np.concatenate([[0.0], np.cumsum(h)])[::-1]
        z[0] = -z_max
        return cls(z, ratio)

    @classmethod
    def uniform(cls, z_max: float, n_intervals: int) -> "VerticalGrid":
        return cls(np.linspace(-z_max, 0.0, n_intervals + 1), 1.0)

    def refined(self) -> "VerticalGrid":
        """Every interval split in two, keeping the geometric profile."""
        if self.ratio is not None and self.ratio != 1.0:
            return VerticalGrid.geometric(self.z_max, 2 * self.n_intervals, float(np.sqrt(self.ratio)))
        mid = 0.5 * (self.z[1:] + self.z[:-1])
        return VerticalGrid(np.sort(np.concatenate([self.z, mid])), self.ratio)

    @property
    def z_max(self) -> float:
        return float(-self.z[0])

    @property
    def n_levels(self) -> int:
        return self.z.size

    @property
    def n_intervals(self) -> int:
        return self.z.size - 1

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.z)

    def check_depth(self, grid: TorusGrid) -> None:
        """Require ``Z_max >= 20 / k_min`` so the truncated tail is negligible."""
        if self.z_max * grid.k_min < 20.0 - 1e-12:
            raise ValueError(
                f"vertical extent {self.z_max:g} is below 20/k_min = {20.0 / grid.k_min:g}"
            )

    def __len__(self):
        return self.z.size


class LayeredField:
    """Coefficients on every level of a :class:`VerticalGrid`.

    Parameters
    ----------
    grid : TorusGrid
    zgrid : VerticalGrid
    coeffs : ndarray
        Shape ``(n_levels, *components, *grid.shape)``; vector fields carry
        one component axis.
    """

    __slots__ = ("grid", "zgrid", "coeffs")

    def __init__(self, grid: TorusGrid, zgrid: VerticalGrid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[0] != zgrid.n_levels or coeffs.shape[coeffs.ndim - grid.dim :] != grid.shape:
            raise ValueError(f"layer array shape {coeffs.shape} is inconsistent with the grids")
        self.grid = grid
        self.zgrid = zgrid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid: TorusGrid, zgrid: VerticalGrid, components: tuple[int, ...] = ()) -> "LayeredField":
        return cls(grid, zgrid, np.zeros((zgrid.n_levels,) + components + grid.shape, dtype=complex))

    @property
    def z(self) -> np.ndarray:
        return self.zgrid.z

    @property
    def components(self) -> tuple[int, ...]:
        return self.coeffs.shape[1 : self.coeffs.ndim - self.grid.dim]

    def level(self, i: int, component: int | None = None) -> SpectralField:
        c = self.coeffs[i]
        if component is not None:
            c = c[component]
        return SpectralField(self.grid, c)

    @property
    def top(self) -> SpectralField:
        """Scalar layer at ``z = 0``."""
        return self.level(-1)

    def samples(self) -> np.ndarray:
        return to_samples(self.coeffs, self.grid)

    def __add__(self, other: "LayeredField") -> "LayeredField":
        return LayeredField(self.grid, self.zgrid, self.coeffs + other.coeffs)

    def __sub__(self, other: "LayeredField") -> "LayeredField":
        return LayeredField(self.grid, self.zgrid, self.coeffs - other.coeffs)

    def __repr__(self):
        return f"LayeredField(levels={self.zgrid.n_levels}, components={self.components}, n={self.grid.n})"
