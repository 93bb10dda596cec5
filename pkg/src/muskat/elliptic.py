"""Dirichlet-Neumann operator from the boundary-straightened elliptic problem.

In the coordinates ``y = f(x) + z`` the harmonic extension of ``g`` solves

    div_{x,z}(A grad_{x,z} v) = 0,   A = [[I, -grad f], [-grad f^T, 1 + |grad f|^2]],

on ``-D < z < 0`` with ``v(x, 0) = g``, which expands to

    Lap_x v + (1 + |grad f|^2) v_zz - 2 grad f . grad v_z - (Lap f) v_z = 0.

The discretization is spectral in ``x`` and second-order centered in ``z``.
The bottom is closed with the flat-strip condition ``v_z = |xi| v`` per mode;
the mean mode carries zero net flux.  The linear system is solved by
BiCGSTAB preconditioned with the flat operator, which is tridiagonal per mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, bicgstab

from . import kernels as _kernels
from .errors import NonConvergence
from .geometry import mean_curvature
from .spectral import Gradient, SpectralField, TorusGrid, to_coeffs, to_samples

__all__ = [
    "StripGrid",
    "CoefficientField",
    "EllipticSolution",
    "PressureField",
    "EllipticDN",
    "straighten_coefficients",
    "solve_straightened",
    "dn_trace",
    "hydraulic_pressure",
    "lyapunov_J",
]


@dataclass(frozen=True)
class StripGrid:
    """Torus grid times uniform levels on ``[-D, 0]``.

    Parameters
    ----------
    x : TorusGrid
    depth : float
        Strip depth ``D``; at least ``6 / k_min``.
    nz : int
        Number of vertical intervals, at least 100.
    """

    x: TorusGrid
    depth: float = 8.0
    nz: int = 400

    def __post_init__(self):
        if self.nz < 100:
            raise ValueError(f"nz must be >= 100, got {self.nz}")
        if self.depth * self.x.k_min < 6.0 - 1e-12:
            raise ValueError(f"depth must be >= 6/k_min = {6.0 / self.x.k_min:g}")

    @property
    def dz(self) -> float:
        return self.depth / self.nz

    @property
    def z(self) -> np.ndarray:
        return np.linspace(-self.depth, 0.0, self.nz + 1)

    def refined(self) -> "StripGrid":
        return StripGrid(self.x, self.depth, 2 * self.nz)


@dataclass
class CoefficientField:
    """Samples of the straightened coefficient ``A(x)``.

    Attributes
    ----------
    slope : ndarray
        ``grad f`` with shape ``(d, *grid)``; the off-diagonal block is ``-slope``.
    a_zz : ndarray
        ``1 + |grad f|^2``.
    lap_f : ndarray
        ``Lap f``, the drift coefficient of the non-divergence form.
    """

    slope: np.ndarray
    a_zz: np.ndarray
    lap_f: np.ndarray

    def matrix(self) -> np.ndarray:
        """Full symmetric matrix per grid point, shape ``(*grid, d+1, d+1)``."""
        d = self.slope.shape[0]
        shp = self.a_zz.shape
        A = np.zeros(shp + (d + 1, d + 1))
        for i in range(d):
            A[..., i, i] = 1.0
            A[..., i, d] = -self.slope[i]
            A[..., d, i] = -self.slope[i]
        A[..., d, d] = self.a_zz
        return A

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix()).min())


def straighten_coefficients(f: SpectralField) -> CoefficientField:
    grid = f.grid
    slope = np.stack([to_samples(Gradient(i).symbol(grid) * f.coeffs, grid) for i in range(grid.dim)])
    lap = to_samples(-(grid.xi_abs**2) * f.coeffs, grid)
    return CoefficientField(slope, 1.0 + np.sum(slope**2, axis=0), lap)


@dataclass
class EllipticSolution:
    """Discrete harmonic extension on the strip.

    ``v`` holds samples on all ``nz + 1`` levels, bottom first; the last level
    is the Dirichlet data.
    """

    strip: StripGrid
    v: np.ndarray
    dn_trace: SpectralField
    iterations: int
    residual: float
    tol: float
    coefficients: CoefficientField
    _pressure: "PressureField | None" = None

    @property
    def pressure_Q(self) -> np.ndarray | None:
        return None if self._pressure is None else self._pressure.Q


class _StripOperator:
    """Matrix-free residual and flat preconditioner for one (f, strip) pair."""

    def __init__(self, coef: CoefficientField, strip: StripGrid, kern):
        grid = strip.x
        self.grid = grid
        self.strip = strip
        self.coef = coef
        self.kern = kern
        self.kappa = grid.xi_abs
        self.k2 = grid.xi_abs**2
        self.ik = [Gradient(i).symbol(grid) for i in range(grid.dim)]
        self.mean_a = float(coef.a_zz.mean())
        dz = strip.dz
        nz = strip.nz
        self.shape = (nz,) + grid.shape
        self.n_unknowns = int(np.prod(self.shape))
        kap = self.kappa.ravel()
        M = kap.size
        diag = np.broadcast_to(-2.0 / dz**2 - kap**2, (nz, M)).copy()
        diag[0] = -2.0 / dz**2 - 2.0 * kap / dz - kap**2
        upper = np.full((nz, M), 1.0 / dz**2)
        upper[0] = 2.0 / dz**2
        mult = np.zeros((nz, M))
        dd = np.empty((nz, M))
        dd[0] = diag[0]
        for i in range(1, nz):
            mult[i] = (1.0 / dz**2) / dd[i - 1]
            dd[i] = diag[i] - mult[i] * upper[i - 1]
        self.mult, self.dd, self.upper = mult, dd, upper

    def residual_coeffs(self, V: np.ndarray, gc: np.ndarray) -> np.ndarray:
        """Discrete ``div(A grad v)`` on the unknown rows, as coefficients."""
        g = self.grid
        dz = self.strip.dz
        nz = self.strip.nz
        ext = np.empty((nz + 2,) + g.shape, dtype=complex)
        ext[1 : nz + 1] = V
        ext[nz + 1] = gc
        ghost = ext[2] - 2.0 * dz * self.kappa * ext[1]
        # mean mode: zero net flux of A grad v through the bottom
        vz_bottom = self.kappa * ext[1]
        flux_slope = sum(s * to_samples(ik * ext[1], g) for s, ik in zip(self.coef.slope, self.ik))
        gamma = (float(flux_slope.mean()) - float((self.coef.a_zz * to_samples(vz_bottom, g)).mean())) / self.mean_a
        ghost[(0,) * g.dim] = ext[2][(0,) * g.dim] - 2.0 * dz * gamma
        ext[0] = ghost
        dzv = (ext[2:] - ext[:-2]) / (2.0 * dz)
        dzzv = (ext[2:] - 2.0 * ext[1:-1] + ext[:-2]) / dz**2
        r = to_samples(-self.k2 * ext[1:-1], g) + self.coef.a_zz * to_samples(dzzv, g)
        r -= 2.0 * sum(s * to_samples(ik * dzv, g) for s, ik in zip(self.coef.slope, self.ik))
        r -= self.coef.lap_f * to_samples(dzv, g)
        return to_coeffs(r, g)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        V = to_coeffs(x.reshape(self.shape), self.grid)
        return to_samples(self.residual_coeffs(V, np.zeros(self.grid.shape, complex)), self.grid).ravel()

    def precondition(self, x: np.ndarray) -> np.ndarray:
        r = to_coeffs(x.reshape(self.shape), self.grid).reshape(self.strip.nz, 1, -1)
        r = np.ascontiguousarray(r)
        self.kern.thomas_solve(self.mult, self.dd, self.upper, r)
        return to_samples(r.reshape(self.shape), self.grid).ravel()


_D1_TOP = np.array([3.0, -16.0, 36.0, -48.0, 25.0]) / 12.0


def _dz_top(vc: np.ndarray, dz: float) -> np.ndarray:
    """One-sided fourth-order z-derivative at the last level."""
    return np.tensordot(_D1_TOP, vc[-5:], axes=(0, 0)) / dz


def solve_straightened(f: SpectralField, g: SpectralField, strip: StripGrid | None = None,
                       tol: float = 1e-12, max_iter: int = 500, kernels: str | None = None) -> EllipticSolution:
    """Solve the straightened problem with Dirichlet data ``g``.

    Raises
    ------
    NonConvergence
        If BiCGSTAB misses ``tol`` within ``max_iter`` iterations.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    strip = strip or StripGrid(f.grid)
    if strip.x != f.grid or g.grid != f.grid:
        raise ValueError("fields and strip must share one torus grid")
    coef = straighten_coefficients(f)
    op = _StripOperator(coef, strip, _kernels.get_backend(kernels))
    n = op.n_unknowns
    rhs = -to_samples(op.residual_coeffs(np.zeros(op.shape, complex), g.coeffs), f.grid).ravel()
    A = LinearOperator((n, n), matvec=op.matvec, dtype=float)
    M = LinearOperator((n, n), matvec=op.precondition, dtype=float)
    count = [0]

    def _cb(_):
        count[0] += 1

    rnorm = float(np.linalg.norm(rhs))
    if rnorm == 0.0:
        x = np.zeros(n)
    else:
        x, info = bicgstab(A, rhs, x0=M.matvec(rhs), M=M, rtol=tol, atol=0.0, maxiter=max_iter, callback=_cb)
        if info != 0:
            raise NonConvergence(f"BiCGSTAB stopped with info={info} after {count[0]} iterations")
    res = float(np.linalg.norm(A.matvec(x) - rhs) / rnorm) if rnorm else 0.0
    v = np.concatenate([x.reshape(op.shape), g.samples()[None]], axis=0)
    vc = to_coeffs(v, f.grid)
    vz = to_samples(_dz_top(vc, strip.dz), f.grid)
    grad_g = [to_samples(ik * g.coeffs, f.grid) for ik in op.ik]
    trace = coef.a_zz * vz - sum(s * gg for s, gg in zip(coef.slope, grad_g))
    return EllipticSolution(strip, v, SpectralField.from_samples(f.grid, trace), count[0], res, tol, coef)


def dn_trace(sol: EllipticSolution, f: SpectralField | None = None) -> SpectralField:
    """``(1 + |grad f|^2) v_z - grad f . grad g`` at ``z = 0``."""
    return sol.dn_trace


@dataclass
class PressureField:
    """Hydraulic pressure ``Q = v - (f + z)`` in straightened coordinates.

    Attributes
    ----------
    Q : ndarray
        Samples on the strip, bottom level first.
    neg_dy_Q : ndarray
        ``-dQ/dy = 1 - v_z`` on the strip.
    surface_neg_dy_Q : ndarray
        ``1 - v_z`` at the surface from the fourth-order one-sided derivative.
    """

    Q: np.ndarray
    neg_dy_Q: np.ndarray
    surface_neg_dy_Q: np.ndarray
    min_Q: float
    negative_pressure: bool


def hydraulic_pressure(sol: EllipticSolution, f: SpectralField) -> PressureField:
    """Pressure diagnostics for a solve whose Dirichlet data was ``f`` itself."""
    z = sol.strip.z.reshape((-1,) + (1,) * f.grid.dim)
    Q = sol.v - (f.samples()[None] + z)
    vz = np.gradient(sol.v, sol.strip.dz, axis=0, edge_order=2)
    vc = to_coeffs(sol.v, f.grid)
    top = 1.0 - to_samples(_dz_top(vc, sol.strip.dz), f.grid)
    neg = 1.0 - vz
    neg[-1] = top
    qmin = float(Q.min())
    out = PressureField(Q, neg, top, qmin, qmin < -10.0 * sol.tol)
    sol._pressure = out
    return out


def lyapunov_J(f: SpectralField, Gff: SpectralField) -> float:
    """``J(f) = int H(f) G(f) f dx`` by spectral quadrature."""
    return mean_curvature(f).total.inner(Gff)


class EllipticDN:
    """Dirichlet-Neumann backend built on :func:`solve_straightened`."""

    name = "elliptic"

    def __init__(self, depth: float = 8.0, nz: int = 400, tol: float = 1e-12, max_iter: int = 500,
                 kernels: str | None = None):
        self.depth = depth
        self.nz = nz
        self.tol = tol
        self.max_iter = max_iter
        self.kernels = kernels

    def strip(self, grid: TorusGrid) -> StripGrid:
        return StripGrid(grid, max(self.depth, 6.0 / grid.k_min), self.nz)

    def solve(self, f: SpectralField, g: SpectralField) -> EllipticSolution:
        return solve_straightened(f, g, self.strip(f.grid), self.tol, self.max_iter, self.kernels)

    def apply(self, f: SpectralField, g: SpectralField) -> SpectralField:
        return self.solve(f, g).dn_trace

    def apply_batch(self, f: SpectralField, gs) -> list[SpectralField]:
        return [self.apply(f, g) for g in gs]
