"""Dirichlet-Neumann operator by Picard iteration in flattened coordinates.

With ``P = exp(z|nabla|) f`` the operator is ``G(f) g = |nabla| g + w(0)``,
where ``(w, v)`` is the fixed point of

    w = int_{-inf}^{z} exp(-(z - tau)|nabla|) (div Qb - |nabla| Qa) dtau
    v = exp(z|nabla|) g - int_{z}^{0} exp((z - tau)|nabla|) (w + Qa) dtau

and, with ``B = (|grad P|^2 - dz P) / (1 + dz P)``,

    Qa = (grad P . grad v - B (w + |nabla| v)) / (1 + B)
    Qb = (|nabla| v + w + Qa) grad P - (dz P) grad v.

Only horizontal derivatives are taken numerically; the vertical variable
enters through the exponential sweeps of :mod:`muskat.quadrature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import ModuleType

import numpy as np

from . import kernels as _kernels
from .errors import DegenerateJacobian, NoContraction
from .layers import LayeredField, VerticalGrid
from .quadrature import ExpQuadrature, build_quadrature
from .spectral import Gradient, SpectralField, TorusGrid, to_coeffs, to_samples

__all__ = [
    "DnOptions",
    "DnSolution",
    "ContractionProbe",
    "FixedPointDN",
    "default_vertical_grid",
    "compute_layers_B",
    "assemble_Qa",
    "assemble_Qb",
    "apply_Pi1",
    "apply_Pi2",
    "solve_dn",
    "dn_contraction_probe",
]


@dataclass(frozen=True)
class DnOptions:
    """Iteration controls.

    Parameters
    ----------
    max_iter : int
        Picard iterations before giving up.
    tol : float
        Relative residual target; the residual is normalized by ``||grad g||``.
    contraction_guard : float
        Residual ratio regarded as non-contracting.
    guard_window : int
        Consecutive non-contracting iterations that abort the solve.
    quadrature_order : int
        Interpolation degree of the vertical integrands.
    min_jacobian : float
        Smallest admissible value of ``1 + dz P``.
    """

    max_iter: int = 60
    tol: float = 1e-12
    contraction_guard: float = 0.9
    guard_window: int = 5
    quadrature_order: int = 1
    min_jacobian: float = 0.05

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("need max_iter >= 1 and tol > 0")
        if not 0 < self.contraction_guard:
            raise ValueError("contraction_guard must be positive")


@dataclass
class DnSolution:
    """Result of a converged solve."""

    g_f_g: SpectralField
    remainder: SpectralField
    w: LayeredField
    v: LayeredField
    iterations: int
    residual_history: list[float]
    converged: bool = True

    @property
    def ratios(self) -> np.ndarray:
        h = np.asarray(self.residual_history)
        with np.errstate(divide="ignore", invalid="ignore"):
            return h[1:] / h[:-1]


@dataclass
class ContractionProbe:
    ratio: float
    degenerate: bool = False
    numerator: float = 0.0
    denominator: float = 0.0


def default_vertical_grid(grid: TorusGrid, n_intervals: int = 200, ratio: float = 1.05) -> VerticalGrid:
    """Geometric levels with ``Z_max = 40 / k_min``."""
    return VerticalGrid.geometric(40.0 / grid.k_min, n_intervals, ratio)


# ---------------------------------------------------------------------------
# Engine: cached per (grid, vertical grid, quadrature order, kernels)


@dataclass
class _Geometry:
    P: np.ndarray  # (L, *g) coefficients
    px: list  # d arrays (L, 1, *g) samples of grad P
    pz: np.ndarray  # (L, 1, *g) samples of dz P
    b: np.ndarray  # (L, 1, *g) samples of B


class _Engine:
    def __init__(self, grid: TorusGrid, zgrid: VerticalGrid, order: int, kern: ModuleType):
        self.grid = grid
        self.zgrid = zgrid
        self.kern = kern
        self.kappa = grid.xi_abs
        self.ik = [Gradient(i).symbol(grid) for i in range(grid.dim)]
        # Products keep every mode except Nyquist; a 2/3 cut here breaks the
        # symmetry of the discrete operator for data near the band edge.
        self.mask = ~np.logical_or.reduce(grid.nyquist)
        self.quad: ExpQuadrature = build_quadrature(zgrid.z, self.kappa.ravel(), order)
        zc = zgrid.z.reshape((-1,) + (1,) * grid.dim)
        self.ext = np.exp(zc * self.kappa)

    # -- sweeps on arrays of shape (L, B, *g)
    def _sweep(self, F: np.ndarray, upward: bool) -> np.ndarray:
        L, B = F.shape[:2]
        flat = np.ascontiguousarray(F.reshape(L, B, -1))
        q = self.quad
        out = self.kern.exp_sweep(q.decay, q.w_up if upward else q.w_down, q.stencil, flat, upward)
        return np.asarray(out).reshape(F.shape)

    def geometry(self, fc: np.ndarray, min_jacobian: float) -> _Geometry:
        P = self.ext * fc
        px = [to_samples(ik * P, self.grid)[:, None] for ik in self.ik]
        pz = to_samples(self.kappa * P, self.grid)[:, None]
        jac = 1.0 + pz
        jmin = float(jac.min())
        if jmin <= min_jacobian:
            raise DegenerateJacobian(f"min(1 + dz P) = {jmin:.3g} <= {min_jacobian:g}")
        b = (sum(p * p for p in px) - pz) / jac
        return _Geometry(P, px, pz, b)

    def qa(self, geo: _Geometry, w: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Coefficients of Qa; inputs and output are (L, B, *g)."""
        return self.qa_qb(geo, w, v, need_qb=False)[0]

    def qb(self, geo: _Geometry, w: np.ndarray, v: np.ndarray, qa: np.ndarray) -> list:
        """Coefficients of the components of Qb for a given Qa."""
        g = self.grid
        vx = to_samples(np.stack([ik * v for ik in self.ik]), g)
        coef = to_samples(w + self.kappa * v + qa, g)
        return self._qb_from(geo, coef, vx)

    def _qb_from(self, geo: _Geometry, coef: np.ndarray, vx: np.ndarray) -> list:
        comps = np.stack([coef * p - geo.pz * vx[i] for i, p in enumerate(geo.px)])
        return list(to_coeffs(comps, self.grid) * self.mask)

    def qa_qb(self, geo: _Geometry, w: np.ndarray, v: np.ndarray, need_qb: bool = True):
        """Qa and Qb with the horizontal transforms batched."""
        g = self.grid
        phys = to_samples(np.stack([w + self.kappa * v] + [ik * v for ik in self.ik]), g)
        s, vx = phys[0], phys[1:]
        dot = sum(p * vx[i] for i, p in enumerate(geo.px))
        qa = to_coeffs((dot - geo.b * s) / (1.0 + geo.b), g) * self.mask
        if not need_qb:
            return qa, None
        coef = s + to_samples(qa, g)
        return qa, self._qb_from(geo, coef, vx)

    def pi1(self, qa: np.ndarray, qb: list) -> np.ndarray:
        F = sum(ik * c for ik, c in zip(self.ik, qb)) - self.kappa * qa
        return self._sweep(F, upward=True)

    def pi2(self, w: np.ndarray, qa: np.ndarray) -> np.ndarray:
        return -self._sweep(w + qa, upward=False)

    def grad_l2(self, c: np.ndarray) -> np.ndarray:
        """L2 norm of the gradient over the trailing grid axes."""
        axes = tuple(range(c.ndim - self.grid.dim, c.ndim))
        return np.sqrt(self.grid.volume * np.sum((self.kappa**2) * np.abs(c) ** 2, axis=axes))

    def l2(self, c: np.ndarray) -> np.ndarray:
        axes = tuple(range(c.ndim - self.grid.dim, c.ndim))
        return np.sqrt(self.grid.volume * np.sum(np.abs(c) ** 2, axis=axes))

    def solve(self, geo: _Geometry, gc: np.ndarray, opts: DnOptions):
        """Picard iteration for a batch ``gc`` of shape (B, *g)."""
        v0 = self.ext[:, None] * gc[None]
        w = np.zeros_like(v0)
        v = v0
        scale = self.grad_l2(gc)
        scale = np.where(scale > 0, scale, 1.0)
        history: list[float] = []
        bad = 0
        for it in range(1, opts.max_iter + 1):
            qa, qb = self.qa_qb(geo, w, v)
            w_new = self.pi1(qa, qb)
            v_new = v0 + self.pi2(w, qa)
            dw = self.l2(w_new - w)
            dv = self.grad_l2(v_new - v)
            res = float(np.max(np.sqrt(dw**2 + dv**2).max(axis=0) / scale))
            history.append(res)
            w, v = w_new, v_new
            if not math.isfinite(res):
                raise NoContraction("Picard residual is not finite")
            if res < opts.tol:
                return w, v, it, history
            if len(history) > 1 and history[-2] > 0 and res / history[-2] > opts.contraction_guard:
                bad += 1
                if bad >= opts.guard_window:
                    raise NoContraction(
                        f"residual ratio above {opts.contraction_guard} for {bad} consecutive iterations"
                    )
            else:
                bad = 0
        raise NoContraction(f"no convergence to {opts.tol:g} in {opts.max_iter} iterations (last {history[-1]:.3e})")


_ENGINES: dict = {}


def _engine(grid: TorusGrid, zgrid: VerticalGrid, order: int, kern: ModuleType | None = None) -> _Engine:
    kern = kern or _kernels.get_backend()
    key = (grid, id(zgrid), order, kern.__name__)
    eng = _ENGINES.get(key)
    if eng is None or eng.zgrid is not zgrid:
        if len(_ENGINES) > 16:
            _ENGINES.clear()
        eng = _ENGINES[key] = _Engine(grid, zgrid, order, kern)
    return eng


# ---------------------------------------------------------------------------
# Backend object


class FixedPointDN:
    """Dirichlet-Neumann backend based on the Picard expansion.

    Parameters
    ----------
    zgrid : VerticalGrid, optional
        Vertical levels; defaults to :func:`default_vertical_grid` per torus grid.
    options : DnOptions, optional
    kernels : str, optional
        ``"compiled"`` or ``"python"``; defaults to the active backend.
    """

    name = "fixed_point"

    def __init__(self, zgrid: VerticalGrid | None = None, options: DnOptions | None = None,
                 kernels: str | None = None):
        self.zgrid = zgrid
        self.options = options or DnOptions()
        self.kernels = _kernels.get_backend(kernels)
        self._default_z: dict = {}
        self.last_iterations: list[int] = []

    def vertical_grid(self, grid: TorusGrid) -> VerticalGrid:
        if self.zgrid is not None:
            return self.zgrid
        if grid not in self._default_z:
            self._default_z[grid] = default_vertical_grid(grid)
        return self._default_z[grid]

    def _setup(self, f: SpectralField):
        zgrid = self.vertical_grid(f.grid)
        zgrid.check_depth(f.grid)
        eng = _engine(f.grid, zgrid, self.options.quadrature_order, self.kernels)
        geo = eng.geometry(f.coeffs, self.options.min_jacobian)
        return eng, geo

    def solve(self, f: SpectralField, g: SpectralField) -> DnSolution:
        eng, geo = self._setup(f)
        w, v, it, hist = eng.solve(geo, g.coeffs[None], self.options)
        self.last_iterations = [it]
        zg = eng.zgrid
        rem = SpectralField(f.grid, w[-1, 0].copy())
        lin = SpectralField(f.grid, eng.kappa * g.coeffs)
        return DnSolution(
            g_f_g=lin + rem,
            remainder=rem,
            w=LayeredField(f.grid, zg, w[:, 0]),
            v=LayeredField(f.grid, zg, v[:, 0]),
            iterations=it,
            residual_history=hist,
        )

    def apply(self, f: SpectralField, g: SpectralField) -> SpectralField:
        return self.apply_batch(f, [g])[0]

    def apply_batch(self, f: SpectralField, gs) -> list[SpectralField]:
        """``G(f) g`` for several data sharing one geometry setup."""
        eng, geo = self._setup(f)
        gc = np.stack([g.coeffs for g in gs])
        w, _, it, _ = eng.solve(geo, gc, self.options)
        self.last_iterations = [it]
        return [SpectralField(f.grid, eng.kappa * gc[b] + w[-1, b]) for b in range(len(gs))]

    def remainder(self, f: SpectralField, g: SpectralField) -> SpectralField:
        return self.solve(f, g).remainder


# ---------------------------------------------------------------------------
# Stand-alone operations on layered fields


def _eng_for(grid: TorusGrid, zgrid: VerticalGrid) -> _Engine:
    return _engine(grid, zgrid, 1)


def compute_layers_B(f: SpectralField, z: VerticalGrid, min_jacobian: float = 0.05):
    """Harmonic extension ``P`` of ``f`` and the coefficient ``B``.

    Raises
    ------
    DegenerateJacobian
        If ``min(1 + dz P) <= min_jacobian``.
    """
    eng = _eng_for(f.grid, z)
    geo = eng.geometry(f.coeffs, min_jacobian)
    b = to_coeffs(geo.b[:, 0], f.grid)
    return LayeredField(f.grid, z, geo.P), LayeredField(f.grid, z, b)


def _geometry_from_layers(P: LayeredField, B: LayeredField) -> _Geometry:
    eng = _eng_for(P.grid, P.zgrid)
    px = [to_samples(ik * P.coeffs, P.grid)[:, None] for ik in eng.ik]
    pz = to_samples(eng.kappa * P.coeffs, P.grid)[:, None]
    return _Geometry(P.coeffs, px, pz, to_samples(B.coeffs, P.grid)[:, None])


def assemble_Qa(w: LayeredField, v: LayeredField, P: LayeredField, B: LayeredField) -> LayeredField:
    eng = _eng_for(P.grid, P.zgrid)
    geo = _geometry_from_layers(P, B)
    qa = eng.qa(geo, w.coeffs[:, None], v.coeffs[:, None])
    return LayeredField(P.grid, P.zgrid, qa[:, 0])


def assemble_Qb(w: LayeredField, v: LayeredField, P: LayeredField, Qa: LayeredField) -> LayeredField:
    """Vector field Qb with components on axis 1."""
    eng = _eng_for(P.grid, P.zgrid)
    geo = _geometry_from_layers(P, LayeredField.zeros(P.grid, P.zgrid))
    qb = eng.qb(geo, w.coeffs[:, None], v.coeffs[:, None], Qa.coeffs[:, None])
    return LayeredField(P.grid, P.zgrid, np.stack([c[:, 0] for c in qb], axis=1))


def apply_Pi1(Qa: LayeredField, Qb: LayeredField) -> LayeredField:
    eng = _eng_for(Qa.grid, Qa.zgrid)
    qb = [Qb.coeffs[:, i][:, None] for i in range(Qa.grid.dim)]
    out = eng.pi1(Qa.coeffs[:, None], qb)
    return LayeredField(Qa.grid, Qa.zgrid, out[:, 0])


def apply_Pi2(w: LayeredField, Qa: LayeredField) -> LayeredField:
    eng = _eng_for(Qa.grid, Qa.zgrid)
    out = eng.pi2(w.coeffs[:, None], Qa.coeffs[:, None])
    return LayeredField(Qa.grid, Qa.zgrid, out[:, 0])


def solve_dn(f: SpectralField, g: SpectralField, z: VerticalGrid | None = None,
             opts: DnOptions | None = None, kernels: str | None = None) -> DnSolution:
    """Converged ``G(f) g`` with iteration telemetry.

    Raises
    ------
    DegenerateJacobian, NoContraction
    """
    return FixedPointDN(z, opts, kernels).solve(f, g)


def dn_contraction_probe(f1: SpectralField, f2: SpectralField, g: SpectralField,
                         z: VerticalGrid | None = None, s: float = 2.0, sigma: float = 2.0,
                         opts: DnOptions | None = None) -> ContractionProbe:
    """Lipschitz ratio of the remainder in ``f``.

    ``ratio = ||R(f1;g) - R(f2;g)||_{H^(sigma-1)} / (||f1 - f2||_{H^s} ||g||_{H^sigma})``;
    coincident data give ``ratio = 0`` with ``degenerate=True``.
    """
    from .norms import sobolev

    den = sobolev(f1 - f2, s) * sobolev(g, sigma)
    if den == 0.0:
        return ContractionProbe(0.0, True, 0.0, 0.0)
    backend = FixedPointDN(z, opts)
    r1 = backend.remainder(f1, g)
    r2 = backend.remainder(f2, g)
    num = sobolev(r1 - r2, sigma - 1.0)
    return ContractionProbe(num / den, False, num, den)
