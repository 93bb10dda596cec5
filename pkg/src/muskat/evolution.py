"""Galerkin-truncated time integration of the one-phase Muskat equation.

The interface obeys

    d_t f = -(kappa/mu) S_R G(f) (rho g f + s H(f)),

which splits into the stiff diagonal part ``-A f`` with
``A = (kappa/mu) |xi| (rho g + s |xi|^2)`` and the nonlinear part

    N(f) = (kappa/mu) S_R [ s |nabla| div(grad f H1(grad f)) - R(f; rho g f + s H(f)) ],

where ``R(f; psi) = G(f) psi - |nabla| psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .errors import RegimeError, StepRejected
from .geometry import mean_curvature
from .norms import Trajectory
from .quadrature import phi_functions
from .spectral import SpectralField, TorusGrid

__all__ = [
    "MuskatParams",
    "StepperSpec",
    "EvolutionState",
    "RunResult",
    "Stepper",
    "rhs_full",
    "rhs_split",
    "step",
    "run",
    "SCHEMES",
    "NONLINEARITIES",
]

SCHEMES = ("ETD_exponential", "RK4_explicit", "IMEX_linear_implicit")
NONLINEARITIES = ("full", "linear_only", "no_remainder")

#: Real-axis stability limit of classical RK4.
RK4_STABILITY = 2.78


@dataclass(frozen=True)
class MuskatParams:
    """Physical constants and the Galerkin cutoff.

    Parameters
    ----------
    kappa, mu, rho, gravity : float
        Permeability, viscosity, density and gravity; all positive.
    surface_tension : float
        Nonnegative; zero gives the gravity-only problem.
    galerkin_R : float, optional
        Cutoff radius; ``None`` uses the 2/3-rule radius of the grid.
    """

    kappa: float = 1.0
    mu: float = 1.0
    rho: float = 1.0
    gravity: float = 1.0
    surface_tension: float = 1.0
    galerkin_R: float | None = None

    def __post_init__(self):
        for name in ("kappa", "mu", "rho", "gravity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.surface_tension < 0:
            raise ValueError("surface_tension must be nonnegative")
        if self.galerkin_R is not None and not self.galerkin_R > 0:
            raise ValueError("galerkin_R must be positive")

    @property
    def mobility(self) -> float:
        return self.kappa / self.mu

    @property
    def c0(self) -> float:
        """Coefficient of ``|xi|`` in ``A``."""
        return self.mobility * self.rho * self.gravity

    @property
    def c2(self) -> float:
        """Coefficient of ``|xi|^3`` in ``A``."""
        return self.mobility * self.surface_tension

    def cutoff(self, grid: TorusGrid) -> float:
        return grid.dealias_radius if self.galerkin_R is None else float(self.galerkin_R)

    def mask(self, grid: TorusGrid) -> np.ndarray:
        return grid.xi_abs <= self.cutoff(grid) * (1 + 1e-12)

    def linear_symbol(self, grid: TorusGrid) -> np.ndarray:
        r = grid.xi_abs
        return r * (self.c0 + self.c2 * r**2)

    def decay_rate(self, k: float) -> float:
        """Linear decay rate of a mode with ``|xi| = k``."""
        return k * (self.c0 + self.c2 * k * k)


@dataclass(frozen=True)
class StepperSpec:
    """Time-stepping configuration.

    Parameters
    ----------
    scheme : str
        One of :data:`SCHEMES`.
    dt : float
        Positive step.
    nonlinearity : str
        One of :data:`NONLINEARITIES`.
    etd_order : int
        1, 2 or 4 for the exponential scheme.
    lyapunov_tol : float or None
        Relative L2 growth that rejects a step; ``None`` disables the guard.
    """

    scheme: str = "ETD_exponential"
    dt: float = 1e-3
    nonlinearity: str = "full"
    etd_order: int = 4
    lyapunov_tol: float | None = 1e-10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.etd_order not in (1, 2, 4):
            raise ValueError("etd_order must be 1, 2 or 4")


@dataclass(frozen=True)
class EvolutionState:
    t: float
    f: SpectralField
    in_VR: bool = True


# ---------------------------------------------------------------------------
# Right-hand sides


def _project(f: SpectralField, p: MuskatParams) -> np.ndarray:
    return f.coeffs * p.mask(f.grid)


def _potential(fc: np.ndarray, grid: TorusGrid, p: MuskatParams):
    """``rho g f + s H(f)`` and the nonlinear curvature part."""
    f = SpectralField(grid, fc)
    if p.surface_tension == 0:
        return SpectralField(grid, p.rho * p.gravity * fc), np.zeros_like(fc)
    H = mean_curvature(f)
    psi = p.rho * p.gravity * fc + p.surface_tension * H.total.coeffs
    return SpectralField(grid, psi), H.nonlinear_part.coeffs


def rhs_full(f: SpectralField, p: MuskatParams, dn_backend) -> SpectralField:
    """``-(kappa/mu) S_R G(S_R f)(rho g S_R f + s H(S_R f))``."""
    grid = f.grid
    mask = p.mask(grid)
    fc = f.coeffs * mask
    if not np.any(fc):
        return SpectralField.zeros(grid)
    psi, _ = _potential(fc, grid, p)
    G = dn_backend.apply(SpectralField(grid, fc), psi)
    return SpectralField(grid, -p.mobility * G.coeffs * mask)


def _nonlinear(fc: np.ndarray, grid: TorusGrid, p: MuskatParams, dn_backend, mode: str) -> np.ndarray:
    mask = p.mask(grid)
    if mode == "linear_only" or not np.any(fc):
        return np.zeros_like(fc)
    psi, curv_nl = _potential(fc, grid, p)
    out = -p.surface_tension * grid.xi_abs * curv_nl
    if mode == "full":
        G = dn_backend.apply(SpectralField(grid, fc), psi)
        out = out - (G.coeffs - grid.xi_abs * psi.coeffs)
    return p.mobility * out * mask


def rhs_split(f: SpectralField, p: MuskatParams, dn_backend, nonlinearity: str = "full"):
    """Linear part ``-A S_R f`` and nonlinear part ``N(S_R f)``."""
    grid = f.grid
    fc = _project(f, p)
    lin = -p.linear_symbol(grid) * fc
    nl = _nonlinear(fc, grid, p, dn_backend, nonlinearity)
    return SpectralField(grid, lin), SpectralField(grid, nl)


# ---------------------------------------------------------------------------
# Steppers


class Stepper:
    """Precomputed single-step propagator for one grid, step and parameter set."""

    def __init__(self, grid: TorusGrid, spec: StepperSpec, p: MuskatParams, dn_backend):
        self.grid = grid
        self.spec = spec
        self.p = p
        self.dn = dn_backend
        self.mask = p.mask(grid)
        self.A = p.linear_symbol(grid) * self.mask
        h = spec.dt
        if spec.scheme == "RK4_explicit":
            amax = float(self.A.max())
            if h * amax > RK4_STABILITY:
                raise ValueError(
                    f"RK4 step {h:g} exceeds the stability limit {RK4_STABILITY / amax:.3g} on the Galerkin band"
                )
        elif spec.scheme == "ETD_exponential":
            z = -h * self.A
            ph = phi_functions(z, 3)
            half = phi_functions(z / 2.0, 1)
            self.E = ph[0]
            self.E2 = half[0]
            self.Q = 0.5 * h * half[1]
            self.phi1 = h * ph[1]
            self.phi2 = h * ph[2]
            self.f1 = h * (ph[1] - 3.0 * ph[2] + 4.0 * ph[3])
            self.f2 = h * (ph[2] - 2.0 * ph[3])
            self.f3 = h * (-ph[2] + 4.0 * ph[3])
        else:
            self.implicit = 1.0 / (1.0 + h * self.A)

    def nonlinear(self, fc: np.ndarray) -> np.ndarray:
        return _nonlinear(fc, self.grid, self.p, self.dn, self.spec.nonlinearity)

    def _advance(self, u: np.ndarray) -> np.ndarray:
        spec = self.spec
        h = spec.dt
        if spec.scheme == "ETD_exponential":
            if spec.nonlinearity == "linear_only":
                return self.E * u
            Nu = self.nonlinear(u)
            if spec.etd_order == 1:
                return self.E * u + self.phi1 * Nu
            if spec.etd_order == 2:
                a = self.E * u + self.phi1 * Nu
                return a + self.phi2 * (self.nonlinear(a) - Nu)
            a = self.E2 * u + self.Q * Nu
            Na = self.nonlinear(a)
            b = self.E2 * u + self.Q * Na
            Nb = self.nonlinear(b)
            c = self.E2 * a + self.Q * (2.0 * Nb - Nu)
            Nc = self.nonlinear(c)
            return self.E * u + self.f1 * Nu + 2.0 * self.f2 * (Na + Nb) + self.f3 * Nc
        if spec.scheme == "RK4_explicit":
            F = lambda x: -self.A * x + self.nonlinear(x)  # noqa: E731
            k1 = F(u)
            k2 = F(u + 0.5 * h * k1)
            k3 = F(u + 0.5 * h * k2)
            k4 = F(u + h * k3)
            return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return self.implicit * (u + h * self.nonlinear(u))

    def step(self, state: EvolutionState) -> EvolutionState:
        """Advance by one step.

        Raises
        ------
        StepRejected
            If the L2 norm grows beyond the Lyapunov guard.
        """
        u = state.f.coeffs * self.mask
        new = self._advance(u)
        tol = self.spec.lyapunov_tol
        if tol is not None:
            n0 = float(np.linalg.norm(u))
            n1 = float(np.linalg.norm(new))
            if n1 > n0 * (1.0 + tol):
                raise StepRejected(
                    f"L2 norm grew by {(n1 - n0) / n0:.3e} (relative) at t = {state.t:.6g}"
                )
        f = SpectralField(self.grid, new)
        return EvolutionState(state.t + self.spec.dt, f, f.in_band(self.p.cutoff(self.grid)))


def step(state: EvolutionState, spec: StepperSpec, p: MuskatParams, dn_backend) -> EvolutionState:
    """One step; builds the propagator on every call (use :class:`Stepper` in loops)."""
    return Stepper(state.f.grid, spec, p, dn_backend).step(state)


# ---------------------------------------------------------------------------
# Runs


@dataclass
class RunResult:
    """Saved trajectory, diagnostics rows and per-step L2 history.

    ``error`` holds the solver exception when the run stopped early.
    """

    trajectory: Trajectory
    rows: list = field(default_factory=list)
    step_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_l2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    all_in_band: bool = True
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def final(self) -> SpectralField:
        return self.trajectory.final


def run(f0: SpectralField, T: float, spec: StepperSpec, p: MuskatParams, dn_backend,
        callbacks: Iterable[Callable[[EvolutionState], None]] = (), save_every: int = 1,
        record: bool = True, s: float = 4.0, raise_errors: bool = False) -> RunResult:
    """Integrate from ``f0`` to time ``T``.

    Parameters
    ----------
    save_every : int
        Steps between saved states; the initial and final states are always saved.
    record : bool
        Compute a diagnostics row at every saved state.
    s : float
        Sobolev index of the ``Hs`` column.
    raise_errors : bool
        Re-raise solver errors instead of returning the partial run.
    """
    from .diagnostics import fill_energy_residuals, record as record_row

    if T < 0:
        raise ValueError("final time must be nonnegative")
    if save_every < 1:
        raise ValueError("save_every must be >= 1")
    grid = f0.grid
    callbacks = list(callbacks)
    R = p.cutoff(grid)
    state = EvolutionState(0.0, SpectralField(grid, f0.coeffs * p.mask(grid)), True)
    n_full = int(math.floor(T / spec.dt + 1e-9))
    tail = T - n_full * spec.dt
    steppers = [(n_full, Stepper(grid, spec, p, dn_backend))]
    if tail > 1e-12 * max(T, 1.0):
        steppers.append((1, Stepper(grid, replace(spec, dt=tail), p, dn_backend)))
    total = sum(n for n, _ in steppers)

    traj = Trajectory(np.zeros(0), [])
    rows = []
    times = [0.0]
    l2 = [state.f.l2()]
    means = [state.f.mean]
    in_band = True
    result = RunResult(traj)

    def save(st: EvolutionState):
        traj.append(st.t, st.f)
        if record:
            rows.append(record_row(st, p, dn_backend, s=s))
        for cb in callbacks:
            cb(st)

    try:
        save(state)
        k = 0
        for count, stepper in steppers:
            for _ in range(count):
                state = stepper.step(state)
                k += 1
                times.append(state.t)
                l2.append(state.f.l2())
                means.append(state.f.mean)
                in_band = in_band and state.in_VR
                if k % save_every == 0 or k == total:
                    save(state)
    except RegimeError as exc:
        if raise_errors:
            raise
        result.error = exc
    result.step_times = np.asarray(times)
    result.step_l2 = np.asarray(l2)
    result.rows = fill_energy_residuals(rows, p, times=result.step_times, l2=result.step_l2) if record else rows
    result.step_mean = np.asarray(means)
    result.all_in_band = in_band and all(fl.in_band(R) for fl in traj.fields)
    return result
