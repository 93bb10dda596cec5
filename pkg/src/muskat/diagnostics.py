"""Per-state observables and the verification experiments built on them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .elliptic import lyapunov_J
from .geometry import taylor_coefficient
from .norms import Trajectory, hom_sobolev, lipschitz, sobolev
from .spectral import SpectralField

__all__ = [
    "CSV_COLUMNS",
    "DiagnosticsRow",
    "DecayFit",
    "BootstrapResult",
    "ContractionResult",
    "DissipationSplit",
    "record",
    "fd_weights",
    "fill_energy_residuals",
    "fit_decay_rate",
    "bootstrap_monitor",
    "contraction_experiment",
    "dissipation_split",
    "lipschitz_decay",
]

CSV_COLUMNS = ("t", "L2", "Hhalf", "H3half", "Hs", "Lip", "J", "a_min", "mean", "energy_residual")


@dataclass
class DiagnosticsRow:
    """Scalar observables at one time.

    ``dissipation`` is ``(kappa/mu) <G(f)(rho g f + s H(f)), f>`` and
    ``max_gff`` is ``max_x G(f) f``; neither is written to the CSV.
    """

    t: float
    L2: float
    Hhalf: float
    H3half: float
    Hs: float
    Lip: float
    J: float
    a_min: float
    mean: float
    energy_residual: float = math.nan
    dissipation: float = 0.0
    max_gff: float = 0.0

    def csv_values(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def record(state, p, dn_backend, s: float = 4.0) -> DiagnosticsRow:
    """Observables of ``state.f``; a single DN solve of ``G(f) f`` feeds J, a and the dissipation."""
    f: SpectralField = state.f
    if np.any(f.coeffs):
        Gff = dn_backend.apply(f, f)
    else:
        Gff = SpectralField.zeros(f.grid)
    J = lyapunov_J(f, Gff)
    a = taylor_coefficient(f, Gff)
    diss = p.mobility * (p.rho * p.gravity * Gff.inner(f) + p.surface_tension * J)
    return DiagnosticsRow(
        t=float(state.t),
        L2=f.l2(),
        Hhalf=hom_sobolev(f, 0.5),
        H3half=hom_sobolev(f, 1.5),
        Hs=sobolev(f, s),
        Lip=lipschitz(f),
        J=J,
        a_min=a.a_min,
        mean=f.mean,
        dissipation=diss,
        max_gff=float(Gff.samples().max()),
    )


def fd_weights(x0: float, x: np.ndarray, m: int = 1) -> np.ndarray:
    """Finite-difference weights for the ``m``-th derivative at ``x0`` on nodes ``x``.

    Fornberg's recursion; exact for polynomials of degree ``len(x) - 1``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def fill_energy_residuals(rows: list, p=None, stencil: int = 5, times=None, l2=None) -> list:
    """Set ``energy_residual = |d/dt (||f||^2 / 2) + dissipation|`` on every row.

    The time derivative uses fourth-order finite differences over the
    ``stencil`` nearest samples (one-sided near the ends). Samples are the
    rows themselves unless a finer history ``(times, l2)`` containing every
    row time is supplied.
    """
    n = len(rows)
    if n < 2 and times is None:
        for r in rows:
            r.energy_residual = 0.0
        return rows
    if times is None:
        t = np.array([r.t for r in rows])
        e = 0.5 * np.array([r.L2 for r in rows]) ** 2
    else:
        t = np.asarray(times, dtype=float)
        e = 0.5 * np.asarray(l2, dtype=float) ** 2
    m = t.size
    if m < 2:
        for r in rows:
            r.energy_residual = 0.0
        return rows
    w = min(stencil, m)
    for r in rows:
        i = int(np.argmin(np.abs(t - r.t)))
        lo = min(max(i - w // 2, 0), m - w)
        wts = fd_weights(t[i], t[lo : lo + w], 1)
        dedt = float(wts @ e[lo : lo + w])
        r.energy_residual = abs(dedt + r.dissipation)
    return rows


@dataclass
class DecayFit:
    rate: float
    r_squared: float


def fit_decay_rate(times, values, window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares fit of ``log(values) = c - rate * t`` on ``window``.

    The default window is ``[0.2 T, T]`` with ``T`` the last time.

    Raises
    ------
    ValueError
        If a value inside the window is not positive or fewer than two points remain.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is None:
        window = (0.2 * t[-1], t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    t, v = t[sel], v[sel]
    if t.size < 2:
        raise ValueError("fewer than two samples inside the fit window")
    if np.any(v <= 0):
        raise ValueError("decay fit needs positive values inside the window")
    y = np.log(v)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(rate=float(-slope), r_squared=r2)


@dataclass
class BootstrapResult:
    sup_ratio: float
    passed: bool
    bound: float = 2.0


def bootstrap_monitor(traj: Trajectory, s: float, f0_norm: float | None = None, bound: float = 2.0) -> BootstrapResult:
    """``sup_t ||f(t)||_{H^s} / ||f0||_{H^s}``; a zero initial norm gives 0."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if f0_norm is None:
        f0_norm = sobolev(traj.fields[0], s)
    if f0_norm == 0:
        return BootstrapResult(0.0, True, bound)
    ratio = max(sobolev(f, s) for f in traj.fields) / f0_norm
    return BootstrapResult(ratio, ratio <= bound, bound)


@dataclass
class ContractionResult:
    """Distance of two runs relative to the initial distance."""

    ratio_at_T: float
    max_ratio: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    distance_T: float = 0.0
    distance_0: float = 0.0
    degenerate: bool = False
    diverged: bool = False


def contraction_experiment(f01: SpectralField, f02: SpectralField, T: float, spec, p,
                           dn_backend=None, s: float = 2.0, save_every: int = 10) -> ContractionResult:
    """Evolve two initial data and track ``||f1 - f2||_{H^s}(t) / ||f1 - f2||_{H^s}(0)``.

    Identical data give ratios of 0 with ``degenerate=True``; a run that
    stops on a solver error sets ``diverged=True``.
    """
    from .evolution import run
    from .fixed_point import FixedPointDN

    dn_backend = dn_backend or FixedPointDN()
    r1 = run(f01, T, spec, p, dn_backend, save_every=save_every, record=False)
    r2 = run(f02, T, spec, p, dn_backend, save_every=save_every, record=False)
    n = min(len(r1.trajectory), len(r2.trajectory))
    times = r1.trajectory.times[:n]
    dist = np.array([sobolev(a - b, s) for a, b in zip(r1.trajectory.fields[:n], r2.trajectory.fields[:n])])
    diverged = not (r1.ok and r2.ok)
    d0 = float(dist[0])
    if d0 == 0.0:
        return ContractionResult(0.0, 0.0, times, np.zeros(n), 0.0, 0.0, True, diverged)
    ratios = dist / d0
    return ContractionResult(
        float(ratios[-1]), float(ratios.max()), times, ratios, float(dist[-1]), d0, False, diverged
    )


@dataclass
class DissipationSplit:
    """Measured lower bound ``D >= c (|f|_{H^1/2}^2 + |f|_{H^3/2}^2)`` and its time integral."""

    c: float
    energy_drop: float
    weighted_integral: float
    holds: bool


def dissipation_split(rows: list) -> DissipationSplit:
    t = np.array([r.t for r in rows])
    base = np.array([r.Hhalf**2 + r.H3half**2 for r in rows])
    diss = np.array([r.dissipation for r in rows])
    pos = base > 0
    c = float(np.min(diss[pos] / base[pos])) if np.any(pos) else 0.0
    drop = 0.5 * (rows[0].L2**2 - rows[-1].L2**2)
    integral = float(trapezoid(c * base, t)) if t.size > 1 else 0.0
    return DissipationSplit(c, drop, integral, c > 0 and integral <= drop * (1 + 1e-6))


def lipschitz_decay(rows: list) -> tuple[bool, bool]:
    """(final Lip below initial, Lip non-increasing over the second half of the rows)."""
    lip = np.array([r.Lip for r in rows])
    tail = lip[len(lip) // 2 :]
    return bool(lip[-1] < lip[0]), bool(np.all(np.diff(tail) <= 1e-14 * max(lip[0], 1e-300)))


def row_dict(row: DiagnosticsRow) -> dict:
    return {k: v for k, v in asdict(row).items() if k in CSV_COLUMNS}

