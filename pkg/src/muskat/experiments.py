"""Experiment drivers shared by the command line and the test suite."""

from __future__ import annotations

import math

import numpy as np

from .config import RunConfig
from .diagnostics import bootstrap_monitor, contraction_experiment, fit_decay_rate
from .elliptic import EllipticDN, lyapunov_J
from .evolution import MuskatParams, RunResult, StepperSpec, run
from .fixed_point import DnOptions, FixedPointDN
from .layers import VerticalGrid
from .norms import besov, hom_sobolev, lebesgue, lipschitz, sobolev
from .presets import make_initial
from .spectral import AbsNabla, SpectralField, TorusGrid, forward_transform

__all__ = [
    "build_grid",
    "build_params",
    "build_stepper",
    "build_backend",
    "build_initial",
    "random_band_field",
    "run_evolution",
    "dn_check",
    "oracle_compare",
    "lyapunov_scan",
    "contraction",
    "norms_report",
]


def build_grid(cfg: RunConfig) -> TorusGrid:
    return TorusGrid(cfg.grid.dim, cfg.grid.n, cfg.grid.period)


def build_params(cfg: RunConfig) -> MuskatParams:
    return MuskatParams(**cfg.params.model_dump())


def build_stepper(cfg: RunConfig) -> StepperSpec:
    return StepperSpec(**cfg.stepper.model_dump())


def _vertical_grid(cfg: RunConfig, grid: TorusGrid) -> VerticalGrid:
    z_max = cfg.dn.z_max if cfg.dn.z_max is not None else 40.0 / grid.k_min
    return VerticalGrid.geometric(z_max, cfg.dn.z_levels, cfg.dn.ratio)


def _fixed_point(cfg: RunConfig, grid: TorusGrid, refine: bool = False) -> FixedPointDN:
    z = _vertical_grid(cfg, grid)
    opts = DnOptions(
        max_iter=cfg.dn.max_iter,
        tol=cfg.dn.tol,
        contraction_guard=cfg.dn.contraction_guard,
        quadrature_order=cfg.dn.quadrature_order,
    )
    return FixedPointDN(z.refined() if refine else z, opts)


def _elliptic(cfg: RunConfig, refine: bool = False) -> EllipticDN:
    nz = cfg.dn.nz * (2 if refine else 1)
    return EllipticDN(depth=cfg.dn.depth, nz=nz, tol=cfg.dn.tol, max_iter=max(cfg.dn.max_iter, 500))


def build_backend(cfg: RunConfig, grid: TorusGrid | None = None):
    grid = grid or build_grid(cfg)
    if cfg.dn.backend == "elliptic":
        return _elliptic(cfg)
    return _fixed_point(cfg, grid)


def build_initial(cfg: RunConfig, grid: TorusGrid | None = None) -> SpectralField:
    grid = grid or build_grid(cfg)
    i = cfg.init
    return make_initial(i.preset, grid, i.amplitude, i.seed, mode=i.mode, band=tuple(i.band), width=i.width)


def random_band_field(grid: TorusGrid, rng: np.random.Generator, kmax: float) -> SpectralField:
    """Real mean-zero field with independent Gaussian coefficients on ``0 < |xi| <= kmax``."""
    x = rng.standard_normal(grid.shape)
    f = forward_transform(x, grid)
    keep = (grid.xi_abs > 0) & (grid.xi_abs <= kmax * (1 + 1e-12))
    for nyq in grid.nyquist:
        keep &= ~nyq
    return SpectralField(grid, f.coeffs * keep)


def run_evolution(cfg: RunConfig, record: bool = True) -> RunResult:
    grid = build_grid(cfg)
    return run(
        build_initial(cfg, grid),
        cfg.experiment.t_final,
        build_stepper(cfg),
        build_params(cfg),
        build_backend(cfg, grid),
        save_every=cfg.output.cadence,
        record=record,
        s=cfg.experiment.s,
    )


def evolution_summary(cfg: RunConfig, res: RunResult) -> dict:
    out = {
        "ok": res.ok,
        "error": None if res.ok else f"{type(res.error).__name__}: {res.error}",
        "t_reached": float(res.step_times[-1]) if res.step_times.size else 0.0,
        "steps": int(res.step_times.size - 1),
        "max_abs_mean": float(np.abs(res.step_mean).max()) if res.step_mean.size else 0.0,
        "in_band": bool(res.all_in_band),
        "l2_nonincreasing": bool(np.all(np.diff(res.step_l2) <= 1e-10 * res.step_l2[:-1])) if res.step_l2.size > 1 else True,
    }
    if len(res.trajectory):
        out["bootstrap_sup_ratio"] = bootstrap_monitor(res.trajectory, cfg.experiment.s).sup_ratio
    if res.rows:
        out["a_min"] = min(r.a_min for r in res.rows)
        out["max_gff"] = max(r.max_gff for r in res.rows)
        t = [r.t for r in res.rows]
        if len(t) > 5 and all(r.L2 > 0 for r in res.rows):
            fit = fit_decay_rate(t, [r.L2 for r in res.rows])
            out["l2_decay_rate"] = fit.rate
            out["l2_decay_r_squared"] = fit.r_squared
    return out


def dn_check(cfg: RunConfig, n_samples: int = 10) -> dict:
    """Flat exactness, self-adjointness and Picard telemetry at the initial interface."""
    grid = build_grid(cfg)
    f = build_initial(cfg, grid)
    dn = _fixed_point(cfg, grid)
    rng = np.random.default_rng(cfg.init.seed)
    kmax = grid.dealias_radius
    zero = SpectralField.zeros(grid)
    flat = []
    adj = []
    for _ in range(n_samples):
        g1 = random_band_field(grid, rng, kmax)
        g2 = random_band_field(grid, rng, kmax)
        flat.append((dn.apply(zero, g1) - AbsNabla()(g1)).l2() / g1.l2())
        a, b = dn.apply_batch(f, [g1, g2])
        adj.append(abs(a.inner(g2) - g1.inner(b)) / (g1.l2() * g2.l2()))
    sol = dn.solve(f, f if np.any(f.coeffs) else SpectralField(grid, np.cos(grid.points[0]).astype(complex)))
    return {
        "flat_relative_error_max": max(flat),
        "self_adjoint_relative_max": max(adj),
        "picard_iterations": sol.iterations,
        "picard_residuals": list(sol.residual_history),
        "picard_ratios": [float(r) for r in sol.ratios],
        "f_H2": sobolev(f, 2.0),
    }


def oracle_compare(cfg: RunConfig) -> dict:
    """Discrepancy between the two DN backends at two vertical resolutions for ``g = cos 2x``."""
    grid = build_grid(cfg)
    f = build_initial(cfg, grid)
    g = forward_transform(np.cos(2 * grid.k_min * grid.points[0]), grid)
    disc = []
    for refine in (False, True):
        a = _fixed_point(cfg, grid, refine).apply(f, g)
        b = _elliptic(cfg, refine).apply(f, g)
        disc.append((a - b).l2() / b.l2())
    order = math.log2(disc[0] / disc[1]) if disc[1] > 0 else math.inf
    return {"discrepancy": disc[0], "discrepancy_refined": disc[1], "observed_order": order}


def lyapunov_scan(cfg: RunConfig, h2_max: float | None = None) -> dict:
    """``J(f) / ||f||_{H^2}^2`` over seeded random fields with ``||f||_{H^2}`` up to ``h2_max``.

    ``h2_max`` defaults to the configured amplitude.
    """
    grid = build_grid(cfg)
    dn = build_backend(cfg, grid)
    rng = np.random.default_rng(cfg.init.seed)
    h2_max = cfg.init.amplitude if h2_max is None else h2_max
    kmax = min(grid.dealias_radius, 8.0 * grid.k_min)
    ratios = []
    for _ in range(cfg.experiment.samples):
        f = random_band_field(grid, rng, kmax)
        target = h2_max * rng.uniform(0.1, 1.0)
        f = f * (target / sobolev(f, 2.0))
        J = lyapunov_J(f, dn.apply(f, f))
        ratios.append(J / sobolev(f, 2.0) ** 2)
    return {"samples": len(ratios), "min_ratio": min(ratios), "ratios": ratios, "h2_max": h2_max}


def contraction(cfg: RunConfig) -> dict:
    """Distance ratios for ``f0`` against ``f0 + eps cos 2x`` and against half the perturbation."""
    grid = build_grid(cfg)
    f0 = build_initial(cfg, grid)
    p = build_params(cfg)
    spec = build_stepper(cfg)
    dn = build_backend(cfg, grid)
    cos2 = forward_transform(np.cos(2 * grid.k_min * grid.points[0]), grid)
    eps = cfg.experiment.perturbation
    T = cfg.experiment.t_final
    full = contraction_experiment(f0, f0 + cos2 * eps, T, spec, p, dn, save_every=cfg.output.cadence)
    half = contraction_experiment(f0, f0 + cos2 * (eps / 2), T, spec, p, dn, save_every=cfg.output.cadence)
    halving = half.distance_T / full.distance_T if full.distance_T > 0 else math.nan
    return {
        "perturbation": eps,
        "max_ratio": full.max_ratio,
        "ratio_at_T": full.ratio_at_T,
        "distance_T": full.distance_T,
        "distance_T_half": half.distance_T,
        "halving_ratio": halving,
        "diverged": bool(full.diverged or half.diverged),
    }


def norms_report(cfg: RunConfig) -> dict:
    f = build_initial(cfg)
    s = cfg.experiment.s
    return {
        "L2": lebesgue(f, 2.0),
        "Linf": lebesgue(f, math.inf),
        "Hhalf": hom_sobolev(f, 0.5),
        "H3half": hom_sobolev(f, 1.5),
        "Hs": sobolev(f, s),
        "B_s_22": besov(f, s, 2.0, 2.0),
        "Lip": lipschitz(f),
        "s": s,
    }
