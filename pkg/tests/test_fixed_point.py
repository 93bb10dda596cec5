import math

import numpy as np
import pytest

from conftest import band_field, cos_field
from muskat.errors import DegenerateJacobian, NoContraction
from muskat.fixed_point import (
    DnOptions,
    FixedPointDN,
    apply_Pi1,
    apply_Pi2,
    assemble_Qa,
    assemble_Qb,
    compute_layers_B,
    default_vertical_grid,
    dn_contraction_probe,
    solve_dn,
)
from muskat.layers import LayeredField, VerticalGrid
from muskat.norms import sobolev
from muskat.spectral import AbsNabla, SpectralField, TorusGrid, forward_transform, poisson_extend


def _layers(grid, z, func):
    return LayeredField(grid, z, np.stack([forward_transform(func(t), grid).coeffs for t in z.z]))


def _product(a, b, grid):
    return forward_transform(SpectralField(grid, a).samples() * SpectralField(grid, b).samples(), grid).coeffs


def craig_sulem(grid, eta, g, order):
    """Small-amplitude expansion of G(eta) g in infinite depth up to the given order."""
    D = grid.xi_abs
    ik = 1j * grid.xi[0]
    out = D * g
    if order >= 1:
        out = out - ik * _product(eta, ik * g, grid) - D * _product(eta, D * g, grid)
    if order >= 2:
        e2 = _product(eta, eta, grid)
        out = out - 0.5 * (
            D**2 * _product(e2, D * g, grid)
            + D * _product(e2, D**2 * g, grid)
            - 2 * D * _product(eta, D * _product(eta, D * g, grid), grid)
        )
    return out


class TestVerticalGrid:
    def test_geometric_default(self, grid32):
        z = default_vertical_grid(grid32)
        assert z.z[0] == pytest.approx(-40.0) and z.z[-1] == 0.0
        assert z.n_intervals == 200
        h = z.spacing
        assert np.allclose(h[:-1] / h[1:], 1.05)

    def test_refined_doubles(self, grid32):
        z = default_vertical_grid(grid32)
        r = z.refined()
        assert r.n_intervals == 400 and r.z_max == pytest.approx(z.z_max)

    def test_validation(self, grid32):
        with pytest.raises(ValueError):
            VerticalGrid(np.array([-1.0, -2.0, 0.0]))
        with pytest.raises(ValueError):
            VerticalGrid(np.array([-1.0, -0.5]))
        with pytest.raises(ValueError):
            VerticalGrid.uniform(5.0, 10).check_depth(grid32)

    def test_too_shallow_rejected(self, grid32):
        with pytest.raises(ValueError):
            FixedPointDN(VerticalGrid.uniform(10.0, 100)).apply(cos_field(grid32, 0.01), cos_field(grid32))


class TestLayersAndB:
    def test_flat(self, grid32):
        z = default_vertical_grid(grid32)
        P, B = compute_layers_B(SpectralField.zeros(grid32), z)
        assert not np.any(P.coeffs) and not np.any(B.coeffs)

    def test_constant(self, grid32):
        z = default_vertical_grid(grid32)
        P, B = compute_layers_B(forward_transform(np.full(32, 0.3), grid32), z)
        assert np.allclose(P.samples(), 0.3, atol=1e-15)
        assert np.abs(B.samples()).max() <= 1e-15

    def test_pointwise_formula(self, grid32):
        z = default_vertical_grid(grid32)
        x = grid32.points[0]
        P, B = compute_layers_B(cos_field(grid32, 0.1), z)
        zz = z.z[:, None]
        px = -0.1 * np.exp(zz) * np.sin(x)
        pz = 0.1 * np.exp(zz) * np.cos(x)
        expected = (px**2 - pz) / (1 + pz)
        assert np.abs(B.samples() - expected).max() <= 1e-13
        assert 0 < np.abs(B.samples()).max() < 0.2

    def test_degenerate_jacobian(self, grid32):
        with pytest.raises(DegenerateJacobian):
            compute_layers_B(cos_field(grid32, 0.96), default_vertical_grid(grid32))


class TestQaQb:
    @pytest.fixture
    def setup(self, grid32):
        z = default_vertical_grid(grid32)
        x = grid32.points[0]
        zz = z.z[:, None]
        P, B = compute_layers_B(cos_field(grid32, 0.1), z)
        v = poisson_extend(cos_field(grid32), z)
        w = LayeredField.zeros(grid32, z)
        px = -0.1 * np.exp(zz) * np.sin(x)
        pz = 0.1 * np.exp(zz) * np.cos(x)
        b = (px**2 - pz) / (1 + pz)
        vx = -np.exp(zz) * np.sin(x)
        dv = np.exp(zz) * np.cos(x)
        qa = px * vx / (1 + b) - b / (1 + b) * dv
        qb = (dv + qa) * px - pz * vx
        return z, P, B, v, w, qa, qb

    def test_qa_pointwise(self, setup):
        z, P, B, v, w, qa, _ = setup
        assert np.abs(assemble_Qa(w, v, P, B).samples() - qa).max() <= 1e-12

    def test_qb_pointwise(self, setup):
        z, P, B, v, w, qa, qb = setup
        Qa = assemble_Qa(w, v, P, B)
        assert np.abs(assemble_Qb(w, v, P, Qa).samples()[:, 0] - qb).max() <= 1e-12

    def test_flat_gives_zero(self, grid32, rng):
        z = default_vertical_grid(grid32)
        P, B = compute_layers_B(SpectralField.zeros(grid32), z)
        v = poisson_extend(band_field(grid32, rng, 8.0), z)
        w = _layers(grid32, z, lambda t: np.exp(t) * np.sin(grid32.points[0]))
        Qa = assemble_Qa(w, v, P, B)
        assert not np.any(Qa.coeffs)
        assert not np.any(assemble_Qb(w, v, P, Qa).coeffs)

    def test_zero_unknowns_give_zero(self, grid32):
        z = default_vertical_grid(grid32)
        P, B = compute_layers_B(cos_field(grid32, 0.1), z)
        zero = LayeredField.zeros(grid32, z)
        Qa = assemble_Qa(zero, zero, P, B)
        assert np.abs(Qa.coeffs).max() == 0.0
        assert np.abs(assemble_Qb(zero, zero, P, Qa).coeffs).max() == 0.0

    def test_qb_constant_v_flat(self, grid32):
        z = default_vertical_grid(grid32)
        P, B = compute_layers_B(SpectralField.zeros(grid32), z)
        v = _layers(grid32, z, lambda t: np.full(32, 1.0 + t))
        zero = LayeredField.zeros(grid32, z)
        assert not np.any(assemble_Qb(zero, v, P, assemble_Qa(zero, v, P, B)).coeffs)


class TestPiOperators:
    def _pi1_error(self, z, grid):
        x = grid.points[0]
        Qa = _layers(grid, z, lambda t: -np.exp(t) * np.cos(x))
        out = apply_Pi1(Qa, LayeredField.zeros(grid, z, (1,))).samples()
        zz = z.z[:, None]
        exact = np.exp(-zz) * (np.exp(2 * zz) - np.exp(-2 * z.z_max)) / 2 * np.cos(x)
        return np.abs(out - exact).max()

    def _pi2_error(self, z, grid):
        x = grid.points[0]
        Qa = _layers(grid, z, lambda t: np.exp(t) * np.cos(x))
        out = apply_Pi2(LayeredField.zeros(grid, z), Qa).samples()
        zz = z.z[:, None]
        return np.abs(out - zz * np.exp(zz) * np.cos(x)).max()

    def test_zero_input(self, grid32):
        z = default_vertical_grid(grid32)
        zero = LayeredField.zeros(grid32, z)
        assert not np.any(apply_Pi1(zero, LayeredField.zeros(grid32, z, (1,))).coeffs)
        assert not np.any(apply_Pi2(zero, zero).coeffs)

    @pytest.mark.parametrize("which", ["pi1", "pi2"])
    def test_single_mode_closed_form_second_order(self, grid32, which):
        z = default_vertical_grid(grid32)
        fn = self._pi1_error if which == "pi1" else self._pi2_error
        e0, e1 = fn(z, grid32), fn(z.refined(), grid32)
        assert e0 <= 2e-4
        assert 3.5 <= e0 / e1 <= 4.5

    def test_pi1_no_mean(self, grid32, rng):
        z = default_vertical_grid(grid32)
        Qa = LayeredField(grid32, z, np.stack([band_field(grid32, rng, 8.0).coeffs for _ in z.z]))
        Qa.coeffs[:, 0] = 1.0  # a mean in Qa is annihilated by |grad|
        Qb = LayeredField(grid32, z, np.stack([band_field(grid32, rng, 8.0).coeffs for _ in z.z])[:, None])
        Qb.coeffs[:, 0, 0] = 2.0
        assert np.abs(apply_Pi1(Qa, Qb).coeffs[:, 0]).max() == 0.0

    def test_pi2_constant_in_x(self, grid32):
        z = default_vertical_grid(grid32)
        c = _layers(grid32, z, lambda t: np.full(32, 0.7))
        out = apply_Pi2(LayeredField.zeros(grid32, z), c).samples()
        assert np.abs(out - 0.7 * z.z[:, None]).max() <= 1e-12


class TestSolve:
    def test_flat_exact(self, grid64, rng, kernel_backend):
        g = band_field(grid64, rng, 20.0)
        sol = solve_dn(SpectralField.zeros(grid64), g, kernels=kernel_backend)
        assert sol.iterations <= 1
        assert not np.any(sol.remainder.coeffs)
        assert (sol.g_f_g - AbsNabla()(g)).l2() <= 1e-12 * g.l2()

    def test_output_decomposition(self, grid32):
        g = cos_field(grid32, k=2)
        sol = solve_dn(cos_field(grid32, 0.05), g)
        assert np.array_equal(sol.g_f_g.coeffs, (AbsNabla()(g) + sol.remainder).coeffs)

    def test_backends_agree(self, grid32):
        f, g = cos_field(grid32, 0.05), cos_field(grid32, k=2)
        a = solve_dn(f, g, kernels="python")
        from muskat import kernels

        for name in kernels.available_backends():
            b = solve_dn(f, g, kernels=name)
            assert (a.g_f_g - b.g_f_g).l2() <= 1e-14
            assert a.iterations == b.iterations

    def test_apply_batch_matches_apply(self, grid32, rng):
        f = band_field(grid32, rng, 4.0) * 0.01
        gs = [band_field(grid32, rng, 8.0) for _ in range(3)]
        dn = FixedPointDN()
        batch = dn.apply_batch(f, gs)
        for g, b in zip(gs, batch):
            assert (dn.apply(f, g) - b).l2() <= 1e-13 * b.l2()

    def test_mean_free_output(self, grid64, rng):
        f = band_field(grid64, rng, 6.0) * 0.02
        for _ in range(3):
            g = band_field(grid64, rng, 20.0)
            sol = solve_dn(f, g)
            assert abs(sol.w.top.mean) <= 1e-12
            assert abs(sol.g_f_g.mean) <= 1e-12

    def test_first_order_mode_coupling(self, grid64):
        # G(eps cos 2x) cos x = (1 - eps) cos x + O(eps^2)
        for eps in (0.02, 0.01):
            G = FixedPointDN().apply(cos_field(grid64, eps, k=2), cos_field(grid64))
            assert (G - cos_field(grid64, 1 - eps)).l2() <= 2 * eps**2

    def test_expansion_orders(self, grid64):
        x = grid64.points[0]
        f0 = forward_transform(np.cos(x) + 0.5 * np.sin(2 * x), grid64)
        g = forward_transform(np.cos(3 * x) + np.sin(x), grid64)
        dn = FixedPointDN()
        e1, e2 = [], []
        eps = (0.04, 0.02, 0.01)
        for e in eps:
            G = dn.apply(f0 * e, g).coeffs
            e1.append(SpectralField(grid64, G - craig_sulem(grid64, e * f0.coeffs, g.coeffs, 1)).l2())
            e2.append(SpectralField(grid64, G - craig_sulem(grid64, e * f0.coeffs, g.coeffs, 2)).l2())
        slope1 = np.polyfit(np.log(eps), np.log(e1), 1)[0]
        assert 1.9 <= slope1 <= 2.1
        assert all(b <= a / 15 for a, b in zip(e1, e2))
        assert math.log2(e2[0] / e2[1]) >= 2.5

    def test_self_adjoint(self, grid64, rng):
        f = cos_field(grid64, 0.05)
        dn = FixedPointDN()
        for _ in range(5):
            g1, g2 = band_field(grid64, rng, 21.0), band_field(grid64, rng, 21.0)
            a, b = dn.apply_batch(f, [g1, g2])
            assert abs(a.inner(g2) - g1.inner(b)) <= 1e-8 * g1.l2() * g2.l2()

    def test_geometric_convergence(self, grid64, rng):
        for k in (1, 4, 16):
            f = band_field(grid64, rng, float(k))
            f = f * (0.1 / sobolev(f, 2))
            sol = solve_dn(f, band_field(grid64, rng, 21.0))
            assert sol.converged and sol.iterations <= 30
            assert sol.residual_history[-1] < 1e-12
            assert np.all(sol.ratios <= 0.5)

    def test_quadrature_order_three_agrees(self, grid32):
        f, g = cos_field(grid32, 0.05), cos_field(grid32, k=2)
        a = FixedPointDN(options=DnOptions(quadrature_order=1)).apply(f, g)
        b = FixedPointDN(options=DnOptions(quadrature_order=3)).apply(f, g)
        assert (a - b).l2() <= 1e-4 * b.l2()

    def test_no_contraction_at_iteration_cap(self, grid32):
        with pytest.raises(NoContraction):
            solve_dn(cos_field(grid32, 0.3, k=3), cos_field(grid32), opts=DnOptions(max_iter=5))

    def test_no_contraction_guard(self, grid32):
        opts = DnOptions(contraction_guard=0.05, guard_window=5)
        with pytest.raises(NoContraction, match="ratio"):
            solve_dn(cos_field(grid32, 0.2, k=4), cos_field(grid32), opts=opts)

    def test_options_validation(self):
        with pytest.raises(ValueError):
            DnOptions(max_iter=0)
        with pytest.raises(ValueError):
            DnOptions(tol=0)


class TestContractionProbe:
    def test_identical(self, grid32):
        f = cos_field(grid32, 0.05)
        p = dn_contraction_probe(f, f, cos_field(grid32))
        assert p.ratio == 0.0 and p.degenerate

    def test_finite_and_stable(self, grid32):
        f1 = cos_field(grid32, 0.05)
        g = cos_field(grid32)
        ratios = []
        for d in (0.01, 0.005, 0.0025):
            p = dn_contraction_probe(f1, f1 + cos_field(grid32, d, k=2), g)
            assert math.isfinite(p.ratio) and p.ratio > 0
            ratios.append(p.ratio)
        assert abs(ratios[1] / ratios[0] - 1) <= 0.2
        assert abs(ratios[2] / ratios[1] - 1) <= 0.2
