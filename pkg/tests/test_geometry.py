import math

import numpy as np
import pytest

from conftest import band_field, cos_field
from muskat.geometry import h1_profile, mean_curvature, taylor_coefficient
from muskat.norms import sobolev
from muskat.spectral import SpectralField, TorusGrid, forward_transform


class TestH1:
    def test_zero(self):
        assert h1_profile(0.0) == 0.0

    def test_unit_slope(self):
        assert h1_profile(1.0) == pytest.approx(1 / math.sqrt(2) - 1, rel=1e-15)

    def test_vector_form(self):
        p = np.array([[0.6], [0.8]])
        assert h1_profile(p, vector_axis=0)[0] == pytest.approx(1 / math.sqrt(2) - 1, rel=1e-15)

    def test_small_slope_series(self):
        p = np.logspace(-8, -1, 30)
        assert np.all(np.abs(h1_profile(p) + p**2 / 2) <= p**4)

    def test_no_cancellation_for_tiny_slopes(self):
        assert h1_profile(1e-10) == pytest.approx(-5e-21, rel=1e-12)


class TestMeanCurvature:
    def test_zero(self, grid32):
        H = mean_curvature(SpectralField.zeros(grid32))
        for part in (H.linear_part, H.nonlinear_part, H.total):
            assert not np.any(part.coeffs)

    def test_small_amplitude(self, grid64):
        f = cos_field(grid64, 1e-3)
        dev = np.abs(mean_curvature(f).total.samples() - 1e-3 * np.cos(grid64.points[0])).max()
        assert dev <= 1e-8

    def test_pointwise_identity_1d(self, grid64):
        x = grid64.points[0]
        f = forward_transform(0.1 * np.sin(x), grid64)
        direct = 0.1 * np.sin(x) * (1 + (0.1 * np.cos(x)) ** 2) ** -1.5
        total = mean_curvature(f).total.samples()
        assert np.abs(total - direct).max() <= 1e-10 * np.abs(direct).max()

    def test_pointwise_identity_2d(self):
        g = TorusGrid(2, 32)
        x, y = g.points
        a = 0.05
        f = SpectralField.from_function(g, lambda x, y: a * np.cos(x) * np.cos(y))
        fx, fy = -a * np.sin(x) * np.cos(y), -a * np.cos(x) * np.sin(y)
        fxx, fyy, fxy = -a * np.cos(x) * np.cos(y), -a * np.cos(x) * np.cos(y), a * np.sin(x) * np.sin(y)
        w = 1 + fx**2 + fy**2
        direct = -((1 + fy**2) * fxx + (1 + fx**2) * fyy - 2 * fx * fy * fxy) / w**1.5
        assert np.abs(mean_curvature(f).total.samples() - direct).max() <= 1e-9

    def test_decomposition_sums(self, rng, grid64):
        f = band_field(grid64, rng, 8.0) * 0.01
        H = mean_curvature(f)
        s = H.linear_part + H.nonlinear_part
        assert (s - H.total).l2() <= 1e-12 * H.total.l2()

    def test_mean_zero(self, rng, grid64):
        for _ in range(10):
            f = band_field(grid64, rng, 10.0)
            f = f * (0.5 / sobolev(f, 2))
            assert abs(mean_curvature(f).total.mean) * grid64.volume <= 1e-10 * sobolev(f, 2)

    def test_even_symmetry(self, grid64):
        f = forward_transform(0.1 * np.cos(grid64.points[0]) + 0.05 * np.cos(3 * grid64.points[0]), grid64)
        h = mean_curvature(f).total.samples()
        assert np.abs(h - np.roll(h[::-1], 1)).max() <= 1e-12 * np.abs(h).max()

    def test_sign_flip_parts(self, grid64):
        f = forward_transform(0.1 * np.cos(grid64.points[0]) + 0.05 * np.sin(2 * grid64.points[0]), grid64)
        a, b = mean_curvature(f), mean_curvature(-f)
        assert np.abs(a.linear_part.coeffs + b.linear_part.coeffs).max() == 0.0
        # cubic nonlinearity is odd in f as well
        assert np.abs(a.nonlinear_part.coeffs + b.nonlinear_part.coeffs).max() <= 1e-16

    def test_nonlinear_part_is_small(self, rng, grid64):
        # Measured max ||nonlinear||_2 / ||f||_{H^3}^2 over 50 fields: 6.3e-4.
        C = 1e-3
        for i in range(20):
            f = band_field(grid64, rng, [2, 4, 8, 16][i % 4])
            f = f * (0.2 * rng.uniform(0.05, 1) / sobolev(f, 3))
            assert mean_curvature(f).nonlinear_part.l2() <= C * sobolev(f, 3) ** 2


class TestTaylorCoefficient:
    def test_flat(self, grid32):
        a = taylor_coefficient(SpectralField.zeros(grid32), SpectralField.zeros(grid32))
        assert a.a_min == 1.0 and np.all(a.samples == 1.0)

    def test_formula(self, grid32):
        x = grid32.points[0]
        f = forward_transform(0.1 * np.sin(x), grid32)
        gff = forward_transform(0.02 * np.cos(x), grid32)
        a = taylor_coefficient(f, gff)
        expected = (1 - 0.02 * np.cos(x)) / (1 + (0.1 * np.cos(x)) ** 2)
        assert np.abs(a.samples - expected).max() <= 1e-15
        assert a.a_min == pytest.approx(expected.min())
