import numpy as np
import pytest

from muskat import kernels
from muskat.spectral import SpectralField, TorusGrid, forward_transform

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def cos_field(grid: TorusGrid, amp: float = 1.0, k: int = 1, phase: float = 0.0) -> SpectralField:
    return forward_transform(amp * np.cos(k * grid.points[0] + phase), grid)


def band_field(grid: TorusGrid, rng: np.random.Generator, kmax: float) -> SpectralField:
    """Real mean-zero field with Gaussian coefficients on 0 < |xi| <= kmax, no Nyquist."""
    c = forward_transform(rng.standard_normal(grid.shape), grid).coeffs
    keep = (grid.xi_abs > 0) & (grid.xi_abs <= kmax * (1 + 1e-12))
    for nyq in grid.nyquist:
        keep &= ~nyq
    return SpectralField(grid, c * keep)


@pytest.fixture
def grid32():
    return TorusGrid(1, 32)


@pytest.fixture
def grid64():
    return TorusGrid(1, 64)


@pytest.fixture
def grid2d():
    return TorusGrid(2, 16)


@pytest.fixture(params=kernels.available_backends())
def kernel_backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
