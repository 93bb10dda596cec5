"""Exponential quadrature for vertical integrals with exact exponential kernels.

For one Fourier mode with ``kappa = |xi|`` the vertical integrals read

    U(z) = int_{-Zmax}^{z} exp(-(z - tau) kappa) F(tau) dtau      (upward)
    D(z) = int_{z}^{0}     exp(-(tau - z) kappa) F(tau) dtau      (downward)

Both obey one-step recurrences across each interval of the vertical grid.
The integrand is replaced by its Lagrange interpolant on a local stencil and
the kernel is integrated exactly through the ``phi`` functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

__all__ = ["phi_functions", "ExpQuadrature", "build_quadrature"]

_SERIES_RADIUS = 1.0
_SERIES_TERMS = 30


def phi_functions(x, jmax: int) -> np.ndarray:
    """Evaluate ``phi_0 .. phi_jmax`` at ``x``.

    ``phi_0(x) = exp(x)`` and ``phi_{j+1}(x) = (phi_j(x) - 1/j!) / x``.  A
    Taylor series is used for ``|x| < 1`` where the recurrence cancels.

    Parameters
    ----------
    x : array_like
        Real arguments.
    jmax : int
        Highest index.

    Returns
    -------
    ndarray
        Shape ``(jmax + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((jmax + 1,) + x.shape)
    out[0] = np.exp(x)
    small = np.abs(x) < _SERIES_RADIUS
    xl = np.where(small, 1.0, x)
    for j in range(jmax):
        out[j + 1] = (out[j] - 1.0 / factorial(j)) / xl
    if np.any(small):
        xs = x[small]
        for j in range(1, jmax + 1):
            term = np.full_like(xs, 1.0 / factorial(j))
            acc = np.zeros_like(xs)
            for m in range(_SERIES_TERMS):
                acc += term
                term = term * xs / (m + 1 + j)
            out[j][small] = acc
    return out


def _stencils(n_levels: int, npts: int) -> np.ndarray:
    nint = n_levels - 1
    st = np.empty((nint, npts), dtype=np.intp)
    for n in range(nint):
        lo = min(max(n - (npts - 2) // 2, 0), n_levels - npts)
        st[n] = np.arange(lo, lo + npts)
    return st


@dataclass(frozen=True)
class ExpQuadrature:
    """Per-mode recurrence coefficients for the two vertical sweeps.

    Attributes
    ----------
    decay : ndarray
        ``exp(-dz_n kappa)``, shape ``(n_intervals, M)``.
    w_up, w_down : ndarray
        Interval weights, shape ``(n_intervals, npts, M)``.
    stencil : ndarray
        Level indices feeding each interval, shape ``(n_intervals, npts)``.
    """

    decay: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray
    stencil: np.ndarray
    order: int


def build_quadrature(z: np.ndarray, kappa: np.ndarray, order: int = 1) -> ExpQuadrature:
    """Assemble weights for levels ``z`` and mode magnitudes ``kappa``.

    Parameters
    ----------
    z : ndarray
        Ascending vertical levels.
    kappa : ndarray
        Flat array of ``|xi|`` per mode; duplicates are computed once.
    order : int
        Polynomial degree of the integrand interpolant (1 is piecewise linear).
    """
    if order < 1 or order + 1 > z.size:
        raise ValueError(f"quadrature order {order} unsupported for {z.size} levels")
    kappa = np.asarray(kappa, dtype=float).ravel()
    uniq, inv = np.unique(kappa, return_inverse=True)
    npts = order + 1
    st = _stencils(z.size, npts)
    d = np.diff(z)
    arg = -d[:, None] * uniq[None, :]
    ph = phi_functions(arg, npts)
    mom = np.stack([factorial(m) * ph[m + 1] for m in range(npts)], axis=1)  # (nint, npts, K)
    w_up = np.empty((d.size, npts, uniq.size))
    w_dn = np.empty_like(w_up)
    for n in range(d.size):
        u = (z[st[n]] - z[n]) / d[n]
        ud = (z[n + 1] - z[st[n]]) / d[n]
        cu = np.linalg.inv(np.vander(u, npts, increasing=True))
        cd = np.linalg.inv(np.vander(ud, npts, increasing=True))
        w_up[n] = d[n] * cu.T @ mom[n]
        w_dn[n] = d[n] * cd.T @ mom[n]
    return ExpQuadrature(
        decay=np.ascontiguousarray(np.exp(arg)[:, inv]),
        w_up=np.ascontiguousarray(w_up[:, :, inv]),
        w_down=np.ascontiguousarray(w_dn[:, :, inv]),
        stencil=np.ascontiguousarray(st),
        order=order,
    )
