"""Numpy reference implementations of the compiled inner loops."""

from __future__ import annotations

import numpy as np


def exp_sweep(decay, weights, stencil, src, upward):
    """Run the per-mode recurrence ``I <- decay * I + sum_j w_j F_j`` over all levels.

    Same contract as the compiled kernel: ``src`` has shape ``(L, B, M)``
    and the result is zero at the starting level.
    """
    L = src.shape[0]
    gathered = src[stencil]  # (L-1, S, B, M)
    forcing = np.einsum("nsm,nsbm->nbm", weights, gathered)
    out = np.zeros_like(src)
    if upward:
        for n in range(L - 1):
            out[n + 1] = decay[n] * out[n] + forcing[n]
    else:
        for n in range(L - 2, -1, -1):
            out[n] = decay[n] * out[n + 1] + forcing[n]
    return out


def thomas_solve(mult, diag, upper, rhs):
    """Solve factored tridiagonal systems in place, one per mode column."""
    L = rhs.shape[0]
    for i in range(1, L):
        rhs[i] -= mult[i] * rhs[i - 1]
    rhs[L - 1] /= diag[L - 1]
    for i in range(L - 2, -1, -1):
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i]
