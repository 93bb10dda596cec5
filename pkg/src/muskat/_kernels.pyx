# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: vertical exponential sweeps and batched tridiagonal solves."""

import numpy as np



def exp_sweep(const double[:, ::1] decay, const double[:, :, ::1] weights,
              const Py_ssize_t[:, ::1] stencil, const double complex[:, :, ::1] src,
              bint upward):
    """Run the per-mode recurrence ``I <- decay * I + sum_j w_j F_j`` over all levels.

    Parameters
    ----------
    decay : (L-1, M) float64
    weights : (L-1, S, M) float64
    stencil : (L-1, S) intp
    src : (L, B, M) complex128
    upward : bool
        Integrate from the bottom level (True) or from the top level.

    Returns
    -------
    ndarray
        Complex array of shape ``(L, B, M)``; zero at the starting level.
    """
    cdef Py_ssize_t L = src.shape[0], B = src.shape[1], M = src.shape[2]
    cdef Py_ssize_t S = stencil.shape[1]
    cdef Py_ssize_t n, b, m, j, cur, prev, ii
    cdef double e, w, acc_r, acc_i
    cdef double complex x
    out_arr = np.zeros((L, B, M), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    for n in range(L - 1):
        if upward:
            cur = n + 1
            prev = n
            ii = n
        else:
            cur = L - 2 - n
            prev = cur + 1
            ii = cur
        for b in range(B):
            for m in range(M):
                e = decay[ii, m]
                x = out[prev, b, m]
                acc_r = e * x.real
                acc_i = e * x.imag
                for j in range(S):
                    w = weights[ii, j, m]
                    x = src[stencil[ii, j], b, m]
                    acc_r = acc_r + w * x.real
                    acc_i = acc_i + w * x.imag
                out[cur, b, m] = acc_r + 1j * acc_i
    return out_arr


def thomas_solve(const double[:, ::1] mult, const double[:, ::1] diag,
                 const double[:, ::1] upper, double complex[:, :, ::1] rhs):
    """Solve factored tridiagonal systems in place, one per mode column.

    Parameters
    ----------
    mult : (L, M) float64
        Forward elimination multipliers (row 0 unused).
    diag : (L, M) float64
        Eliminated diagonal.
    upper : (L, M) float64
        Super-diagonal.
    rhs : (L, B, M) complex128
        Right-hand sides, overwritten by the solution.
    """
    cdef Py_ssize_t L = rhs.shape[0], B = rhs.shape[1], M = rhs.shape[2]
    cdef Py_ssize_t i, b, m
    for b in range(B):
        for i in range(1, L):
            for m in range(M):
                rhs[i, b, m] = rhs[i, b, m] - mult[i, m] * rhs[i - 1, b, m]
        for m in range(M):
            rhs[L - 1, b, m] = rhs[L - 1, b, m] / diag[L - 1, m]
        for i in range(L - 2, -1, -1):
            for m in range(M):
                rhs[i, b, m] = (rhs[i, b, m] - upper[i, m] * rhs[i + 1, b, m]) / diag[i, m]
