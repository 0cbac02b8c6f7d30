# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot GP kernels in ``_kernels_py``.

Signatures and results match the numpy reference up to round-off. LAPACK and
BLAS come from scipy so no extra link step is needed.

Row-major n x n buffers are handed to Fortran routines as their transposes:
a row-major lower factor L is a column-major upper factor U = L'.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log
from scipy.linalg.cython_blas cimport dtrmv, dtrsv
from scipy.linalg.cython_lapack cimport dpotrf

from solidopt.errors import NotPositiveDefiniteError

cnp.import_array()

cdef double JITTER_START = 1e-10
cdef double JITTER_MAX = 1e-6


cdef void _fill_w(double[:, ::1] A, const double[:, ::1] C, double r, double jitter) noexcept nogil:
    # lower triangle of r * C with unit-plus-jitter diagonal; the upper triangle is never read
    cdef Py_ssize_t n = A.shape[0], i, j
    for i in range(n):
        for j in range(i):
            A[i, j] = r * C[i, j]
        A[i, i] = 1.0 + jitter
        for j in range(i + 1, n):
            A[i, j] = 0.0


cdef tuple _factor_from_corr(double[:, ::1] C, double r, const double[::1] y):
    cdef Py_ssize_t n = C.shape[0], i
    cdef int nn = <int>n, info = 0, one = 1
    cdef char uplo = b'U'
    cdef char trans = b'T'
    cdef char diag = b'N'
    cdef double jitter = 0.0
    L_arr = np.empty((n, n))
    cdef double[:, ::1] L = L_arr
    while True:
        _fill_w(L, C, r, jitter)
        # row-major lower == column-major upper
        dpotrf(&uplo, &nn, &L[0, 0], &nn, &info)
        if info == 0:
            break
        # plain W first; jitter only when the factorization fails
        jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
        if jitter > JITTER_MAX * (1.0 + 1e-9):
            raise NotPositiveDefiniteError(f"W_X not positive definite (n={n}, r={r})")
    zy_arr = np.array(y, dtype=np.float64)
    zo_arr = np.ones(n)
    cdef double[::1] zy = zy_arr
    cdef double[::1] zo = zo_arr
    cdef double logdet = 0.0, yWy = 0.0, oWy = 0.0, oWo = 0.0
    with nogil:
        # solve L z = b, i.e. U' z = b on the column-major view
        dtrsv(&uplo, &trans, &diag, &nn, &L[0, 0], &nn, &zy[0], &one)
        dtrsv(&uplo, &trans, &diag, &nn, &L[0, 0], &nn, &zo[0], &one)
        for i in range(n):
            logdet += log(L[i, i])
            yWy += zy[i] * zy[i]
            oWy += zo[i] * zy[i]
            oWo += zo[i] * zo[i]
    return L_arr, 2.0 * logdet, yWy, oWy, oWo


def factor_stats(E, double r, y):
    """Factorize ``W = r exp(-E) + (1 - r) I``; returns (L, logdet, yWy, oWy, oWo)."""
    cdef double[:, ::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef Py_ssize_t n = Ev.shape[0], i, j
    C_arr = np.empty((n, n))
    cdef double[:, ::1] C = C_arr
    with nogil:
        for i in range(n):
            for j in range(i):
                C[i, j] = exp(-Ev[i, j])
    return _factor_from_corr(C, r, np.ascontiguousarray(y, dtype=np.float64))


def factor_stats_d(D, gamma, double r, y):
    """:func:`factor_stats` with ``E = sum_k gamma_k D[k]``; only the lower triangle is formed."""
    cdef const double[:, :, ::1] Dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t p = Dv.shape[0], n = Dv.shape[1], i, j, k
    cdef double s
    C_arr = np.empty((n, n))
    cdef double[:, ::1] C = C_arr
    with nogil:
        for i in range(n):
            for j in range(i):
                s = 0.0
                for k in range(p):
                    if g[k] != 0.0:
                        s += g[k] * Dv[k, i, j]
                C[i, j] = exp(-s)
    return _factor_from_corr(C, r, np.ascontiguousarray(y, dtype=np.float64))


def marginal_mean_grad(x, X, gammas, alphas, rs, mus):
    """Draw-averaged predictive mean at one point and its gradient."""
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] G = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef const double[:, ::1] A = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[::1] rv = np.ascontiguousarray(rs, dtype=np.float64)
    cdef const double[::1] mv = np.ascontiguousarray(mus, dtype=np.float64)
    cdef Py_ssize_t m = G.shape[0], n = Xv.shape[0], p = Xv.shape[1], t, i, k
    grad_arr = np.zeros(p)
    cdef double[::1] grad = grad_arr
    diff_arr = np.empty((n, p))
    cdef double[:, ::1] diff = diff_arr
    cdef double mean = 0.0, s, w, d
    with nogil:
        for i in range(n):
            for k in range(p):
                diff[i, k] = xv[k] - Xv[i, k]
        for t in range(m):
            mean += mv[t]
            for i in range(n):
                s = 0.0
                for k in range(p):
                    d = diff[i, k]
                    s += G[t, k] * d * d
                w = exp(-s) * A[t, i] * rv[t]
                mean += w
                for k in range(p):
                    grad[k] -= 2.0 * G[t, k] * diff[i, k] * w
        for k in range(p):
            grad[k] /= m
    return mean / m, grad_arr


def marginal_moments_grad(x, X, gammas, alphas, rs, mus, sig2s, Linvs):
    """Draw-averaged predictive mean and variance at one point with both gradients."""
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] G = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef const double[:, ::1] A = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[::1] rv = np.ascontiguousarray(rs, dtype=np.float64)
    cdef const double[::1] mv = np.ascontiguousarray(mus, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(sig2s, dtype=np.float64)
    cdef double[:, :, ::1] Li = np.ascontiguousarray(Linvs, dtype=np.float64)
    cdef Py_ssize_t m = G.shape[0], n = Xv.shape[0], p = Xv.shape[1], t, i, k
    cdef int nn = <int>n, one = 1
    cdef char uplo = b'U'
    cdef char tr_t = b'T'
    cdef char tr_n = b'N'
    cdef char diag = b'N'
    dmean_arr = np.zeros(p)
    dvar_arr = np.zeros(p)
    cdef double[::1] dmean = dmean_arr
    cdef double[::1] dvar = dvar_arr
    diff_arr = np.empty((n, p))
    cdef double[:, ::1] diff = diff_arr
    K_arr = np.empty(n)
    v_arr = np.empty(n)
    cdef double[::1] K = K_arr
    cdef double[::1] v = v_arr
    cdef double mean = 0.0, var = 0.0, s, d, kwk, var_t, ra, c
    with nogil:
        for i in range(n):
            for k in range(p):
                diff[i, k] = xv[k] - Xv[i, k]
        for t in range(m):
            ra = rv[t]
            mean += mv[t]
            for i in range(n):
                s = 0.0
                for k in range(p):
                    d = diff[i, k]
                    s += G[t, k] * d * d
                K[i] = exp(-s)
                v[i] = K[i]
                mean += ra * A[t, i] * K[i]
                for k in range(p):
                    dmean[k] -= 2.0 * G[t, k] * diff[i, k] * K[i] * ra * A[t, i]
            # v = Linv k (row-major lower is column-major upper, so transpose)
            dtrmv(&uplo, &tr_t, &diag, &nn, &Li[t, 0, 0], &nn, &v[0], &one)
            kwk = 0.0
            for i in range(n):
                kwk += v[i] * v[i]
            var_t = sv[t] * (1.0 - ra * kwk)
            if var_t <= 0.0:
                continue
            var += var_t
            # v = Linv' v = W^-1 k
            dtrmv(&uplo, &tr_n, &diag, &nn, &Li[t, 0, 0], &nn, &v[0], &one)
            c = -2.0 * sv[t] * ra
            for i in range(n):
                for k in range(p):
                    dvar[k] += c * (-2.0 * G[t, k] * diff[i, k] * K[i]) * v[i]
        for k in range(p):
            dmean[k] /= m
            dvar[k] /= m
    return mean / m, var / m, dmean_arr, dvar_arr
