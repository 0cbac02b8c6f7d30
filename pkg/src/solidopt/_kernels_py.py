"""Pure numpy implementations of the hot GP kernels.

These are the reference versions; ``_kernels_c`` (Cython) mirrors every
function here with identical signatures and results up to round-off.
"""

import numpy as np
from scipy.linalg import solve_triangular

from solidopt.errors import NotPositiveDefiniteError

JITTER_START = 1e-10
JITTER_MAX = 1e-6


def factor_stats(E, r, y):
    """Factorize ``W = r exp(-E) + (1 - r) I`` and return the quadratic forms the sampler needs.

    Returns
    -------
    L : ndarray (n, n)
        Lower Cholesky factor of W (with whatever jitter was needed).
    logdet : float
        log |W|.
    yWy, oWy, oWo : float
        y'W^-1 y, 1'W^-1 y and 1'W^-1 1.
    """
    n = E.shape[0]
    W = r * np.exp(-E)
    W[np.diag_indices(n)] = 1.0
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(W + jitter * np.eye(n) if jitter else W)
            break
        except np.linalg.LinAlgError:
            # plain W first; jitter only when the factorization fails
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise NotPositiveDefiniteError(f"W_X not positive definite (n={n}, r={r})") from None
    rhs = np.empty((n, 2))
    rhs[:, 0] = y
    rhs[:, 1] = 1.0
    z = solve_triangular(L, rhs, lower=True, check_finite=False)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return L, logdet, float(z[:, 0] @ z[:, 0]), float(z[:, 1] @ z[:, 0]), float(z[:, 1] @ z[:, 1])


def factor_stats_d(D, gamma, r, y):
    """:func:`factor_stats` with ``E = sum_k gamma_k D[k]`` for per-dimension squared distances ``D`` (p, n, n)."""
    return factor_stats(np.tensordot(gamma, D, axes=1), r, y)


def marginal_mean_grad(x, X, gammas, alphas, rs, mus):
    """Draw-averaged predictive mean at one point and its gradient.

    ``gammas`` is (m, p), ``alphas`` (m, n) holds W^-1 (y - mu 1) per draw.
    """
    diff = x - X  # (n, p)
    K = np.exp(-(diff * diff) @ gammas.T)  # (n, m)
    wa = K * (alphas.T * rs)  # (n, m)
    m = len(rs)
    mean = (mus.sum() + wa.sum()) / m
    # d/dx_k of sum_i wa_it = -2 gamma_tk sum_i diff_ik wa_it
    grad = -2.0 * np.einsum("tk,ik,it->k", gammas, diff, wa) / m
    return mean, grad


def marginal_moments_grad(x, X, gammas, alphas, rs, mus, sig2s, Linvs):
    """Draw-averaged predictive mean and variance at one point with both gradients.

    ``Linvs`` (m, n, n) holds the inverse Cholesky factor of each draw's W_X,
    ``sig2s`` the surface variances r/eta.
    """
    m = len(rs)
    diff = x - X
    K = np.exp(-(diff * diff) @ gammas.T).T  # (m, n)
    ra = alphas * rs[:, None]
    mean_t = mus + np.einsum("ti,ti->t", K, ra)
    v = np.einsum("tij,tj->ti", Linvs, K)  # L^-1 k
    winv_k = np.einsum("tji,tj->ti", Linvs, v)  # W^-1 k
    kwk = np.einsum("ti,ti->t", v, v)
    var_t = sig2s * (1.0 - rs * kwk)
    clamped = var_t < 0.0
    var_t[clamped] = 0.0
    # dK_ti/dx_k = -2 gamma_tk diff_ik K_ti
    dK = -2.0 * gammas[:, None, :] * diff[None, :, :] * K[:, :, None]  # (m, n, p)
    dmean_t = np.einsum("tik,ti->tk", dK, ra)
    dvar_t = -2.0 * (sig2s * rs)[:, None] * np.einsum("tik,ti->tk", dK, winv_k)
    dvar_t[clamped] = 0.0
    return mean_t.mean(), var_t.mean(), dmean_t.mean(axis=0), dvar_t.mean(axis=0)


def sq_exp_exponent(X1, X2, gamma):
    """Matrix of sum_k gamma_k (x1_k - x2_k)^2 between the rows of two point sets."""
    d = X1[:, None, :] - X2[None, :, :]
    return (d * d) @ gamma

