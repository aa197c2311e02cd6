# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Gram construction and grid-wide GP posteriors.

The Bayesian-optimization loop refits the posterior once per step, and
repetition studies run that loop 10^4-10^5 times on small grids, so the
per-call overhead of a numpy pipeline dominates there.  This module fuses
the whole refit (slice Gram, Cholesky, solves, predict everywhere) into
one call.  ``dpbo._gpcore_py`` is the drop-in numpy fallback.
"""

import numpy as np

from libc.math cimport exp, log1p, sqrt

SE = 0
MATERN52 = 1


cdef inline double _kval(double r2, double ell, int family) noexcept nogil:
    cdef double r, s
    if family == 0:
        return exp(-r2 / (2.0 * ell * ell))
    r = sqrt(r2)
    s = sqrt(5.0) * r / ell
    return (1.0 + s + 5.0 * r2 / (3.0 * ell * ell)) * exp(-s)


def gram(const double[:, ::1] points, double ell, int family):
    """Kernel matrix of a point set; unit diagonal by normalization."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double r2, diff, val
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] G = out
    with nogil:
        for i in range(n):
            G[i, i] = 1.0
            for j in range(i):
                r2 = 0.0
                for k in range(d):
                    diff = points[i, k] - points[j, k]
                    r2 += diff * diff
                val = _kval(r2, ell, family)
                G[i, j] = val
                G[j, i] = val
    return out


def cross_gram(const double[:, ::1] a, const double[:, ::1] b, double ell, int family):
    """Rectangular kernel matrix between two point sets."""
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t nb = b.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double r2, diff
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] C = out
    with nogil:
        for i in range(na):
            for j in range(nb):
                r2 = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    r2 += diff * diff
                C[i, j] = _kval(r2, ell, family)
    return out


def posterior_from_gram(const double[:, ::1] G, const Py_ssize_t[::1] idx,
                        const double[::1] values, double noise, double jitter):
    """Posterior mean and variance at every grid point.

    Returns ``(mu, var, chol, alpha)`` where ``chol`` is the lower Cholesky
    factor of the observed block plus ``(noise + jitter) I`` and ``alpha``
    solves that system against the observed values.  Variances are raw
    (possibly tiny negatives); clamping is the caller's policy.
    """
    cdef Py_ssize_t T = idx.shape[0]
    cdef Py_ssize_t n = G.shape[0]
    cdef Py_ssize_t i, j, k, gi
    cdef double acc, diag_add, piv, m, v

    mu_arr = np.zeros(n, dtype=np.float64)
    var_arr = np.ones(n, dtype=np.float64)
    if T == 0:
        return mu_arr, var_arr, np.zeros((0, 0)), np.zeros(0)

    L_arr = np.zeros((T, T), dtype=np.float64)
    alpha_arr = np.empty(T, dtype=np.float64)
    work_arr = np.empty(T, dtype=np.float64)
    cdef double[::1] mu = mu_arr
    cdef double[::1] var = var_arr
    cdef double[:, ::1] L = L_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] w = work_arr
    cdef bint failed = 0
    diag_add = noise + jitter

    with nogil:
        # lower-triangular Cholesky of G[idx][:, idx] + diag_add * I
        for i in range(T):
            for j in range(i + 1):
                acc = G[idx[i], idx[j]]
                if i == j:
                    acc += diag_add
                for k in range(j):
                    acc -= L[i, k] * L[j, k]
                if i == j:
                    if acc <= 0.0:
                        failed = 1
                        break
                    L[i, i] = sqrt(acc)
                else:
                    L[i, j] = acc / L[j, j]
            if failed:
                break

        if not failed:
            # alpha = (L L^T)^{-1} values
            for i in range(T):
                acc = values[i]
                for k in range(i):
                    acc -= L[i, k] * alpha[k]
                alpha[i] = acc / L[i, i]
            for i in range(T - 1, -1, -1):
                acc = alpha[i]
                for k in range(i + 1, T):
                    acc -= L[k, i] * alpha[k]
                alpha[i] = acc / L[i, i]

            # per grid point: mean = k_g . alpha, var = 1 - ||L^{-1} k_g||^2
            for gi in range(n):
                m = 0.0
                for i in range(T):
                    m += G[gi, idx[i]] * alpha[i]
                mu[gi] = m
                v = 1.0
                for i in range(T):
                    acc = G[gi, idx[i]]
                    for k in range(i):
                        acc -= L[i, k] * w[k]
                    w[i] = acc / L[i, i]
                    v -= w[i] * w[i]
                var[gi] = v

    if failed:
        raise np.linalg.LinAlgError(
            "observed-block covariance is not positive definite"
        )
    return mu_arr, var_arr, L_arr, alpha_arr


def ucb_argmax(const double[::1] means, const double[::1] variances, double beta):
    """Index maximizing mean + sqrt(beta) * std; ties go to the lowest index."""
    cdef Py_ssize_t n = means.shape[0]
    cdef Py_ssize_t i, best = 0
    cdef double sb = sqrt(beta)
    cdef double v, score, best_score
    if n == 0:
        raise ValueError("empty candidate set")
    with nogil:
        best_score = -1e300
        for i in range(n):
            v = variances[i]
            if v < 0.0:
                v = 0.0
            score = means[i] + sb * sqrt(v)
            if score > best_score:
                best_score = score
                best = i
    return best
