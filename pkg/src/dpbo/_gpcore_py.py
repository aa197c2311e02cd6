"""Pure-numpy fallback for the compiled core.

Mirrors the ``dpbo._gpcore`` API exactly; selected by ``dpbo.backend``
when the extension is unavailable or DPBO_PURE_PYTHON is set.
"""

import numpy as np
from scipy.linalg import solve_triangular

SE = 0
MATERN52 = 1

_SQRT5 = np.sqrt(5.0)


def _kernel_of_sqdist(r2, ell, family):
    if family == SE:
        return np.exp(-r2 / (2.0 * ell * ell))
    r = np.sqrt(r2)
    s = _SQRT5 * r / ell
    return (1.0 + s + 5.0 * r2 / (3.0 * ell * ell)) * np.exp(-s)


def gram(points, ell, family):
    """Kernel matrix of a point set; unit diagonal by normalization."""
    pts = np.asarray(points, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    G = _kernel_of_sqdist(r2, ell, family)
    np.fill_diagonal(G, 1.0)
    return G


def cross_gram(a, b, ell, family):
    """Rectangular kernel matrix between two point sets."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = a[:, None, :] - b[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    return _kernel_of_sqdist(r2, ell, family)


def posterior_from_gram(G, idx, values, noise, jitter):
    """Posterior mean and variance at every grid point.

    Returns ``(mu, var, chol, alpha)``; variances are raw (possibly tiny
    negatives), clamping is the caller's policy.
    """
    idx = np.asarray(idx)
    values = np.asarray(values, dtype=np.float64)
    n = G.shape[0]
    T = idx.shape[0]
    if T == 0:
        return np.zeros(n), np.ones(n), np.zeros((0, 0)), np.zeros(0)

    K = G[np.ix_(idx, idx)] + (noise + jitter) * np.eye(T)
    L = np.linalg.cholesky(K)  # LinAlgError on singular models
    cross = G[:, idx]
    tmp = solve_triangular(L, values, lower=True)
    alpha = solve_triangular(L.T, tmp, lower=False)
    mu = cross @ alpha
    S = solve_triangular(L, cross.T, lower=True)
    var = 1.0 - np.einsum("ij,ij->j", S, S)
    return mu, var, L, alpha


def ucb_argmax(means, variances, beta):
    """Index maximizing mean + sqrt(beta) * std; ties go to the lowest index."""
    means = np.asarray(means)
    if means.shape[0] == 0:
        raise ValueError("empty candidate set")
    scores = means + np.sqrt(beta) * np.sqrt(np.clip(variances, 0.0, None))
    return int(np.argmax(scores))
