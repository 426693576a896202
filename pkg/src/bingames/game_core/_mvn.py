"""Lower-orthant probabilities of standardized multivariate normal vectors.

All routines return ``P(Z_1 <= b_1, ..., Z_d <= b_d)`` for ``Z ~ N(0, R)`` with
``R`` a correlation matrix. Infinite limits are allowed.
"""

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri, owens_t
from scipy.stats import qmc

QMC_POINTS = 2**16
QMC_SEED = 20140501


def bvn_cdf(h, k, r):
    """Bivariate normal CDF via Owen's T function, vectorized over all arguments.

    Accurate to a few ulps for ``|r| < 1``; handles ``h`` or ``k`` equal to 0 or +/-inf.
    """
    h, k, r = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(k, dtype=float), np.asarray(r, dtype=float)
    )
    s = np.sqrt(1.0 - r * r)
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = (k - r * h) / (h * s)
        ak = (h - r * k) / (k * s)
        ah = np.where(h == 0, np.where(k - r * h >= 0, np.inf, -np.inf), ah)
        ak = np.where(k == 0, np.where(h - r * k >= 0, np.inf, -np.inf), ak)
        hk = h * k
        beta = np.where((hk > 0) | ((hk == 0) & (h + k >= 0)), 0.0, 0.5)
        out = 0.5 * (ndtr(h) + ndtr(k)) - owens_t(h, ah) - owens_t(k, ak) - beta
    out = np.where((h == 0) & (k == 0), 0.25 + np.arcsin(r) / (2.0 * np.pi), out)

    # infinite limits collapse to univariate terms
    out = np.where(np.isposinf(h), ndtr(k), out)
    out = np.where(np.isposinf(k), ndtr(h), out)
    out = np.where(np.isposinf(h) & np.isposinf(k), 1.0, out)
    out = np.where(np.isneginf(h) | np.isneginf(k), 0.0, out)
    return np.clip(out, 0.0, 1.0)


def _tvn_cdf_scalar(b, R):
    s2 = np.sqrt(1.0 - R[0, 1] ** 2)
    s3 = np.sqrt(1.0 - R[0, 2] ** 2)
    rc = (R[1, 2] - R[0, 1] * R[0, 2]) / (s2 * s3)

    def integrand(t):
        return np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi) * bvn_cdf(
            (b[1] - R[0, 1] * t) / s2, (b[2] - R[0, 2] * t) / s3, rc
        )

    val, _ = integrate.quad(integrand, -np.inf, b[0], epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def _qmc_cdf_scalar(b, R, n_points=QMC_POINTS, seed=QMC_SEED):
    # separation-of-variables transform on a scrambled Sobol sequence
    d = len(b)
    L = np.linalg.cholesky(R)
    w = qmc.Sobol(d - 1, scramble=True, seed=seed).random(n_points)
    e = np.full(n_points, ndtr(b[0] / L[0, 0]))
    f = e.copy()
    y = np.zeros((n_points, d - 1))
    for j in range(1, d):
        y[:, j - 1] = ndtri(np.clip(w[:, j - 1] * e, 1e-300, 1.0 - 1e-16))
        t = (b[j] - y[:, :j] @ L[j, :j]) / L[j, j]
        e = ndtr(t)
        f *= e
    return float(f.mean())


def mvn_orthant(b, R):
    """Orthant probability ``P(Z <= b)`` for ``Z ~ N(0, R)``.

    Parameters
    ----------
    b : array_like, shape (..., d)
        Upper limits; ``+inf`` coordinates are marginalized out exactly.
    R : ndarray, shape (d, d)
        Correlation matrix.

    Notes
    -----
    d <= 2 is closed form, d == 3 uses adaptive quadrature of the bivariate
    conditional, d >= 4 uses randomized quasi-Monte Carlo with a fixed seed.
    """
    b = np.asarray(b, dtype=float)
    R = np.asarray(R, dtype=float)
    d = b.shape[-1]
    flat = b.reshape(-1, d)
    out = np.empty(flat.shape[0])

    finite = ~np.isposinf(flat)
    patterns, inverse = np.unique(finite, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    for p, pattern in enumerate(patterns):
        rows = np.flatnonzero(inverse == p)
        idx = np.flatnonzero(pattern)
        sub = flat[np.ix_(rows, idx)]
        Rs = R[np.ix_(idx, idx)]
        m = len(idx)
        if m == 0:
            out[rows] = 1.0
        elif m == 1:
            out[rows] = ndtr(sub[:, 0])
        elif m == 2:
            out[rows] = bvn_cdf(sub[:, 0], sub[:, 1], Rs[0, 1])
        else:
            fn = _tvn_cdf_scalar if m == 3 else _qmc_cdf_scalar
            vals = np.empty(len(rows))
            for j, row in enumerate(sub):
                vals[j] = 0.0 if np.any(np.isneginf(row)) else fn(row, Rs)
            out[rows] = vals
    return out.reshape(b.shape[:-1])
