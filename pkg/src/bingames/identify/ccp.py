"""Marginal choice probabilities ``alpha_i(x) = E(Y_i | X = x)``.

Two estimators share one interface: an exact population lookup built from a
:class:`~bingames.simulate.PopulationTable`, and a sieve binary-choice MLE that
fits ``F(gamma_i(x))`` with a polynomial ``gamma_i`` and a probit or logit link.
"""

import itertools

import numpy as np
from scipy import linalg, optimize, special

from ..errors import CellEmpty, DomainError, SingularDesign


class CCPEstimate:
    """Evaluable ``alpha_hat(x)``, shape ``(m, I)`` for ``x`` of shape ``(m, d)``."""

    n_players = 0

    def alpha(self, x):
        raise NotImplementedError

    def gradient(self, x):
        """``d alpha_i / d x_k``, shape ``(m, I, d)``."""
        raise NotImplementedError

    def describe(self):
        return {}


class PopulationCCPEstimate(CCPEstimate):
    """Exact choice probabilities on the points of a population table.

    Off-table points are solved on demand when ``game`` is given.
    """

    def __init__(self, table, game=None, rule=None, decimals=9, **solve_kw):
        self.table = table
        self.game = game
        self.rule = rule
        self.solve_kw = solve_kw
        self.decimals = decimals
        self.n_players = table.alpha.shape[1]
        self._index = {tuple(np.round(x, decimals)): k for k, x in enumerate(table.x)}

    def _one(self, x):
        k = self._index.get(tuple(np.round(x, self.decimals)))
        if k is not None:
            return self.table.alpha[k]
        if self.game is None:
            raise DomainError(f"x = {tuple(x)} is not a point of the population table")
        from ..simulate import population_ccp
        return population_ccp(self.game, x, self.rule, **self.solve_kw).alpha

    def alpha(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.array([self._one(r) for r in x])

    def gradient(self, x, step=1e-5):
        if self.game is None:
            raise DomainError("population gradients need the game")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((len(x), self.n_players, x.shape[1]))
        for k in range(x.shape[1]):
            e = np.zeros(x.shape[1])
            e[k] = step
            out[:, :, k] = (self.alpha(x + e) - self.alpha(x - e)) / (2 * step)
        return out

    def describe(self):
        return {"kind": "population", "points": len(self.table)}


# ---------------------------------------------------------------------------
# sieve MLE

def _exponents(d, degree):
    return [e for total in range(degree + 1)
            for e in itertools.product(range(total + 1), repeat=d) if sum(e) == total]


def _column_name(e):
    parts = [f"x{k + 1}" + (f"^{p}" if p > 1 else "") for k, p in enumerate(e) if p]
    return "*".join(parts) if parts else "1"


class PolynomialBasis:
    """Monomials of total degree ``<= degree`` in standardized covariates."""

    def __init__(self, x, degree):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        self.degree = int(degree)
        self.center = x.mean(axis=0)
        sd = x.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)
        self.exponents = np.array(_exponents(x.shape[1], self.degree), dtype=int)
        self.names = [_column_name(e) for e in self.exponents]

    def __call__(self, x):
        z = (np.atleast_2d(np.asarray(x, dtype=float)) - self.center) / self.scale
        return np.prod(z[:, None, :] ** self.exponents[None, :, :], axis=2)

    def derivative(self, x, k):
        """Derivative of every column with respect to raw covariate ``k``."""
        z = (np.atleast_2d(np.asarray(x, dtype=float)) - self.center) / self.scale
        e = self.exponents.copy()
        coef = e[:, k].astype(float)
        e[:, k] = np.maximum(e[:, k] - 1, 0)
        return coef * np.prod(z[:, None, :] ** e[None, :, :], axis=2) / self.scale[k]


_LINKS = {
    "probit": (special.ndtr, lambda t: np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi)),
    "logit": (special.expit, lambda t: special.expit(t) * special.expit(-t)),
}


def _check_rank(B, names, tol=1e-10):
    _, R, piv = linalg.qr(B, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(diag[0], 1e-300))) if diag.size else 0
    if rank < B.shape[1]:
        raise SingularDesign([names[j] for j in sorted(piv[rank:])])


def fit_binary_sieve(B, y, w, link="probit", ridge=1e-8):
    """Weighted binary-choice MLE ``P(y = 1) = F(B @ theta)``.

    ``y`` may hold fractions (cell frequencies) with ``w`` the cell counts.
    A tiny ridge keeps separable designs finite.
    """
    F, f = _LINKS[link]
    eps = 1e-12

    def nll(theta):
        p = np.clip(F(B @ theta), eps, 1 - eps)
        return -(w * (y * np.log(p) + (1 - y) * np.log1p(-p))).sum() + ridge * theta @ theta

    def grad(theta):
        t = B @ theta
        p = np.clip(F(t), eps, 1 - eps)
        s = w * f(t) * (y - p) / (p * (1 - p))
        return -(B.T @ s) + 2 * ridge * theta

    def hess(theta):
        # expected information
        t = B @ theta
        p = np.clip(F(t), eps, 1 - eps)
        v = w * f(t) ** 2 / (p * (1 - p))
        return (B.T * v) @ B + 2 * ridge * np.eye(B.shape[1])

    theta0 = np.zeros(B.shape[1])
    res = optimize.minimize(nll, theta0, jac=grad, hess=hess, method="trust-exact",
                            options={"gtol": 1e-9, "maxiter": 500})
    return res.x, res


class SieveCCP(CCPEstimate):
    """Per-player sieve MLE ``alpha_hat_i(x) = F(b(x)' theta_i)``.

    Parameters
    ----------
    x, y : ndarray
        Covariates (n, d) and actions (n, I).
    degree : int
        Total polynomial degree of the basis.
    link : {"probit", "logit"}
    min_n : int
        Smallest sample accepted.
    """

    def __init__(self, x, y, degree=3, link="probit", min_n=50):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float)
        if len(y) < min_n:
            raise CellEmpty(f"sieve CCP needs at least {min_n} observations, got {len(y)}")
        if not np.all(np.isfinite(x)):
            raise DomainError("covariates must be finite")
        if link not in _LINKS:
            raise DomainError(f"unknown link {link!r}")
        self.link = link
        self.n_players = y.shape[1]
        self.basis = PolynomialBasis(x, degree)
        # fit on distinct covariate rows with counts
        ux, inv, cnt = np.unique(x, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        B = self.basis(ux)
        _check_rank(B, self.basis.names)
        self.theta = []
        self.converged = []
        for i in range(self.n_players):
            freq = np.bincount(inv, weights=y[:, i], minlength=len(ux)) / cnt
            theta, res = fit_binary_sieve(B, freq, cnt.astype(float), link)
            self.theta.append(theta)
            self.converged.append(bool(res.success))
        self.theta = np.array(self.theta)
        self.n = len(y)

    def index(self, x):
        return self.basis(x) @ self.theta.T

    def alpha(self, x):
        return _LINKS[self.link][0](self.index(x))

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dens = _LINKS[self.link][1](self.index(x))  # (m, I)
        out = np.empty((len(x), self.n_players, x.shape[1]))
        for k in range(x.shape[1]):
            out[:, :, k] = dens * (self.basis.derivative(x, k) @ self.theta.T)
        return out

    def describe(self):
        return {"kind": "sieve", "degree": self.basis.degree, "link": self.link, "n": self.n,
                "columns": self.basis.names, "converged": self.converged}


def estimate_ccp(data, degree=3, link="probit", min_n=50):
    """Sieve CCP estimate from a :class:`~bingames.simulate.Dataset`."""
    return SieveCCP(data.x, data.y, degree=degree, link=link, min_n=min_n)
