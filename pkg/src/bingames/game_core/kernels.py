"""Probability kernels shared by the solver, the simulator and the estimators.

Thresholds map to marginal choice probabilities by ``alpha_j = F_j(u*_j)``, with
``+inf -> 1`` and ``-inf -> 0`` handled exactly. Profile and belief
probabilities are built from subset lower-orthant probabilities by
inclusion-exclusion (see :func:`profiles.mobius_matrix`).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import BoundaryError, DomainError
from .copulas import Copula, GaussianCopula, IndependenceCopula
from .profiles import all_profiles, mobius_matrix, profile_index, subset_levels


@dataclass(frozen=True)
class ThresholdProfile:
    """Equilibrium cutoffs ``u_star`` (extended reals) at covariate profile ``x``."""

    u_star: tuple
    x: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "u_star", tuple(float(u) for u in np.ravel(self.u_star)))
        object.__setattr__(self, "x", tuple(float(v) for v in np.ravel(self.x)))
        if any(np.isnan(u) for u in self.u_star):
            raise DomainError("thresholds must not be NaN")

    @property
    def array(self):
        return np.array(self.u_star)

    def alpha(self, marginals):
        return thresholds_to_alpha(marginals, self.array)


def _as_thresholds(u_star):
    if isinstance(u_star, ThresholdProfile):
        return u_star.array
    return np.asarray(u_star, dtype=float)


def thresholds_to_alpha(marginals, u_star):
    """``alpha_j = F_j(u*_j)`` for thresholds of shape ``(..., I)``."""
    u = _as_thresholds(u_star)
    out = np.empty(u.shape)
    for j, m in enumerate(marginals):
        uj = u[..., j]
        a = np.where(np.isposinf(uj), 1.0, 0.0)
        fin = np.isfinite(uj)
        if np.any(fin):
            a = np.asarray(a, dtype=float)
            a[fin] = m.cdf(uj[fin])
        out[..., j] = a
    return out


def copula_cdf(c: Copula, alpha):
    """C(alpha); raises :class:`DomainError` for coordinates outside [0, 1]."""
    return c.cdf(alpha)


def conditional_copula(c: Copula, i, alpha_i, alpha_rest):
    """``P(V_j <= alpha_j, j != i | V_i = alpha_i)``.

    ``alpha_rest`` lists the rival limits in player order with ``i`` removed.
    """
    alpha_i = np.asarray(alpha_i, dtype=float)
    alpha_rest = np.asarray(alpha_rest, dtype=float)
    shape = np.broadcast_shapes(alpha_i.shape, alpha_rest.shape[:-1])
    full = np.empty(shape + (c.dim,))
    rest = [j for j in range(c.dim) if j != i]
    full[..., rest] = np.broadcast_to(alpha_rest, shape + (c.dim - 1,))
    full[..., i] = np.broadcast_to(alpha_i, shape)
    return c.conditional(i, full)


def profile_probabilities(c: Copula, alpha):
    """Probabilities of all ``2**I`` action profiles, shape ``(..., 2**I)``."""
    alpha = np.asarray(alpha, dtype=float)
    I = alpha.shape[-1]
    if isinstance(c, IndependenceCopula):
        P = all_profiles(I)
        return np.prod(np.where(P == 1, alpha[..., None, :], 1.0 - alpha[..., None, :]), axis=-1)
    lower = c.cdf(subset_levels(alpha))
    out = lower @ mobius_matrix(I).T
    return np.clip(out, 0.0, 1.0)


def rectangle_probability(c: Copula, marginals, u_star, a):
    """``P(U_j <= u*_j for a_j = 1, U_j > u*_j for a_j = 0)``."""
    alpha = thresholds_to_alpha(marginals, u_star)
    return profile_probabilities(c, alpha)[..., profile_index(a)]


def belief_from_alpha(c: Copula, i, alpha):
    """Rival-profile probabilities given ``V_i = alpha_i``, shape ``(..., 2**(I-1))``.

    ``alpha`` has shape ``(..., I)``; coordinate ``i`` is the conditioning level
    and must lie in (0, 1), the others are the rivals' choice probabilities.
    """
    alpha = np.asarray(alpha, dtype=float)
    I = alpha.shape[-1]
    rest = [j for j in range(I) if j != i]
    ai = alpha[..., i]
    if np.any((ai <= 0.0) | (ai >= 1.0)):
        raise BoundaryError("conditioning level must lie strictly inside (0, 1)")
    if isinstance(c, IndependenceCopula):
        P = all_profiles(I - 1)
        ar = alpha[..., rest]
        return np.prod(np.where(P == 1, ar[..., None, :], 1.0 - ar[..., None, :]), axis=-1)
    if I == 2:
        # the empty rival set has conditional probability one
        lower = c.conditional(i, alpha)
        return np.clip(np.stack([1.0 - lower, lower], axis=-1), 0.0, 1.0)
    levels = subset_levels(alpha[..., rest])  # (..., 2**(I-1), I-1)
    full = np.empty(levels.shape[:-1] + (I,))
    full[..., rest] = levels
    full[..., i] = ai[..., None]
    lower = c.conditional(i, full)
    return np.clip(lower @ mobius_matrix(I - 1).T, 0.0, 1.0)


def belief_sigma(c: Copula, marginals, u_star, i, u_i):
    """Belief of player ``i`` of type ``u_i`` over rival profiles.

    Returns an array of length ``2**(I-1)`` (or ``(..., 2**(I-1))`` for array
    ``u_i``) in product order over rivals.
    """
    u = _as_thresholds(u_star)
    alpha = thresholds_to_alpha(marginals, u)
    u_i = np.asarray(u_i, dtype=float)
    if np.any(~np.isfinite(u_i)):
        raise BoundaryError("own type must be finite")
    ai = np.asarray(marginals[i].cdf(u_i), dtype=float)
    if np.any((ai <= 0.0) | (ai >= 1.0)):
        raise BoundaryError("own type lies on the boundary of its support")
    full = np.broadcast_to(alpha, ai.shape + alpha.shape[-1:]).copy()
    full[..., i] = ai
    return belief_from_alpha(c, i, full)


def expected_payoff_gap(g, x, u_star, i, u_i):
    """``sum_a pi_i(a, x) sigma(a | x, u_i) - u_i``."""
    pi = g.payoffs[i].values(np.asarray(x, dtype=float))
    sigma = belief_sigma(g.copula, g.marginals, u_star, i, u_i)
    return sigma @ pi - np.asarray(u_i, dtype=float)


def check_prd(c: Copula, n_probe=9, tol=1e-10, return_witness=False):
    """Positive regression dependence on a probe grid.

    Gaussian copulas are decided analytically (all correlations nonnegative);
    other families are probed on upper orthants ``{V_{-i} > beta}``, whose
    conditional probability must not decrease in the conditioning level.
    """
    if isinstance(c, IndependenceCopula):
        return (True, None) if return_witness else True
    I = c.dim
    if isinstance(c, GaussianCopula) and not return_witness:
        return bool(np.all(c.corr[~np.eye(I, dtype=bool)] >= 0))
    sign = (-1.0) ** all_profiles(I - 1).sum(axis=1)  # survival from lower orthants
    grid = (np.arange(n_probe) + 0.5) / n_probe
    witness = None
    for i in range(I):
        rest = [j for j in range(I) if j != i]
        mesh = np.stack(np.meshgrid(*([grid] * (I - 1)), indexing="ij"), axis=-1).reshape(-1, I - 1)
        levels = subset_levels(mesh)  # (m, 2**(I-1), I-1)
        full = np.empty((len(grid),) + levels.shape[:-1] + (I,))
        full[..., rest] = levels[None]
        full[..., i] = grid[:, None, None]
        lower = c.conditional(i, full)  # (n_probe, m, 2**(I-1))
        upper = lower @ sign
        d = np.diff(upper, axis=0)
        if d.min() < -tol:
            k, m = np.unravel_index(np.argmin(d), d.shape)
            witness = {"player": i, "alpha_i": (float(grid[k]), float(grid[k + 1])),
                       "beta": mesh[m].tolist(), "drop": float(-d[k, m])}
            break
    ok = witness is None
    if isinstance(c, GaussianCopula):
        off = c.corr[~np.eye(I, dtype=bool)]
        ok = bool(np.all(off >= 0))
    return (ok, witness) if return_witness else ok


def check_scp(payoffs, x_grid, tol=0.0):
    """Strategic complements: ``pi_i(a) <= pi_i(a')`` whenever ``a <= a'`` on ``x_grid``."""
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    for p in payoffs:
        P = all_profiles(p.n_players - 1)
        leq = np.all(P[:, None, :] <= P[None, :, :], axis=2)
        vals = p.values(x_grid)  # (m, R)
        diff = vals[:, :, None] - vals[:, None, :]  # pi(a) - pi(a')
        if np.any(diff[:, leq] > tol):
            return False
    return True
