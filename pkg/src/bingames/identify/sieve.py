"""Sample-mode payoff and quantile estimation (second step of the sieve estimator).

The quantile function is expanded in an orthonormal basis of L2(0, 1): shifted
Legendre polynomials ``psi_k(a) = sqrt(2k + 1) P_k(2a - 1)``, or normalized
Hermite polynomials of the normal score, ``psi_k(a) = He_k(z) / sqrt(k!)`` with
``z = Phi^{-1}(a)``, which stay well conditioned near 0 and 1. For each
own-covariate cell the payoff vector implied by a candidate ``Q = sum_k q_k psi_k``
is the within-cell least-squares projection of ``Q(alpha_hat)`` on the
estimated beliefs, which is linear in ``q``: ``pi(., cell | q) = A_cell q``.
The coefficients minimize the squared equilibrium-condition residuals subject
to ``pi(a0, x*) = 0`` and ``||pi(., x*)|| = 1``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import eval_hermitenorm, eval_legendre, factorial, ndtri

from ..errors import DomainError, NormalizationInfeasible
from .payoffs import A0, CellPayoff, recover_quantiles, sign_table
from .rank import DEFICIENT


def legendre_basis(a, K):
    """``(len(a), K)`` matrix of orthonormal shifted Legendre polynomials."""
    a = np.asarray(a, dtype=float)
    t = 2.0 * a - 1.0
    return np.stack([np.sqrt(2 * k + 1) * eval_legendre(k, t) for k in range(K)], axis=-1)


def hermite_basis(a, K):
    """``(len(a), K)`` matrix of normalized Hermite polynomials of ``Phi^{-1}(a)``."""
    z = ndtri(np.asarray(a, dtype=float))
    return np.stack([eval_hermitenorm(k, z) / np.sqrt(factorial(k)) for k in range(K)], axis=-1)


BASES = {"legendre": legendre_basis, "hermite": hermite_basis}


def get_basis(name):
    try:
        return BASES[name]
    except KeyError:
        raise DomainError(f"unknown quantile basis {name!r}; expected one of {sorted(BASES)}") from None


@dataclass
class SieveStep2:
    """Second-step estimates for one player."""

    player: int
    x_star: float
    q: np.ndarray
    payoffs: dict
    rank: dict
    quantiles: object
    objective: float
    skipped: dict = field(default_factory=dict)
    a0: int = A0
    trace: list = field(default_factory=list)
    basis: str = "legendre"

    @property
    def cells(self):
        return sorted(self.payoffs)

    def quantile(self, a):
        return get_basis(self.basis)(a, len(self.q)) @ self.q

    def payoff_matrix(self):
        keys = self.cells
        return np.array(keys), np.array([self.payoffs[k].values for k in keys])

    def signs(self):
        return {k: sign_table(v.values, self.a0) for k, v in self.payoffs.items()}

    def report(self):
        return {"x_star": self.x_star, "a0": self.a0, "K": len(self.q), "basis": self.basis,
                "q": [float(v) for v in self.q], "objective": self.objective,
                "cells": {repr(k): {"rank": s.rank, "rank_class": s.rank_class,
                                    "identified": k in self.payoffs}
                          for k, s in sorted(self.rank.items())},
                "skipped": {repr(k): v for k, v in self.skipped.items()},
                "quantiles_monotone": self.quantiles.monotone,
                "quantile_max_violation": self.quantiles.max_violation}


def _cell_operator(cell, K, basis=legendre_basis):
    """``A`` (R, K) with ``pi(., cell | q) = A q``, and residual rows ``(m, K)``."""
    S, w = cell.sigma, cell.weight
    Psi = basis(cell.own, K)
    M = (S * w[:, None]).T @ S
    B = (S * w[:, None]).T @ Psi
    A, _, rank, _ = linalg.lstsq(M, B)
    resid = S @ A - Psi
    return A, resid, rank


def _pooled_operator(cells, target, keys, K, basis, h):
    """Kernel-localized version of :func:`_cell_operator`.

    Pools the cells within ``h`` of ``target`` with Epanechnikov weights and
    lets the payoff row vary linearly in the own covariate; the intercept is
    the payoff at ``target``. Residual rows come with their weights.
    """
    S_all, P_all, w_all = [], [], []
    for c in keys:
        t = (c - target) / h
        if abs(t) >= 1:
            continue
        cell = cells[c]
        kw = 0.75 * (1 - t * t)
        S = cell.sigma
        S_all.append(np.hstack([S, S * (c - target)]))
        P_all.append(basis(cell.own, K))
        w_all.append(cell.weight * kw)
    S, Psi, w = np.vstack(S_all), np.vstack(P_all), np.concatenate(w_all)
    M = (S * w[:, None]).T @ S
    B = (S * w[:, None]).T @ Psi
    A, _, rank, _ = linalg.lstsq(M, B)
    resid = S @ A - Psi
    n_r = cells[target].sigma.shape[1]
    # a pooled fit needs the intercept block identified even when slopes are not
    return A[:n_r], resid, w, rank >= n_r


def sieve_step2(cells, systems=None, x_star=None, K=6, ridge=1e-10, basis="legendre",
                cell_bandwidth=None):
    """Constrained least-squares estimate of ``Q_i`` and ``pi_i`` over all cells.

    Parameters
    ----------
    cells : dict
        Cell key -> :class:`CellData` (estimated beliefs, weights = counts).
    x_star : float, optional
        Normalization cell; the cell with the widest own choice-probability
        range by default.
    K : int
        Number of basis functions.
    basis : {"legendre", "hermite"}
    cell_bandwidth : float, optional
        Pool neighbouring own-covariate cells with a local-linear kernel fit
        of this half-width; per-cell projections when None.
    """
    psi = get_basis(basis)
    keys = sorted(cells)
    player = cells[keys[0]].player
    n_r = cells[keys[0]].sigma.shape[1]
    ops, skipped = {}, {}
    for k in keys:
        cell = cells[k]
        if len(cell.distinct_own()) < 2:
            skipped[k] = "singleton choice probability"
            continue
        A, resid, rank = _cell_operator(cell, K, psi)
        if rank < n_r:
            skipped[k] = "beliefs do not vary within the cell"
            continue
        ops[k] = (A, resid, cell.weight)
    if cell_bandwidth is not None:
        if not cell_bandwidth > 0:
            raise DomainError("cell_bandwidth must be positive")
        usable = sorted(ops)
        for k in usable:
            A, resid, w, ok = _pooled_operator(cells, k, usable, K, psi, float(cell_bandwidth))
            if ok:
                ops[k] = (A, resid, w)
    if x_star is None:
        widths = {k: np.ptp(cells[k].own) for k in ops}
        if not widths:
            raise NormalizationInfeasible("no cell with varying choice probabilities")
        x_star = max(widths, key=lambda k: (widths[k], -k))
    if x_star not in ops:
        raise NormalizationInfeasible(f"normalization cell {x_star!r} is not usable")
    W = np.zeros((K, K))
    total = 0.0
    for k, (A, resid, w) in ops.items():
        W += (resid * w[:, None]).T @ resid
        total += w.sum()
    W /= total
    A_star = ops[x_star][0]
    L = A_star[A0][None, :]
    N = A_star.T @ A_star
    Z = linalg.null_space(L)
    Wz, Nz = Z.T @ W @ Z, Z.T @ N @ Z
    delta = ridge * max(np.trace(Wz), 1e-300)
    vals, vecs = linalg.eigh(Nz, Wz + delta * np.eye(len(Wz)))
    q = Z @ vecs[:, -1]
    q /= np.sqrt(q @ N @ q)
    # orient so that the quantile function increases over the observed range
    a_all = np.concatenate([cells[k].own for k in ops])
    grid = np.linspace(a_all.min(), a_all.max(), 101)
    if np.mean(np.diff(psi(grid, K) @ q)) < 0:
        q = -q
    payoffs = {k: CellPayoff(player, k, A @ q, systems[k].rank_class if systems and k in systems
                             else DEFICIENT, "sieve", "monotone_quantile", len(cells[k]))
               for k, (A, _, _) in ops.items()}
    qgrid = recover_quantiles([(cells[k].own, psi(cells[k].own, K) @ q) for k in ops])
    return SieveStep2(player, x_star, q, payoffs, systems or {}, qgrid, float(q @ W @ q), skipped,
                      trace=[sorted(ops)], basis=basis)
