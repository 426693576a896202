"""Partial identification without exclusion restrictions.

Without exclusion, each covariate profile only tells us that the payoff vector
``pi_i(., x)`` lies on the hyperplane ``<pi, sigma(x)> = Q_i(alpha_i(x))``,
where the beliefs ``sigma(x)`` are identified from the data and the quantile
value is not. :func:`transform_structure` builds an observationally
equivalent structure by rescaling payoffs and distorting the quantiles.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..game_core.marginals import TransformedMarginal
from ..game_core.payoffs import CallablePayoff


@dataclass(frozen=True)
class Hyperplane:
    """``{pi : <normal, pi> = offset}`` with a unit normal."""

    normal: np.ndarray
    offset: float
    sigma: np.ndarray
    q: float

    def residual(self, pi):
        return np.asarray(pi, dtype=float) @ self.normal - self.offset

    def contains(self, pi, tol=1e-8):
        return bool(np.all(np.abs(self.residual(pi)) <= tol))

    def describe(self):
        return {"normal": self.normal.tolist(), "offset": float(self.offset),
                "sigma": self.sigma.tolist(), "q": float(self.q)}


def partial_id_hyperplane(sigma, q):
    """Affine restriction on a payoff vector implied by beliefs ``sigma`` and quantile value ``q``.

    Examples
    --------
    >>> h = partial_id_hyperplane([0.5, 0.5], 0.0)
    >>> np.round(h.normal, 4).tolist(), h.offset
    ([0.7071, 0.7071], 0.0)
    """
    sigma = np.asarray(sigma, dtype=float)
    nrm = np.linalg.norm(sigma)
    if not np.isfinite(nrm) or nrm == 0:
        raise DomainError("beliefs must be a finite nonzero vector")
    return Hyperplane(sigma / nrm, float(q / nrm), sigma, float(q))


def default_psi(u):
    """``2u + 0.3 tanh(u)``: strictly increasing with slope in [2, 2.3]."""
    u = np.asarray(u, dtype=float)
    return 2.0 * u + 0.3 * np.tanh(u)


def default_kappa(x):
    """A covariate-dependent scale in (0.5, 1.5)."""
    x = np.asarray(x, dtype=float)
    return 1.0 + 0.5 * np.tanh(x[..., 0] - x[..., -1])


class _AlphaLookup:
    """Selected-equilibrium choice probabilities of one game, cached by covariate profile."""

    def __init__(self, game, table=None, rule=None, decimals=9):
        from ..simulate import population_ccp

        self.game, self.rule, self.decimals = game, rule, decimals
        self._solve = population_ccp
        self.cache = {}
        if table is not None:
            for x, a in zip(table.x, table.alpha):
                self.cache[self._key(x)] = np.asarray(a, dtype=float)

    def _key(self, x):
        return tuple(np.round(np.asarray(x, dtype=float), self.decimals))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, x.shape[-1])
        out = np.empty((len(flat), self.game.n_players))
        for k, row in enumerate(flat):
            key = self._key(row)
            if key not in self.cache:
                self.cache[key] = self._solve(self.game, row, self.rule).alpha
            out[k] = self.cache[key]
        return out.reshape(x.shape[:-1] + (self.game.n_players,))


def transform_structure(game, psi=default_psi, kappa=default_kappa, table=None, rule=None,
                        players=None, psi_label="2u+0.3tanh(u)", check_points=None):
    """Observationally equivalent structure ``[pi~; psi(Q); C]``.

    For each transformed player, ``Q~ = psi o Q`` and
    ``pi~(a, x) = xi(x) + kappa(x) pi(a, x)`` with
    ``xi(x) = psi(Q(alpha(x))) - kappa(x) Q(alpha(x))``, where ``alpha(x)`` are
    the original choice probabilities. The original thresholds map to
    thresholds ``psi(u*)`` of the new game with the same choice probabilities.
    The new payoffs depend on the whole covariate profile, so exclusion fails.

    Parameters
    ----------
    psi : callable
        Strictly increasing with ``inf psi' >= sup kappa``.
    kappa : callable
        ``x -> positive scale``.
    table : PopulationTable, optional
        Original choice probabilities, reused when available.
    check_points : ndarray, optional
        Profiles on which ``sup kappa`` is checked (the design points by default).

    Returns
    -------
    GameStructure
        With ``meta["alpha_lookup"]`` holding the original choice probabilities.
    """
    players = range(game.n_players) if players is None else list(players)
    lookup = _AlphaLookup(game, table, rule)
    pts = check_points
    if pts is None:
        pts = table.x if table is not None else (game.design.points if game.design is not None else None)
    if pts is not None:
        kmax = float(np.max(kappa(np.asarray(pts, dtype=float))))
        kmin = float(np.min(kappa(np.asarray(pts, dtype=float))))
        if kmin <= 0:
            raise DomainError("kappa must be positive")
        slopes = []
        for m in (game.marginals[i] for i in players):
            lo, hi = m.effective_support()
            u = np.linspace(lo, hi, 2001)
            slopes.append(np.min(np.diff(psi(u)) / np.diff(u)))
        if min(slopes) < kmax - 1e-9:
            raise DomainError(f"inf psi' = {min(slopes):.4g} is below sup kappa = {kmax:.4g}")
    payoffs = list(game.payoffs)
    marginals = list(game.marginals)
    for i in players:
        base, marg = game.payoffs[i], game.marginals[i]

        def fn(x, base=base, marg=marg, i=i):
            x = np.asarray(x, dtype=float)
            q = marg.ppf(lookup(x)[..., i])
            k = kappa(x)
            xi = psi(q) - k * q
            return xi[..., None] + k[..., None] * base.values(x)

        payoffs[i] = CallablePayoff(i, game.n_players, fn, exclusion=False,
                                    label=f"xi+kappa*pi[{i}]")
        marginals[i] = TransformedMarginal(marg, psi, label=psi_label)
    new = game.replace(payoffs=payoffs, marginals=marginals, name=f"{game.name}~")
    new.meta["alpha_lookup"] = lookup
    return new


def hyperplane_residuals(game, table, beliefs, player):
    """``<pi_i(., x), sigma(x)> - Q_i(alpha_i(x))`` at every profile of ``table``.

    ``beliefs`` has shape ``(m, I, 2**(I-1))``; NaN rows give NaN.
    """
    pi = np.stack([game.payoffs[player].values(x) for x in table.x])
    q = game.marginals[player].ppf(table.alpha[:, player])
    return np.einsum("mr,mr->m", pi, beliefs[:, player]) - q
