"""Player payoff functions ``pi_i(a_{-i}, x)``.

Each payoff object evaluates, for covariate profiles ``x`` of shape ``(..., d)``,
the vector of payoffs over rival profiles in product order, shape
``(..., 2**(I-1))``.
"""

import numpy as np

from ..errors import DomainError
from .profiles import all_profiles


class PlayerPayoff:
    """Base class for one player's payoff.

    Attributes
    ----------
    player : int
        Zero-based player index ``i``.
    n_players : int
        Number of players ``I``.
    exclusion : bool
        True when the payoff depends on ``x`` only through ``x_i``.
    """

    kind = "abstract"
    exclusion = True

    def __init__(self, player, n_players):
        if n_players < 2 or not 0 <= player < n_players:
            raise DomainError("player index out of range")
        self.player = int(player)
        self.n_players = int(n_players)

    @property
    def n_rival(self):
        return 2 ** (self.n_players - 1)

    def values(self, x):
        raise NotImplementedError

    def own_values(self, xi):
        """Payoffs as a function of own covariate alone, shape ``(..., 2**(I-1))``."""
        if not self.exclusion:
            raise DomainError("payoff does not satisfy the exclusion restriction")
        xi = np.asarray(xi, dtype=float)
        x = np.zeros(xi.shape + (self.n_players,))
        x[..., self.player] = xi
        return self.values(x)

    def describe(self):
        return {"kind": self.kind, "player": self.player}


class LinearIndexPayoff(PlayerPayoff):
    """``pi_i(a_{-i}, x) = intercept + slope * x_i + interaction[a_{-i}]``.

    Parameters
    ----------
    interaction : array_like, length ``2**(I-1)``
        Rival-pattern effects in product order. For ``I = 2`` this is
        ``(beta(0), beta(1))``; Example-style substitutes use ``(0, -beta)``.
    """

    kind = "linear"

    def __init__(self, player, n_players, intercept=0.0, slope=1.0, interaction=None):
        super().__init__(player, n_players)
        self.intercept = float(intercept)
        self.slope = float(slope)
        if interaction is None:
            interaction = np.zeros(self.n_rival)
        interaction = np.asarray(interaction, dtype=float)
        if interaction.shape != (self.n_rival,):
            raise DomainError(f"interaction must have {self.n_rival} entries")
        self.interaction = interaction

    @classmethod
    def additive(cls, player, n_players, intercept=0.0, slope=1.0, beta=None):
        """Interaction ``sum_j beta_j a_j`` over rivals."""
        beta = np.zeros(n_players - 1) if beta is None else np.asarray(beta, dtype=float)
        inter = all_profiles(n_players - 1) @ beta
        return cls(player, n_players, intercept, slope, inter)

    def values(self, x):
        x = np.asarray(x, dtype=float)
        base = self.intercept + self.slope * x[..., self.player]
        return base[..., None] + self.interaction

    def describe(self):
        return {
            "kind": self.kind,
            "player": self.player,
            "intercept": self.intercept,
            "slope": self.slope,
            "interaction": self.interaction.tolist(),
        }


class TabularPayoff(PlayerPayoff):
    """Explicit table over ``(own covariate grid point, rival profile)``.

    Parameters
    ----------
    grid : array_like, shape (m,)
        Declared own-covariate values.
    table : array_like, shape (m, 2**(I-1))
        ``table[k, r]`` is the payoff at ``x_i = grid[k]`` against rival profile ``r``.
    atol : float
        Tolerance for matching an evaluation point to a grid value.
    """

    kind = "table"

    def __init__(self, player, n_players, grid, table, atol=1e-9):
        super().__init__(player, n_players)
        grid = np.asarray(grid, dtype=float)
        table = np.asarray(table, dtype=float)
        if grid.ndim != 1 or table.shape != (len(grid), self.n_rival):
            raise DomainError("payoff table must have shape (len(grid), 2**(I-1))")
        if not np.all(np.isfinite(table)):
            raise DomainError("payoff table must be finite")
        order = np.argsort(grid)
        self.grid = grid[order]
        self.table = table[order]
        self.atol = atol

    def values(self, x):
        xi = np.asarray(x, dtype=float)[..., self.player]
        k = np.clip(np.searchsorted(self.grid, xi), 0, len(self.grid) - 1)
        km = np.clip(k - 1, 0, len(self.grid) - 1)
        k = np.where(np.abs(self.grid[km] - xi) < np.abs(self.grid[k] - xi), km, k)
        if np.any(np.abs(self.grid[k] - xi) > self.atol):
            raise DomainError(f"payoff table of player {self.player} is not defined at x_i off its grid")
        return self.table[k]

    def describe(self):
        return {
            "kind": self.kind,
            "player": self.player,
            "grid": self.grid.tolist(),
            "table": self.table.tolist(),
        }


class CallablePayoff(PlayerPayoff):
    """Payoff computed by ``fn(x) -> (..., 2**(I-1))``; may depend on the whole of ``x``."""

    kind = "callable"

    def __init__(self, player, n_players, fn, exclusion=False, label="callable"):
        super().__init__(player, n_players)
        self.fn = fn
        self.exclusion = bool(exclusion)
        self.label = label

    def values(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.fn(x), dtype=float)
        if out.shape != x.shape[:-1] + (self.n_rival,):
            raise DomainError("callable payoff returned the wrong shape")
        return out

    def describe(self):
        return {"kind": self.kind, "player": self.player, "label": self.label,
                "exclusion": self.exclusion}
