"""Game structures and covariate designs."""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from ..errors import DomainError
from .copulas import Copula, IndependenceCopula
from .marginals import Marginal
from .payoffs import PlayerPayoff


class GridDesign:
    """Finite covariate support with probability weights.

    Parameters
    ----------
    points : array_like, shape (m, d)
    weights : array_like, shape (m,), optional
        Normalized internally; uniform by default.
    continuous : bool
        Marks a grid that discretizes a continuous law. Smoothness checks that
        are meaningless for genuinely discrete covariates look at this flag.
    """

    kind = "grid"

    def __init__(self, points, weights=None, continuous=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not np.all(np.isfinite(points)):
            raise DomainError("design points must be finite")
        if weights is None:
            weights = np.ones(len(points))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(points),) or np.any(weights < 0) or weights.sum() <= 0:
            raise DomainError("design weights must be nonnegative with positive sum")
        self.points = points
        self.weights = weights / weights.sum()
        self.continuous = bool(continuous)

    @classmethod
    def product(cls, *axes, continuous=False):
        """Cartesian product of one-dimensional axes, uniform weights."""
        axes = [np.asarray(a, dtype=float) for a in axes]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(np.stack([m.ravel() for m in mesh], axis=1), continuous=continuous)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    def sample_indices(self, n, rng):
        return rng.choice(len(self.points), size=int(n), p=self.weights)

    def sample(self, n, rng):
        return self.points[self.sample_indices(n, rng)]

    def contains(self, x, atol=1e-9):
        x = np.atleast_2d(x)
        d = np.abs(x[:, None, :] - self.points[None, :, :]).max(axis=2)
        return d.min(axis=1) <= atol

    def describe(self):
        return {"kind": self.kind, "points": self.points.tolist(), "weights": self.weights.tolist(),
                "continuous": self.continuous}


class BoxDesign:
    """Continuous covariate law with independent coordinates.

    ``kind="uniform"`` draws each coordinate on ``[low, high]``;
    ``kind="normal"`` uses mean ``low`` and standard deviation ``high``.
    """

    continuous = True

    def __init__(self, low, high, kind="uniform"):
        low = np.atleast_1d(np.asarray(low, dtype=float))
        high = np.atleast_1d(np.asarray(high, dtype=float))
        if low.shape != high.shape:
            raise DomainError("box bounds must have equal length")
        if kind not in ("uniform", "normal"):
            raise DomainError(f"unknown box design kind {kind!r}")
        if kind == "uniform" and np.any(high <= low):
            raise DomainError("uniform box needs high > low")
        if kind == "normal" and np.any(high <= 0):
            raise DomainError("normal box needs positive standard deviations")
        self.kind = kind
        self.low = low
        self.high = high

    @property
    def dim(self):
        return len(self.low)

    def sample(self, n, rng):
        n = int(n)
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * rng.random((n, self.dim))
        return self.low + self.high * rng.standard_normal((n, self.dim))

    def contains(self, x, atol=1e-9):
        x = np.atleast_2d(x)
        if self.kind == "normal":
            return np.all(np.isfinite(x), axis=1)
        return np.all((x >= self.low - atol) & (x <= self.high + atol), axis=1)

    def discretize(self, n_per_axis):
        """Midpoint-rule grid (uniform) or quantile grid (normal), flagged continuous."""
        n = int(n_per_axis)
        t = (np.arange(n) + 0.5) / n
        if self.kind == "uniform":
            axes = [lo + (hi - lo) * t for lo, hi in zip(self.low, self.high)]
        else:
            axes = [m + s * ndtri(t) for m, s in zip(self.low, self.high)]
        return GridDesign.product(*axes, continuous=True)

    def describe(self):
        return {"kind": self.kind, "low": self.low.tolist(), "high": self.high.tolist()}


@dataclass(frozen=True, eq=False)
class GameStructure:
    """Payoffs plus type distribution, with an optional covariate design.

    Types are independent of covariates by construction (the marginals and the
    copula are fixed objects), so the structure is always exogenous.
    """

    payoffs: tuple
    marginals: tuple
    copula: Copula
    design: object = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "payoffs", tuple(self.payoffs))
        object.__setattr__(self, "marginals", tuple(self.marginals))
        I = len(self.payoffs)
        if I < 2:
            raise DomainError("a game needs at least two players")
        if len(self.marginals) != I or self.copula.dim != I:
            raise DomainError("payoffs, marginals and copula must agree on the player count")
        for i, p in enumerate(self.payoffs):
            if not isinstance(p, PlayerPayoff) or p.player != i or p.n_players != I:
                raise DomainError(f"payoff {i} is not a payoff for player {i} of {I}")
        for m in self.marginals:
            if not isinstance(m, Marginal):
                raise DomainError("marginals must be Marginal instances")
        if self.design is not None and self.design.dim < I and self.exclusion:
            raise DomainError("exclusion payoffs need one covariate per player")

    @property
    def n_players(self):
        return len(self.payoffs)

    @property
    def exogenous(self):
        return True

    @property
    def independent_types(self):
        return isinstance(self.copula, IndependenceCopula)

    @property
    def exclusion(self):
        return all(p.exclusion for p in self.payoffs)

    def payoff_table(self, x):
        """Payoffs at a single covariate profile, shape ``(I, 2**(I-1))``."""
        x = np.asarray(x, dtype=float)
        return np.stack([p.values(x) for p in self.payoffs])

    def replace(self, **changes):
        kw = dict(payoffs=self.payoffs, marginals=self.marginals, copula=self.copula,
                  design=self.design, name=self.name, meta=dict(self.meta))
        kw.update(changes)
        return GameStructure(**kw)

    def describe(self):
        return {
            "players": self.n_players,
            "payoffs": [p.describe() for p in self.payoffs],
            "marginals": [m.describe() for m in self.marginals],
            "copula": self.copula.describe(),
            "design": None if self.design is None else self.design.describe(),
        }

    def game_hash(self):
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
