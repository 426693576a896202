"""Demeaned-belief Gram matrices and their rank classes.

For player ``i`` and own-covariate cell ``x_i``, beliefs are demeaned within
groups of equal ``alpha_i`` and ``R_i(x_i) = E[S S' | X_i = x_i]`` is formed from
the demeaned vectors ``S``. Because beliefs sum to one, ``R_i`` annihilates the
vector of ones and its rank is at most ``2**(I-1) - 1``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from ..errors import CellEmpty

FULL, DEFICIENT, LOWER = "full", "deficient", "lower"
POPULATION_TOL = 1e-6
SAMPLE_TOL = 0.05


@dataclass
class CellData:
    """Observations of one player's own-covariate cell.

    Attributes
    ----------
    player : int
    key : float
        The own-covariate value (or bin centre) of the cell.
    x : ndarray (m, d)
    alpha : ndarray (m, I)
    sigma : ndarray (m, 2**(I-1))
        Player ``player``'s identified beliefs at each point.
    weight : ndarray (m,)
    """

    player: int
    key: float
    x: np.ndarray
    alpha: np.ndarray
    sigma: np.ndarray
    weight: np.ndarray = None

    def __post_init__(self):
        if self.weight is None:
            self.weight = np.ones(len(self.alpha))

    def __len__(self):
        return len(self.alpha)

    @property
    def own(self):
        return self.alpha[:, self.player]

    @property
    def alpha_range(self):
        a = self.own
        return (float(a.min()), float(a.max())) if len(a) else (np.nan, np.nan)

    def distinct_own(self, decimals=9):
        return np.unique(np.round(self.own, decimals))


@dataclass
class RankSystem:
    """Rank diagnostics of one cell.

    ``pi0`` is the unit null direction of ``R`` orthogonal to the ones vector
    (set for the deficient class only).
    """

    player: int
    key: float
    R: np.ndarray
    singular_values: np.ndarray
    rank: int
    rank_class: str
    singleton: bool
    n_groups: int
    pi0: np.ndarray = None
    notes: list = field(default_factory=list)


def _ones_complement(n):
    return null_space(np.ones((1, n)))


def build_rank_system(cell, tol=POPULATION_TOL, decimals=9, abs_tol=1e-13):
    """Gram matrix of beliefs demeaned within equal-``alpha_i`` groups, and its rank class.

    Parameters
    ----------
    cell : CellData
    tol : float
        Singular values below ``tol`` times the largest one count as zero.
    decimals : int
        Rounding used to group equal own choice probabilities.
    abs_tol : float
        A Gram matrix whose largest singular value is below this is treated as zero.

    Raises
    ------
    CellEmpty
        Fewer than ``2**(I-1)`` observations in the cell.
    """
    S = np.asarray(cell.sigma, dtype=float)
    n_r = S.shape[1]
    if len(S) < n_r:
        raise CellEmpty(f"cell {cell.key!r} of player {cell.player + 1} holds {len(S)} "
                        f"belief observations, needs {n_r}")
    w = np.asarray(cell.weight, dtype=float)
    groups, inv = np.unique(np.round(cell.own, decimals), return_inverse=True)
    inv = inv.ravel()
    wsum = np.bincount(inv, weights=w)
    means = np.stack([np.bincount(inv, weights=w * S[:, r]) for r in range(n_r)], axis=1) / wsum[:, None]
    D = S - means[inv]
    R = (D * w[:, None]).T @ D / w.sum()
    R = 0.5 * (R + R.T)
    sv = np.sort(np.linalg.eigvalsh(R))[::-1].clip(min=0.0)
    if sv[0] < abs_tol:
        rank = 0
    else:
        rank = int(np.sum(sv > tol * sv[0]))
    if rank == n_r - 1:
        cls = FULL
    elif rank == n_r - 2:
        cls = DEFICIENT
    else:
        cls = LOWER
    sys = RankSystem(cell.player, cell.key, R, sv, rank, cls, len(groups) == 1, len(groups))
    if cls == FULL and not sys.singleton:
        sys.notes.append("full rank with a non-singleton alpha support")
    if cls == DEFICIENT:
        B = _ones_complement(n_r)
        vals, vecs = np.linalg.eigh(B.T @ R @ B)
        v = B @ vecs[:, 0]
        # orientation convention: the last entry is at least the first
        if v[-1] < v[0]:
            v = -v
        sys.pi0 = v / np.linalg.norm(v)
    return sys
