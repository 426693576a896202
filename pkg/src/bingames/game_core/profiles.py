"""Binary action profiles and subset bookkeeping.

Profiles of length ``m`` are enumerated in ``itertools.product([0, 1], repeat=m)``
order, so index 0 is the all-zeros profile and the last index is all ones.
"""

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def all_profiles(m):
    """Return an ``(2**m, m)`` int array of binary profiles in product order."""
    if m == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.product([0, 1], repeat=m)), dtype=int)


def profile_index(bits):
    """Position of a binary profile in :func:`all_profiles` order."""
    idx = 0
    for b in bits:
        idx = 2 * idx + int(b)
    return idx


def profile_label(bits):
    return "".join(str(int(b)) for b in bits)


def rival_profile(a, i):
    """Delete entry ``i`` of profile ``a``."""
    a = tuple(int(v) for v in a)
    return a[:i] + a[i + 1:]


def rivals(I, i):
    return [j for j in range(I) if j != i]


@lru_cache(maxsize=None)
def mobius_matrix(m):
    """Matrix mapping subset lower-orthant probabilities to profile probabilities.

    Row ``a`` and column ``T`` (both in profile order, ``T`` read as the indicator
    of a subset) hold ``(-1)**|T \\ S(a)|`` when ``S(a) ⊆ T`` and 0 otherwise, where
    ``S(a)`` is the set of coordinates equal to 1. Multiplying the vector of
    ``P(all j in T act)`` by this matrix gives ``P(Y = a)`` by inclusion-exclusion.
    """
    P = all_profiles(m)
    n = len(P)
    M = np.zeros((n, n))
    for r in range(n):
        s = P[r].astype(bool)
        for c in range(n):
            t = P[c].astype(bool)
            if np.all(t[s]):
                M[r, c] = (-1.0) ** (t.sum() - s.sum())
    M.setflags(write=False)
    return M


def subset_levels(alpha, m=None):
    """Expand ``alpha`` of shape ``(..., m)`` into ``(..., 2**m, m)`` subset vectors.

    Entry ``T`` keeps ``alpha_j`` for ``j`` in ``T`` and sets the rest to 1, so a
    copula evaluated on it gives the lower-orthant probability of subset ``T``.
    """
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.shape[-1] if m is None else m
    T = all_profiles(m).astype(bool)
    return np.where(T, alpha[..., None, :], 1.0)
