"""Equilibrium beliefs as derivatives of joint choice regressions.

The belief of player ``i`` at the margin over rival profile ``a_{-i}`` equals
``d Pr(Y_i = 1, Y_{-i} = a_{-i} | alpha(X) = alpha) / d alpha_i`` at ``alpha(x)``.
"""

import numpy as np

from ..errors import NumericalDerivativeError, SupportDeficient
from ..game_core.profiles import all_profiles

RANGE_TOL = 0.02
SUM_TOL = 0.02


def _acting_rows(I, i):
    """Full-profile indices with ``a_i = 1``, ordered by rival profile."""
    P = all_profiles(I)
    return np.flatnonzero(P[:, i] == 1)


def estimate_beliefs(joint, alpha, players=None, anchor=None):
    """Beliefs of each player at choice-probability point ``alpha``.

    Parameters
    ----------
    joint : JointRegression
    alpha : array_like, shape (I,)
    players : iterable of int, optional
    anchor : int, optional
        Rival-profile index whose belief is set to one minus the others. Useful
        for smoothed estimates, where the slopes need not add up exactly.

    Returns
    -------
    dict
        Player -> belief vector of length ``2**(I-1)`` in rival product order.

    Raises
    ------
    SupportDeficient
        The support is not full-dimensional or ``alpha`` is not interior to it.
    NumericalDerivativeError
        A derivative falls outside ``[-0.02, 1.02]`` or the total is off by more than 0.02.
    """
    alpha = np.asarray(alpha, dtype=float)
    I = joint.n_players
    if not joint.support.full_dimensional:
        raise SupportDeficient("choice-probability support is not full-dimensional")
    if np.any((alpha <= 0) | (alpha >= 1)):
        raise SupportDeficient("beliefs are defined only for interior choice probabilities")
    out = {}
    for i in (range(I) if players is None else players):
        d = np.asarray(joint.profile_derivative(i, alpha))[_acting_rows(I, i)]
        if anchor is not None:
            d[anchor] = 1.0 - (d.sum() - d[anchor])
        if np.any(d < -RANGE_TOL) or np.any(d > 1 + RANGE_TOL):
            raise NumericalDerivativeError(
                f"belief derivative of player {i + 1} out of range at alpha = {tuple(alpha)}: {d}")
        total = d.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise NumericalDerivativeError(
                f"beliefs of player {i + 1} sum to {total:.4f} at alpha = {tuple(alpha)}")
        d = np.clip(d, 0.0, 1.0)
        out[i] = d / d.sum()
    return out


def belief_table(joint, alphas, players=None, anchor=None):
    """Beliefs at many points, shape ``(m, I, 2**(I-1))``; NaN where unavailable.

    Returns the table and, per point, ``None`` or the reason beliefs failed.
    """
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    I = joint.n_players
    tab = np.full((len(alphas), I, 2 ** (I - 1)), np.nan)
    why = []
    for k, a in enumerate(alphas):
        try:
            b = estimate_beliefs(joint, a, players, anchor)
        except (SupportDeficient, NumericalDerivativeError) as exc:
            why.append(f"{type(exc).__name__}: {exc}")
            continue
        for i, v in b.items():
            tab[k, i] = v
        why.append(None)
    return tab, why


def independence_beliefs(alpha, i):
    """Beliefs under independent types: the rivals' unconditional profile probabilities."""
    alpha = np.asarray(alpha, dtype=float)
    ar = np.delete(alpha, i, axis=-1)
    P = all_profiles(len(alpha) - 1)
    return np.prod(np.where(P == 1, ar, 1.0 - ar), axis=-1)
