"""Payoff and quantile recovery from identified beliefs.

Within a cell of rank class ``deficient`` the payoff vector is
``c + p * pi0`` with a known direction ``pi0``; the equilibrium condition
``<pi, sigma(x)> = Q(alpha_i(x))`` links the unknown location ``c`` and scale
``p`` to the quantile function. The normalization cell fixes
``pi(a0) = 0`` and ``||pi|| = 1``; further cells are added by matching
already-identified quantiles on overlapping choice-probability ranges.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtri

from ..errors import (NormalizationInfeasible, NumericalDerivativeError, SupportDeficient,
                      UnderIdentifiedCell)
from .beliefs import estimate_beliefs
from .rank import DEFICIENT, FULL

A0 = 0  # reference rival profile: all rivals inactive
MONOTONE_TOL = 1e-3


@dataclass
class CellPayoff:
    player: int
    key: float
    values: np.ndarray
    rank_class: str
    how: str
    sign_rule: str = ""
    n_points: int = 0
    residual: float = 0.0


# ---------------------------------------------------------------------------
# sign of the scale

def _variation_pairs(cell, joint, max_pairs=40, eps=1e-6):
    """Pairs ``(k, k')`` with ``alpha_i(k') < alpha_i(k)`` whose mixed point lies in the support."""
    i = cell.player
    order = np.argsort(cell.own)
    lo, hi = order[: max(1, len(order) // 3)], order[-max(1, len(order) // 3):]
    pairs = []
    for k in hi[::-1]:
        for kp in lo:
            if cell.own[kp] >= cell.own[k] - eps:
                continue
            q = cell.alpha[kp].copy()
            q[i] = cell.alpha[k, i]
            if joint.support.contains(q)[0] and np.all((q > 0) & (q < 1)):
                pairs.append((k, kp, q))
            if len(pairs) >= max_pairs:
                return pairs
    return pairs


def variation_holds(cell, joint):
    """Whether the cell has two interior own choice probabilities with a mixed point in the support."""
    return joint is not None and len(_variation_pairs(cell, joint, max_pairs=1)) > 0


def scale_sign(cell, pi0, joint=None):
    """Sign of the scale ``p`` in ``pi = c + p * pi0``.

    With a joint regression and a pair ``x, x'`` in the cell with
    ``alpha_i' < alpha_i`` such that ``(alpha_i, alpha'_{-i})`` is in the support,
    ``p * <pi0, sigma(alpha_i, alpha'_{-i}) - sigma(alpha)> < 0``. Without one,
    the sign follows from ``Q`` increasing: ``<pi0, sigma>`` must move with ``alpha_i``
    in the direction of ``p``.

    Returns
    -------
    (sign, rule, evidence)
    """
    i = cell.player
    if joint is not None:
        best = None
        for k, kp, q in _variation_pairs(cell, joint):
            try:
                s_mixed = estimate_beliefs(joint, q, [i])[i]
            except (SupportDeficient, NumericalDerivativeError):
                continue
            d = float(pi0 @ (s_mixed - cell.sigma[k]))
            if best is None or abs(d) > abs(best):
                best = d
        if best is not None and abs(best) > 1e-12:
            return (-1.0 if best > 0 else 1.0), "variation", best
    t = cell.sigma @ pi0
    a = cell.own
    if np.ptp(a) <= 0:
        raise UnderIdentifiedCell(f"cell {cell.key!r}: singleton own choice probability, scale sign unknown")
    slope = np.polyfit(a, t, 1)[0]
    if slope == 0:
        raise UnderIdentifiedCell(f"cell {cell.key!r}: flat belief index, scale sign unknown")
    return (1.0 if slope > 0 else -1.0), "monotone_quantile", float(slope)


def recover_payoffs_cell(system, cell, quantile=None, joint=None):
    """Payoffs of one cell, as far as the cell alone identifies them.

    Full class: ``pi = Q(alpha_dagger) * ones``, needing ``quantile`` (a callable);
    without it the level is returned as NaN. Deficient class: the normalized
    direction ``pi0`` with the sign of the scale applied, so that
    ``pi - pi(a0)`` has the identified signs.

    Raises
    ------
    UnderIdentifiedCell
        For rank below ``2**(I-1) - 2``.
    """
    n_r = cell.sigma.shape[1]
    if system.rank_class == FULL:
        a_dag = float(np.mean(cell.own))
        level = np.nan if quantile is None else float(quantile(a_dag))
        return CellPayoff(cell.player, cell.key, np.full(n_r, level), FULL, "constant",
                          n_points=len(cell))
    if system.rank_class != DEFICIENT:
        raise UnderIdentifiedCell(f"cell {cell.key!r} of player {cell.player + 1} has rank "
                                  f"{system.rank}, below {n_r - 2}")
    sign, rule, _ = scale_sign(cell, system.pi0, joint)
    return CellPayoff(cell.player, cell.key, sign * system.pi0, DEFICIENT, "direction",
                      sign_rule=rule, n_points=len(cell))


def sign_table(values, a0=A0):
    """Signs of ``pi(a) - pi(a0)`` as integers in {-1, 0, 1}."""
    d = np.asarray(values) - values[a0]
    return np.where(np.abs(d) < 1e-12, 0, np.sign(d)).astype(int)


# ---------------------------------------------------------------------------
# quantile curves

@dataclass
class QuantileGrid:
    alpha: np.ndarray
    q: np.ndarray
    monotone: bool
    max_violation: float
    strictly_increasing: bool

    def __call__(self, a):
        return np.interp(a, self.alpha, self.q, left=np.nan, right=np.nan)


def _dedupe(a, q, decimals=9):
    key = np.round(a, decimals)
    u, inv = np.unique(key, return_inverse=True)
    inv = inv.ravel()
    qs = np.bincount(inv, weights=q) / np.bincount(inv)
    aa = np.bincount(inv, weights=a) / np.bincount(inv)
    return aa, qs


def recover_quantiles(points, tol=MONOTONE_TOL):
    """Aggregate ``(alpha, Q)`` pairs from identified cells into a sorted grid.

    ``points`` is a list of ``(alpha_array, q_array)``. Decreases beyond ``tol``
    mark the grid non-monotone.
    """
    a = np.concatenate([np.asarray(p[0], dtype=float) for p in points]) if points else np.empty(0)
    q = np.concatenate([np.asarray(p[1], dtype=float) for p in points]) if points else np.empty(0)
    keep = (a > 0) & (a < 1) & np.isfinite(q)
    a, q = _dedupe(a[keep], q[keep])
    order = np.argsort(a)
    a, q = a[order], q[order]
    d = np.diff(q)
    worst = float(max(0.0, -d.min())) if d.size else 0.0
    return QuantileGrid(a, q, worst <= tol, worst, bool(np.all(d > 0)))


def _cell_curve(cell, values):
    """Interpolant of ``alpha_i -> <pi, sigma>`` over one identified cell.

    The spline runs in ``z = ndtri(alpha_i)``, where quantile functions with
    unbounded support stay smooth near 0 and 1.
    """
    a, q = _dedupe(cell.own, cell.sigma @ values)
    order = np.argsort(a)
    a, q = a[order], q[order]
    if len(a) < 2:
        return None
    z = ndtri(a)
    if len(a) >= 4:
        spl = CubicSpline(z, q)
        return (a[0], a[-1], lambda t: spl(ndtri(t)))
    return (a[0], a[-1], lambda t, z=z, q=q: np.interp(ndtri(t), z, q))


# ---------------------------------------------------------------------------
# the collection iteration

@dataclass
class PlayerIdentification:
    """Identification output for one player."""

    player: int
    x_star: float
    payoffs: dict
    rank: dict
    quantiles: QuantileGrid
    trace: list
    unidentified: dict = field(default_factory=dict)
    sign_rule: str = ""
    a0: int = A0

    @property
    def cells(self):
        return sorted(self.payoffs)

    def payoff_matrix(self):
        keys = self.cells
        return np.array(keys), np.array([self.payoffs[k].values for k in keys])

    def signs(self):
        return {k: sign_table(v.values, self.a0) for k, v in self.payoffs.items()}

    def report(self):
        cells = {}
        for k, sys in sorted(self.rank.items()):
            entry = {"rank": sys.rank, "rank_class": sys.rank_class,
                     "singular_values": [float(v) for v in sys.singular_values]}
            if k in self.payoffs:
                cp = self.payoffs[k]
                entry.update(identified=True, how=cp.how, n_points=cp.n_points,
                             residual=cp.residual)
            else:
                entry.update(identified=False, reason=self.unidentified.get(k, ""))
            cells[repr(k)] = entry
        return {"x_star": self.x_star, "a0": self.a0, "sign_rule": self.sign_rule,
                "trace": [[float(k) for k in t] for t in self.trace], "cells": cells,
                "quantiles_monotone": self.quantiles.monotone,
                "quantiles_strict": self.quantiles.strictly_increasing,
                "quantile_max_violation": self.quantiles.max_violation}


def _normalization_candidates(cells, systems, joint):
    out = []
    for k, cell in cells.items():
        sys = systems.get(k)
        if sys is None or sys.rank_class != DEFICIENT or len(cell.distinct_own()) < 2:
            continue
        if joint is not None and not variation_holds(cell, joint):
            continue
        lo, hi = cell.alpha_range
        out.append((hi - lo, k))
    return out


def choose_normalization(cells, systems, joint=None):
    """The feasible cell with the widest own choice-probability range."""
    cand = _normalization_candidates(cells, systems, joint)
    if not cand:
        raise NormalizationInfeasible("no cell has the deficient rank class with varying "
                                      "choice probabilities")
    return max(cand, key=lambda t: (t[0], -t[1]))[1]


def iterate_collection(cells, systems, x_star=None, joint=None, min_overlap=2, max_passes=None):
    """Identify payoffs cell by cell, starting from the normalization cell.

    Parameters
    ----------
    cells : dict
        Cell key -> :class:`CellData` for one player.
    systems : dict
        Cell key -> :class:`RankSystem`.
    x_star : float, optional
        Normalization cell; chosen by :func:`choose_normalization` when omitted.
    joint : JointRegression, optional
        Used for the variation check and the sign rule at the normalization cell.
    min_overlap : int
        Distinct choice probabilities needed to pin location and scale.

    Returns
    -------
    PlayerIdentification
    """
    keys = sorted(cells)
    player = cells[keys[0]].player
    if x_star is None:
        x_star = choose_normalization(cells, systems, joint)
    elif x_star not in cells:
        raise NormalizationInfeasible(f"normalization cell {x_star!r} not among the cells")
    seed, seed_sys = cells[x_star], systems.get(x_star)
    if seed_sys is None or seed_sys.rank_class != DEFICIENT or len(seed.distinct_own()) < 2:
        raise NormalizationInfeasible(f"cell {x_star!r} does not have the deficient rank class "
                                      "with varying choice probabilities")
    sign, rule, _ = scale_sign(seed, seed_sys.pi0, joint)
    pi0 = sign * seed_sys.pi0
    scale = np.linalg.norm(pi0 - pi0[A0])
    values = (pi0 - pi0[A0]) / scale
    payoffs = {x_star: CellPayoff(player, x_star, values, DEFICIENT, "normalization", rule,
                                  len(seed))}
    curves = {x_star: _cell_curve(seed, values)}
    trace = [[x_star]]
    unidentified = {}
    max_passes = len(keys) if max_passes is None else max_passes
    for _ in range(max_passes):
        new = {}
        for k in keys:
            if k in payoffs:
                continue
            cell, sys = cells[k], systems.get(k)
            if sys is None:
                unidentified[k] = "no rank system"
                continue
            a = cell.own
            sums = np.zeros(len(a))
            hits = np.zeros(len(a))
            for cur in curves.values():
                if cur is None:
                    continue
                lo, hi, f = cur
                inside = (a >= lo) & (a <= hi) & (a > 0) & (a < 1)
                sums[inside] += f(a[inside])
                hits[inside] += 1
            qs = sums / np.maximum(hits, 1)
            ok = hits > 0
            if sys.rank_class == DEFICIENT:
                if len(np.unique(np.round(a[ok], 9))) < min_overlap:
                    unidentified[k] = "overlap with identified cells has fewer than two points"
                    continue
                t = cell.sigma[ok] @ sys.pi0
                X = np.column_stack([np.ones(ok.sum()), t])
                (c, p), *_ = np.linalg.lstsq(X, qs[ok], rcond=None)
                vals = c + p * sys.pi0
                res = float(np.max(np.abs(X @ np.array([c, p]) - qs[ok])))
                new[k] = CellPayoff(player, k, vals, DEFICIENT, "overlap", "", int(ok.sum()), res)
            elif sys.rank_class == FULL:
                if not np.all(ok):
                    unidentified[k] = "singleton choice probability outside the identified range"
                    continue
                new[k] = CellPayoff(player, k, np.full(cell.sigma.shape[1], float(qs.mean())), FULL,
                                    "constant", "", int(ok.sum()))
            else:
                unidentified[k] = f"rank {sys.rank} is below the identifiable range"
        if not new:
            break
        for k, cp in new.items():
            payoffs[k] = cp
            unidentified.pop(k, None)
            curves[k] = _cell_curve(cells[k], cp.values)
        trace.append(sorted(payoffs))
    for k in keys:
        if k not in payoffs and k not in unidentified:
            unidentified[k] = "not reached"
    qgrid = recover_quantiles([(cells[k].own, cells[k].sigma @ payoffs[k].values) for k in payoffs])
    return PlayerIdentification(player, x_star, payoffs, systems, qgrid, trace, unidentified, rule)
