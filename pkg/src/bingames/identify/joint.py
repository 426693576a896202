"""Joint choice regressions on the marginal choice probabilities, and copula estimates.

Given the choice probabilities ``alpha = alpha(X)``, the probability of an action
profile depends on ``X`` only through ``alpha``; in particular
``E(prod_{j in T} Y_j | alpha_T) = C(alpha_T, 1_{-T})``. Two regressions are
provided: :class:`PopulationJoint` evaluates the exact profile probabilities from
a known copula, and :class:`LocalLinearJoint` smooths observed profile
frequencies with a product Epanechnikov kernel.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from ..errors import SupportDeficient
from ..game_core.kernels import profile_probabilities
from ..game_core.profiles import all_profiles


class Support:
    """Convex hull of observed choice-probability points, used as the support proxy."""

    def __init__(self, points, tol=1e-9):
        pts = np.unique(np.atleast_2d(np.asarray(points, dtype=float)), axis=0)
        self.points = pts
        self.dim = pts.shape[1]
        self.tol = tol
        centered = pts - pts.mean(axis=0)
        self.rank = int(np.linalg.matrix_rank(centered, tol=1e-10)) if len(pts) > 1 else 0
        self._hull = None
        if self.dim >= 2 and self.rank == self.dim and len(pts) > self.dim:
            try:
                self._hull = Delaunay(pts)
            except QhullError:
                self._hull = None

    @property
    def full_dimensional(self):
        return self.rank == self.dim

    def contains(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        if self.dim == 0:
            return np.ones(len(q), dtype=bool)
        if self.dim == 1:
            lo, hi = self.points.min(), self.points.max()
            return (q[:, 0] >= lo - self.tol) & (q[:, 0] <= hi + self.tol)
        if self._hull is not None:
            inside = self._hull.find_simplex(q, tol=self.tol) >= 0
            return inside
        d = np.abs(q[:, None, :] - self.points[None, :, :]).max(axis=2)
        return d.min(axis=1) <= self.tol

    def project(self, coords):
        return Support(self.points[:, list(coords)], self.tol)


def _profile_products(I):
    """Matrix mapping profile probabilities to ``E(prod_{j in T} Y_j)`` for every subset ``T``."""
    P = all_profiles(I)
    return np.array([[np.all(P[a][np.flatnonzero(T)] == 1) for a in range(2 ** I)]
                     for T in P], dtype=float)


class JointRegression:
    """``alpha -> Pr(Y = a | alpha(X) = alpha)`` for all profiles, with derivatives."""

    n_players = 0
    support = None

    def profile_probs(self, alpha):
        raise NotImplementedError

    def profile_derivative(self, i, alpha):
        raise NotImplementedError


class PopulationJoint(JointRegression):
    """Exact profile probabilities from a known copula, restricted to a support.

    Derivatives use central differences with step ``step``; a second-order
    one-sided stencil is used where one side leaves the support.
    """

    def __init__(self, copula, points, step=1e-5):
        self.copula = copula
        self.n_players = copula.dim
        self.support = Support(points)
        self.step = step

    def profile_probs(self, alpha):
        return profile_probabilities(self.copula, np.asarray(alpha, dtype=float))

    def _ok(self, q):
        q = np.atleast_2d(q)
        inside = np.all((q > 0) & (q < 1), axis=1)
        return inside & self.support.contains(q)

    def profile_derivative(self, i, alpha):
        alpha = np.asarray(alpha, dtype=float)
        h = self.step
        e = np.zeros(self.n_players)
        e[i] = h
        if not self._ok(alpha)[0]:
            raise SupportDeficient(f"alpha = {tuple(alpha)} is outside the estimated support")
        plus, minus = self._ok(alpha + e)[0], self._ok(alpha - e)[0]
        p = self.profile_probs
        if plus and minus:
            return (p(alpha + e) - p(alpha - e)) / (2 * h)
        if plus and self._ok(alpha + 2 * e)[0]:
            return (-3 * p(alpha) + 4 * p(alpha + e) - p(alpha + 2 * e)) / (2 * h)
        if minus and self._ok(alpha - 2 * e)[0]:
            return (3 * p(alpha) - 4 * p(alpha - e) + p(alpha - 2 * e)) / (2 * h)
        raise SupportDeficient(f"no room to differentiate along alpha_{i + 1} at {tuple(alpha)}")

    def subset_mean(self, T, alpha_T):
        """``E(prod_{j in T} Y_j | alpha_T)``: the copula with the other coordinates at 1."""
        full = np.ones(np.shape(alpha_T)[:-1] + (self.n_players,))
        full[..., list(T)] = alpha_T
        return self.copula.cdf(full)


def epanechnikov(u):
    return np.where(np.abs(u) < 1, 0.75 * (1 - u * u), 0.0)


class LocalLinearJoint(JointRegression):
    """Local-linear regression of profile indicators on estimated choice probabilities.

    Observations sharing a covariate value share ``alpha_hat``, so the fit runs
    on cells: ``points`` (m, I) with ``counts`` (m,) and profile frequencies
    ``freq`` (m, 2**I).

    Parameters
    ----------
    bandwidth : float or array_like
        Kernel half-width per coordinate.
    min_points : int
        Fewest cells with positive weight needed for a fit.
    """

    def __init__(self, points, counts, freq, bandwidth, min_points=None):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.counts = np.asarray(counts, dtype=float)
        self.freq = np.asarray(freq, dtype=float)
        self.n_players = self.points.shape[1]
        self.h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (self.n_players,)).copy()
        self.min_points = self.n_players + 2 if min_points is None else int(min_points)
        self.support = Support(self.points)
        self.n = float(self.counts.sum())

    @classmethod
    def from_data(cls, alpha_hat, y, bandwidth_constant=1.0, **kw):
        """Aggregate row-level data by distinct ``alpha_hat`` and set ``h = c n^(-1/6)``."""
        alpha_hat = np.asarray(alpha_hat, dtype=float)
        y = np.asarray(y, dtype=int)
        I = y.shape[1]
        idx = y @ (2 ** np.arange(I - 1, -1, -1))
        pts, inv, cnt = np.unique(np.round(alpha_hat, 12), axis=0, return_inverse=True,
                                  return_counts=True)
        inv = inv.ravel()
        freq = np.zeros((len(pts), 2 ** I))
        np.add.at(freq, (inv, idx), 1.0)
        freq /= cnt[:, None]
        h = bandwidth_constant * len(y) ** (-1.0 / 6.0)
        return cls(pts, cnt, freq, h, **kw)

    def _fit(self, alpha, responses, coords=None):
        coords = list(range(self.n_players)) if coords is None else list(coords)
        a0 = np.asarray(alpha, dtype=float)
        D = self.points[:, coords] - a0
        w = self.counts * np.prod(epanechnikov(D / self.h[coords]), axis=1)
        keep = w > 0
        if keep.sum() < self.min_points:
            raise SupportDeficient(f"only {int(keep.sum())} kernel cells near alpha = {tuple(a0)}")
        X = np.column_stack([np.ones(keep.sum()), D[keep]])
        sw = np.sqrt(w[keep])
        coef, _, rank, _ = np.linalg.lstsq(X * sw[:, None], responses[keep] * sw[:, None], rcond=None)
        if rank < X.shape[1]:
            raise SupportDeficient(f"kernel design is degenerate near alpha = {tuple(a0)}")
        return coef  # row 0 level, rows 1.. slopes

    def profile_probs(self, alpha):
        single = np.ndim(alpha) == 1
        out = np.array([self._fit(a, self.freq)[0] for a in np.atleast_2d(alpha)])
        return out[0] if single else out

    def profile_derivative(self, i, alpha):
        return self._fit(alpha, self.freq)[1 + i]

    def subset_mean(self, T, alpha_T):
        T = list(T)
        M = _profile_products(self.n_players)
        mask = np.zeros(self.n_players, dtype=int)
        mask[T] = 1
        row = M[int(mask @ (2 ** np.arange(self.n_players - 1, -1, -1)))]
        resp = (self.freq @ row)[:, None]
        alpha_T = np.atleast_2d(alpha_T)
        return np.array([self._fit(a, resp, T)[0, 0] for a in alpha_T])


# ---------------------------------------------------------------------------
# copula on a grid

@dataclass
class CopulaEstimate:
    """Copula values on a product grid, with the extended-support mask.

    ``values`` is NaN off the mask. ``monotone`` records whether the masked
    values are componentwise nondecreasing (within ``tol``).
    """

    nodes: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    kind: str
    monotone: bool = True

    def to_rows(self):
        I = self.values.ndim
        rows = []
        for idx in np.ndindex(self.values.shape):
            rows.append([float(self.nodes[k]) for k in idx] + [
                "" if not self.mask[idx] else repr(float(self.values[idx]))])
        return [f"alpha_{k + 1}" for k in range(I)] + ["C"], rows


def _extended_mask(support, mesh):
    """Grid points in the extended support: some coordinates at 1, the rest in the projected hull."""
    I = mesh.shape[-1]
    flat = mesh.reshape(-1, I)
    ok = np.zeros(len(flat), dtype=bool)
    for T in all_profiles(I):
        coords = np.flatnonzero(T)
        rest = np.flatnonzero(T == 0)
        match = np.all(flat[:, rest] == 1.0, axis=1) if len(rest) else np.ones(len(flat), bool)
        if not len(coords):
            ok |= match
            continue
        if np.any(match):
            sub = support.project(coords)
            ok[match] |= sub.contains(flat[match][:, coords])
    ok |= np.any(flat == 0.0, axis=1)
    return ok.reshape(mesh.shape[:-1])


def _is_monotone(values, mask, tol):
    for k in range(values.ndim):
        d = np.diff(values, axis=k)
        both = np.logical_and(np.take(mask, range(1, mask.shape[k]), axis=k),
                              np.take(mask, range(mask.shape[k] - 1), axis=k))
        if np.any(d[both] < -tol):
            return False
    return True


def estimate_copula(joint, nodes=None, tol=None):
    """Tabulate the copula implied by a joint regression on its extended support.

    Zero-coordinate grid points are set to 0; grid points outside the mask
    are left as NaN rather than extrapolated.
    """
    I = joint.n_players
    nodes = np.linspace(0.0, 1.0, 21) if nodes is None else np.asarray(nodes, dtype=float)
    mesh = np.stack(np.meshgrid(*([nodes] * I), indexing="ij"), axis=-1)
    mask = _extended_mask(joint.support, mesh)
    values = np.full(mask.shape, np.nan)
    for idx in zip(*np.nonzero(mask)):
        a = mesh[idx]
        if np.any(a == 0.0):
            values[idx] = 0.0
            continue
        T = np.flatnonzero(a < 1.0)
        if not len(T):
            values[idx] = 1.0
            continue
        try:
            values[idx] = float(np.ravel(joint.subset_mean(T, a[T][None, :]))[0])
        except SupportDeficient:
            mask[idx] = False
    kind = "population" if isinstance(joint, PopulationJoint) else "local_linear"
    if tol is None:
        tol = 1e-10 if kind == "population" else 1e-3
    return CopulaEstimate(nodes, values, mask, kind, _is_monotone(values, mask, tol))
