"""Copula families for the joint law of private types.

All evaluation methods broadcast over leading axes: ``alpha`` has shape
``(..., I)`` and the result has shape ``(...)``.
"""

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import ndtr, ndtri

from ..errors import BoundaryError, DomainError
from ._mvn import bvn_cdf, mvn_orthant


def _check_unit(alpha, dim, name="alpha"):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[-1] != dim:
        raise DomainError(f"{name} must have last axis of length {dim}, got shape {alpha.shape}")
    if np.any(~np.isfinite(alpha)) or np.any(alpha < 0.0) or np.any(alpha > 1.0):
        raise DomainError(f"{name} coordinates must lie in [0, 1]")
    return alpha


def _check_level(a, name="alpha_i"):
    a = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    if np.any((a == 0.0) | (a == 1.0)):
        raise BoundaryError(f"{name} must lie strictly inside (0, 1) for a conditional copula")
    return a


class Copula:
    """Base class. Subclasses implement ``_cdf`` and ``_conditional``."""

    family = "abstract"
    exact = True  # closed-form or quadrature accuracy, as opposed to tabulated

    def __init__(self, dim):
        if int(dim) < 1:
            raise DomainError("copula dimension must be positive")
        self.dim = int(dim)

    def cdf(self, alpha):
        """C(alpha)."""
        alpha = _check_unit(alpha, self.dim)
        return self._cdf(alpha)

    def conditional(self, i, alpha):
        """``P(V_j <= alpha_j for all j != i | V_i = alpha_i)`` for uniform-margin ``V``.

        Parameters
        ----------
        i : int
            Conditioning coordinate.
        alpha : array_like, shape (..., I)
            Coordinate ``i`` is the conditioning level and must be in (0, 1);
            the remaining coordinates are rectangle limits in [0, 1].
        """
        alpha = _check_unit(alpha, self.dim)
        _check_level(alpha[..., i])
        return self._conditional(int(i), alpha)

    def conditional_grid(self, i, own, rivals):
        """Conditional lower-orthant probabilities on a grid, shape ``(len(own), len(rivals))``.

        ``own`` holds conditioning levels for coordinate ``i``; each row of
        ``rivals`` (shape ``(N, I-1)``) holds the limits of the other coordinates.
        """
        own = _check_level(own)
        rivals = np.atleast_2d(np.asarray(rivals, dtype=float))
        full = np.empty((len(own), len(rivals), self.dim))
        rest = [j for j in range(self.dim) if j != i]
        full[..., rest] = rivals[None, :, :]
        full[..., i] = own[:, None]
        return self.conditional(i, full)

    def sample(self, n, rng):
        """Draw ``n`` uniform-margin vectors, shape ``(n, I)``."""
        raise NotImplementedError(f"sampling is not available for the {self.family} copula")

    def describe(self):
        return {"family": self.family, "dim": self.dim}

    def __eq__(self, other):
        return type(self) is type(other) and self.describe() == other.describe()

    def __hash__(self):
        return hash(repr(self.describe()))


class IndependenceCopula(Copula):
    family = "independence"

    def _cdf(self, alpha):
        return np.prod(alpha, axis=-1)

    def _conditional(self, i, alpha):
        return np.prod(np.delete(alpha, i, axis=-1), axis=-1)

    def sample(self, n, rng):
        return rng.random((int(n), self.dim))


class GaussianCopula(Copula):
    """Gaussian copula with correlation matrix ``corr``.

    The matrix must be symmetric with unit diagonal and positive definite.
    """

    family = "gaussian"

    def __init__(self, corr):
        corr = np.atleast_2d(np.asarray(corr, dtype=float))
        if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
            raise DomainError("correlation matrix must be square")
        if not np.allclose(corr, corr.T, atol=1e-12):
            raise DomainError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
            raise DomainError("correlation matrix must have unit diagonal")
        if corr.shape[0] > 1 and np.linalg.eigvalsh(corr).min() <= 1e-10:
            raise DomainError("correlation matrix must be positive definite")
        super().__init__(corr.shape[0])
        self.corr = corr.copy()
        self.corr.setflags(write=False)
        self._chol = np.linalg.cholesky(self.corr)

    @classmethod
    def bivariate(cls, rho):
        return cls([[1.0, rho], [rho, 1.0]])

    @classmethod
    def equicorrelated(cls, dim, rho):
        R = np.full((dim, dim), float(rho))
        np.fill_diagonal(R, 1.0)
        return cls(R)

    @property
    def rho(self):
        """Off-diagonal correlation for the bivariate case."""
        if self.dim != 2:
            raise AttributeError("rho is defined only for bivariate copulas")
        return float(self.corr[0, 1])

    def _cdf(self, alpha):
        z = ndtri(alpha)
        if self.dim == 1:
            return alpha[..., 0].copy()
        if self.dim == 2:
            return bvn_cdf(z[..., 0], z[..., 1], self.corr[0, 1])
        return mvn_orthant(z, self.corr)

    def _conditional(self, i, alpha):
        z = ndtri(alpha)
        zi = z[..., i]
        others = [j for j in range(self.dim) if j != i]
        r = self.corr[i, others]
        s = np.sqrt(1.0 - r * r)
        with np.errstate(invalid="ignore"):
            b = (z[..., others] - zi[..., None] * r) / s
        # limits at +/-inf stay infinite after the shift
        b = np.where(np.isinf(z[..., others]), z[..., others], b)
        if len(others) == 1:
            return ndtr(b[..., 0])
        Rc = (self.corr[np.ix_(others, others)] - np.outer(r, r)) / np.outer(s, s)
        np.fill_diagonal(Rc, 1.0)
        if len(others) == 2:
            return bvn_cdf(b[..., 0], b[..., 1], Rc[0, 1])
        return mvn_orthant(b, Rc)

    def conditional_grid(self, i, own, rivals):
        if self.dim != 2:
            return super().conditional_grid(i, own, rivals)
        own = _check_level(own)
        rivals = _check_unit(np.atleast_2d(rivals), 1, "rivals")
        r = self.corr[0, 1]
        zi = ndtri(own)
        zj = ndtri(rivals[:, 0])
        with np.errstate(invalid="ignore"):
            b = (zj[None, :] - r * zi[:, None]) / np.sqrt(1.0 - r * r)
        b = np.where(np.isinf(zj)[None, :], zj[None, :], b)
        return ndtr(b)

    def sample(self, n, rng):
        z = rng.standard_normal((int(n), self.dim)) @ self._chol.T
        return ndtr(z)

    def describe(self):
        return {"family": self.family, "dim": self.dim, "corr": self.corr.round(15).tolist()}


class TabulatedCopula(Copula):
    """Copula given by its values on a product grid, multilinearly interpolated.

    Parameters
    ----------
    nodes : array_like
        Increasing grid on [0, 1] shared by all coordinates; must start at 0 and end at 1.
    values : ndarray, shape (len(nodes),) * I
        Copula values on the grid.
    tol : float
        Tolerance for the grounding, uniform-margin and monotonicity checks.
    """

    family = "tabulated"
    exact = False

    def __init__(self, nodes, values, tol=1e-6):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        dim = values.ndim
        super().__init__(dim)
        if nodes.ndim != 1 or nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0):
            raise DomainError("tabulated copula nodes must increase strictly from 0 to 1")
        if values.shape != (len(nodes),) * dim:
            raise DomainError("tabulated copula values must be a full grid over the nodes")
        self._validate(nodes, values, tol)
        self.nodes = nodes
        self.values = values
        self.tol = tol
        self._interp = RegularGridInterpolator((nodes,) * dim, values, method="linear")

    @staticmethod
    def _validate(nodes, values, tol):
        dim = values.ndim
        for k in range(dim):
            lo = np.take(values, 0, axis=k)
            if np.max(np.abs(lo)) > tol:
                raise DomainError(f"tabulated copula is not grounded along coordinate {k}")
            edge = values[tuple(slice(None) if j == k else -1 for j in range(dim))]
            if np.max(np.abs(edge - nodes)) > tol:
                raise DomainError(f"tabulated copula margin {k} is not uniform")
            if np.min(np.diff(values, axis=k)) < -tol:
                raise DomainError(f"tabulated copula decreases along coordinate {k}")

    @classmethod
    def from_copula(cls, copula, nodes, tol=1e-6):
        """Tabulate another copula on ``nodes``."""
        nodes = np.asarray(nodes, dtype=float)
        mesh = np.stack(np.meshgrid(*([nodes] * copula.dim), indexing="ij"), axis=-1)
        return cls(nodes, copula.cdf(mesh), tol=tol)

    def _cdf(self, alpha):
        shape = alpha.shape[:-1]
        return self._interp(alpha.reshape(-1, self.dim)).reshape(shape)

    def _conditional(self, i, alpha):
        # slope of the multilinear interpolant on the cell containing alpha_i
        k = np.clip(np.searchsorted(self.nodes, alpha[..., i], side="right") - 1, 0, len(self.nodes) - 2)
        lo = alpha.copy()
        hi = alpha.copy()
        lo[..., i] = self.nodes[k]
        hi[..., i] = self.nodes[k + 1]
        return (self._cdf(hi) - self._cdf(lo)) / (self.nodes[k + 1] - self.nodes[k])

    def describe(self):
        return {
            "family": self.family,
            "dim": self.dim,
            "nodes": self.nodes.tolist(),
            "values": np.asarray(self.values).round(15).ravel().tolist(),
        }
