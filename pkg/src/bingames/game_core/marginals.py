"""Marginal type distributions, parameterized by their quantile functions."""

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from ..errors import DomainError

EFFECTIVE_TAIL = 1e-6


def _bisect_inverse(f, y, lo, hi, iters=200, xtol=1e-14):
    """Vectorized bisection for increasing ``f`` on the bracket [lo, hi]."""
    y = np.asarray(y, dtype=float)
    a = np.full(y.shape, float(lo))
    b = np.full(y.shape, float(hi))
    for _ in range(iters):
        m = 0.5 * (a + b)
        below = f(m) < y
        a = np.where(below, m, a)
        b = np.where(below, b, m)
        if np.all(b - a <= xtol * np.maximum(1.0, np.abs(m))):
            break
    return 0.5 * (a + b)


class Marginal:
    """A continuous, strictly increasing marginal for one player's type."""

    kind = "abstract"

    def ppf(self, p):
        raise NotImplementedError

    def cdf(self, u):
        raise NotImplementedError

    @property
    def support(self):
        """Closed support ``(lower, upper)``; infinite for unbounded laws."""
        return (-np.inf, np.inf)

    def effective_support(self, tail=EFFECTIVE_TAIL):
        """Interval carrying all but ``2 * tail`` of the mass."""
        return float(self.ppf(tail)), float(self.ppf(1.0 - tail))

    def describe(self):
        return {"kind": self.kind}

    def __eq__(self, other):
        return type(self) is type(other) and self.describe() == other.describe()

    def __hash__(self):
        return hash(repr(self.describe()))


class _LocationScaleMarginal(Marginal):
    """Location-scale family evaluated through ``_std_cdf`` / ``_std_ppf``."""

    def __init__(self, loc=0.0, scale=1.0):
        if not scale > 0:
            raise DomainError("marginal scale must be positive")
        self.loc = float(loc)
        self.scale = float(scale)

    def ppf(self, p):
        return self.loc + self.scale * self._std_ppf(np.asarray(p, dtype=float))

    def cdf(self, u):
        return self._std_cdf((np.asarray(u, dtype=float) - self.loc) / self.scale)

    def describe(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale}


class NormalMarginal(_LocationScaleMarginal):
    kind = "normal"
    _std_cdf = staticmethod(special.ndtr)
    _std_ppf = staticmethod(special.ndtri)


class LogisticMarginal(_LocationScaleMarginal):
    kind = "logistic"
    _std_cdf = staticmethod(special.expit)
    _std_ppf = staticmethod(special.logit)


class UniformMarginal(_LocationScaleMarginal):
    """Uniform on ``[loc, loc + scale]``; the default is the unit interval."""

    kind = "uniform"

    @staticmethod
    def _std_cdf(z):
        return np.clip(z, 0.0, 1.0)

    @staticmethod
    def _std_ppf(p):
        return np.where((p >= 0) & (p <= 1), p, np.nan)

    @property
    def support(self):
        return (self.loc, self.loc + self.scale)


class TabulatedMarginal(Marginal):
    """Quantile function interpolated through ``(probs, values)`` with PCHIP.

    Types beyond the declared grid are clamped: the CDF is 0 below the first
    value and 1 above the last, and quantiles outside ``probs`` extrapolate
    no further than the end values.
    """

    kind = "tabulated"

    def __init__(self, probs, values):
        probs = np.asarray(probs, dtype=float)
        values = np.asarray(values, dtype=float)
        if probs.shape != values.shape or probs.ndim != 1 or len(probs) < 2:
            raise DomainError("tabulated marginal needs matching 1-d probs and values")
        if np.any(np.diff(probs) <= 0) or np.any(np.diff(values) <= 0):
            raise DomainError("tabulated marginal must be strictly increasing")
        if probs[0] < 0 or probs[-1] > 1:
            raise DomainError("tabulated marginal probabilities must lie in [0, 1]")
        self.probs = probs
        self.values = values
        self._q = PchipInterpolator(probs, values, extrapolate=False)

    @property
    def support(self):
        return (float(self.values[0]), float(self.values[-1]))

    def ppf(self, p):
        p = np.clip(np.asarray(p, dtype=float), self.probs[0], self.probs[-1])
        return self._q(p)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.clip(u, self.values[0], self.values[-1])
        p = _bisect_inverse(self._q, inside, self.probs[0], self.probs[-1])
        p = np.where(u < self.values[0], 0.0, p)
        p = np.where(u >= self.values[-1], 1.0, p)
        return p

    def effective_support(self, tail=EFFECTIVE_TAIL):
        lo = self.ppf(max(tail, self.probs[0]))
        hi = self.ppf(min(1 - tail, self.probs[-1]))
        return float(lo), float(hi)

    def describe(self):
        return {"kind": self.kind, "probs": self.probs.tolist(), "values": self.values.tolist()}


class TransformedMarginal(Marginal):
    """Law of ``psi(U)`` for ``U`` from ``base`` and strictly increasing ``psi``.

    ``psi`` must accept arrays. Its inverse is computed numerically unless given.
    """

    kind = "transformed"

    def __init__(self, base, psi, psi_inverse=None, label="psi"):
        self.base = base
        self.psi = psi
        self.psi_inverse = psi_inverse
        self.label = label

    @property
    def support(self):
        lo, hi = self.base.support
        return (float(self.psi(lo)) if np.isfinite(lo) else -np.inf,
                float(self.psi(hi)) if np.isfinite(hi) else np.inf)

    def ppf(self, p):
        return self.psi(self.base.ppf(p))

    def _inverse(self, v):
        if self.psi_inverse is not None:
            return self.psi_inverse(v)
        lo, hi = self.base.effective_support(1e-15)
        span = hi - lo
        return _bisect_inverse(self.psi, v, lo - 10 * span, hi + 10 * span)

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        out = np.where(np.isposinf(v), 1.0, 0.0)
        finite = np.isfinite(v)
        if np.any(finite):
            out = out.astype(float)
            out[finite] = self.base.cdf(self._inverse(v[finite]))
        return out if out.ndim else float(out)

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe(), "psi": self.label}

    def __eq__(self, other):
        return (type(self) is type(other) and self.psi is other.psi
                and self.base == other.base)

    def __hash__(self):
        return hash((id(self.psi), self.base))


def standard_normal():
    return NormalMarginal(0.0, 1.0)
