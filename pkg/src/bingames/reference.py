"""Reference games used by the test suite, the demos and the command line.

The two "substitutes" games below have payoffs ``pi_i = x_i - beta_i * a_{-i}``
with standard normal types joined by a Gaussian copula.

* case 1: ``x = (1, 0)``, ``beta = (2, 0)``. Player 2 has the dominant cutoff 0;
  player 1's gap is ``1 - 2 Phi(-rho u / sqrt(1 - rho^2)) - u``, which stops being
  monotone once ``rho > sqrt(pi / (2 + pi))``.
* case 2: ``x = (1, 1)``, ``beta = (2, 2)``. The symmetric cutoffs ``(0, 0)`` form
  the unique equilibrium up to ``rho = (pi - 2) / (2 + pi)``; beyond it two
  asymmetric equilibria ``(u, -u)`` and ``(-u, u)`` appear.
"""

import numpy as np
from scipy.special import ndtr

from .game_core import (
    GaussianCopula,
    GameStructure,
    GridDesign,
    IndependenceCopula,
    LinearIndexPayoff,
    standard_normal,
)

RHO_MONOTONE = float(np.sqrt(np.pi / (2.0 + np.pi)))
RHO_MULTIPLE = float((np.pi - 2.0) / (2.0 + np.pi))


def _copula(rho):
    return IndependenceCopula(2) if rho is None else GaussianCopula.bivariate(rho)


def substitutes_game(x, beta, rho):
    """Two-player game ``pi_i = x_i - beta_i a_{-i}``, normal types, Gaussian copula."""
    payoffs = [
        LinearIndexPayoff(i, 2, intercept=0.0, slope=1.0, interaction=[0.0, -float(beta[i])])
        for i in range(2)
    ]
    return GameStructure(payoffs, [standard_normal(), standard_normal()], _copula(rho),
                         design=GridDesign([x]), name="substitutes")


def example_case1(rho):
    x = np.array([1.0, 0.0])
    return substitutes_game(x, (2.0, 0.0), rho), x


def example_case2(rho):
    x = np.array([1.0, 1.0])
    return substitutes_game(x, (2.0, 2.0), rho), x


def case1_gap(u1, rho):
    """Player 1's gap in case 1 when player 2 uses cutoff 0."""
    s = np.sqrt(1.0 - rho * rho)
    return 1.0 - 2.0 * ndtr(-rho * np.asarray(u1, dtype=float) / s) - np.asarray(u1, dtype=float)


def case2_asymmetric_equation(u, rho):
    """Left side whose positive root is the asymmetric case-2 cutoff."""
    k = np.sqrt((1.0 + rho) / (1.0 - rho))
    return 1.0 - 2.0 * ndtr(k * np.asarray(u, dtype=float)) + np.asarray(u, dtype=float)


def linear_index_game(intercepts, slopes, interactions, rho, design=None, marginals=None):
    """Two-player linear-index game with exclusion and a Gaussian (or independence) copula.

    ``interactions[i]`` is the pair ``(pi_i(a_{-i}=0) shift, pi_i(a_{-i}=1) shift)``.
    """
    payoffs = [LinearIndexPayoff(i, 2, intercepts[i], slopes[i], interactions[i]) for i in range(2)]
    if marginals is None:
        marginals = [standard_normal(), standard_normal()]
    return GameStructure(payoffs, marginals, _copula(rho), design=design, name="linear_index")


def reference_sample_game(n_grid=21, rho=0.0):
    """Two-player substitutes game on an ``n_grid x n_grid`` covariate grid over [-1, 1]^2.

    ``pi_i(a_j, x_i) = 1 + x_i - 2 a_j`` with standard normal margins; the
    equilibrium is unique and choice probabilities span about (0.03, 0.97).
    """
    axis = np.linspace(-1.0, 1.0, n_grid)
    design = GridDesign.product(axis, axis)
    return linear_index_game([1.0, 1.0], [1.0, 1.0], [[0.0, -2.0], [0.0, -2.0]], rho, design=design)


#: Sample-mode estimator settings calibrated on :func:`reference_sample_game`.
REFERENCE_ESTIMATOR = {"degree": 5, "bandwidth_constant": 1.5, "K": 4, "basis": "hermite",
                       "alpha_trim": 0.05, "cell_bandwidth": 0.5, "x_star": {0: 0.0, 1: 0.0}}
