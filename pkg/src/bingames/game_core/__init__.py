"""Game primitives and probability kernels."""

from .copulas import Copula, GaussianCopula, IndependenceCopula, TabulatedCopula
from .kernels import (
    ThresholdProfile,
    belief_from_alpha,
    belief_sigma,
    check_prd,
    check_scp,
    conditional_copula,
    copula_cdf,
    expected_payoff_gap,
    profile_probabilities,
    rectangle_probability,
    thresholds_to_alpha,
)
from .marginals import (
    LogisticMarginal,
    Marginal,
    NormalMarginal,
    TabulatedMarginal,
    TransformedMarginal,
    UniformMarginal,
    standard_normal,
)
from .payoffs import CallablePayoff, LinearIndexPayoff, PlayerPayoff, TabularPayoff
from .profiles import all_profiles, profile_index, profile_label
from .structure import BoxDesign, GameStructure, GridDesign

__all__ = [
    "Copula", "GaussianCopula", "IndependenceCopula", "TabulatedCopula",
    "ThresholdProfile", "belief_from_alpha", "belief_sigma", "check_prd", "check_scp",
    "conditional_copula", "copula_cdf", "expected_payoff_gap", "profile_probabilities",
    "rectangle_probability", "thresholds_to_alpha",
    "LogisticMarginal", "Marginal", "NormalMarginal", "TabulatedMarginal",
    "TransformedMarginal", "UniformMarginal", "standard_normal",
    "CallablePayoff", "LinearIndexPayoff", "PlayerPayoff", "TabularPayoff",
    "all_profiles", "profile_index", "profile_label",
    "BoxDesign", "GameStructure", "GridDesign",
]
