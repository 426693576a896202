"""Identification of payoffs, quantiles and the type copula from choice probabilities."""

from .beliefs import belief_table, estimate_beliefs, independence_beliefs
from .ccp import CCPEstimate, PopulationCCPEstimate, SieveCCP, estimate_ccp
from .joint import (CopulaEstimate, LocalLinearJoint, PopulationJoint, Support,
                    estimate_copula)
from .payoffs import (PlayerIdentification, QuantileGrid, iterate_collection,
                      recover_payoffs_cell, recover_quantiles, scale_sign)
from .partial import (Hyperplane, default_kappa, default_psi, hyperplane_residuals,
                      partial_id_hyperplane, transform_structure)
from .pipeline import IdentificationResult, identify_population, identify_sample, normalized_truth
from .rank import CellData, RankSystem, build_rank_system

__all__ = [
    "belief_table", "estimate_beliefs", "independence_beliefs",
    "CCPEstimate", "PopulationCCPEstimate", "SieveCCP", "estimate_ccp",
    "CopulaEstimate", "LocalLinearJoint", "PopulationJoint", "Support", "estimate_copula",
    "PlayerIdentification", "QuantileGrid", "iterate_collection", "recover_payoffs_cell",
    "recover_quantiles", "scale_sign",
    "Hyperplane", "default_kappa", "default_psi", "hyperplane_residuals",
    "partial_id_hyperplane", "transform_structure",
    "IdentificationResult", "identify_population", "identify_sample", "normalized_truth",
    "CellData", "RankSystem", "build_rank_system",
]
