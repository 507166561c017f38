"""Streaming multiclass boosting: OnlineMBBM, Adaboost.OLM and their building blocks."""

from .core import (CostKind, CostMatrix, EdgeDistribution, Example, LabelSpace,
                   argmax_label, edge_distribution_sample, validate_cost_matrix)
from .mbbm import OnlineMBBM
from .olm import AdaboostOLM, make_loss
from .potential import (PotentialEngine, PotentialTable, asymptotic_error_bound,
                        potential_exact, potential_mc, weight_norm_bound)
from .weaklearn import (AdversaryStream, EdgeOracleLearner, OnlineNaiveBayes,
                        OnlineStump, WeakLearner)

__all__ = [
    "AdaboostOLM", "AdversaryStream", "CostKind", "CostMatrix", "EdgeDistribution",
    "EdgeOracleLearner", "Example", "LabelSpace", "OnlineMBBM", "OnlineNaiveBayes",
    "OnlineStump", "PotentialEngine", "PotentialTable", "WeakLearner", "argmax_label",
    "asymptotic_error_bound", "edge_distribution_sample", "make_loss", "potential_exact",
    "potential_mc", "validate_cost_matrix", "weight_norm_bound",
]
