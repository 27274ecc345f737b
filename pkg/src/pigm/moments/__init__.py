"""Moments of the permutation-invariant Gaussian model."""
from .analytic import cubic_expectation_analytic, cubic_expression
from .params import (GraphCouplings, ModelParams, PatternMoments, covariance_tensor, embed_13param,
                     from_graph_couplings, mean_matrix, pattern_moments, to_graph_couplings)
from .sigma import coupling_shift_sigma, theoretical_sigma
from .symbolic import MomentExpression, symbolic_expectation
from .wick import CostBudgetExceeded, expectation, variance_cost, variance_exact

__all__ = [
    "cubic_expectation_analytic", "cubic_expression", "GraphCouplings", "ModelParams",
    "PatternMoments", "covariance_tensor", "embed_13param", "from_graph_couplings", "mean_matrix",
    "pattern_moments", "to_graph_couplings", "coupling_shift_sigma", "theoretical_sigma",
    "MomentExpression", "symbolic_expectation", "CostBudgetExceeded", "expectation",
    "variance_cost", "variance_exact",
]
