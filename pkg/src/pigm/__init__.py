"""Permutation-invariant Gaussian matrix models for ensembles of correlation matrices."""
from .ensemble import CorrelationMatrix, Ensemble, EnsembleError, Permutation, permute, read_ensemble, write_ensemble
from .moments import ModelParams, expectation, symbolic_expectation, theoretical_sigma
from .observables import catalog, evaluate, evaluate_stack, observable_vector

__version__ = "0.1.0"

__all__ = [
    "CorrelationMatrix", "Ensemble", "EnsembleError", "Permutation", "permute",
    "read_ensemble", "write_ensemble", "ModelParams", "expectation", "symbolic_expectation",
    "theoretical_sigma", "catalog", "evaluate", "evaluate_stack", "observable_vector",
]
