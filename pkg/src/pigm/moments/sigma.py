"""Model-predicted standard deviation of an observable across days."""
from __future__ import annotations

import itertools
import math
from typing import Sequence

from .params import ModelParams
from .wick import DEFAULT_VARIANCE_BUDGET, expectation, variance_exact

METHODS = ("exact", "coupling_shift")

# observables whose sigma the reference preset estimates by coupling shifts
SHIFT_PRESET = ("O12", "O19")


def shifted_params(params: ModelParams, sigma_params: Sequence[float]) -> list:
    """The eight parameter points ``inv_tau +/- sigma`` (inverse couplings clipped at zero)."""
    if len(sigma_params) != 3:
        raise ValueError("sigma_params needs one entry per inverse coupling")
    if any(not math.isfinite(s) or s < 0 for s in sigma_params):
        raise ValueError(f"sigma_params must be finite and non-negative, got {sigma_params}")
    base = params.inverse
    out = []
    for signs in itertools.product((1.0, -1.0), repeat=3):
        inv = [max(b + s * w, 0.0) for b, s, w in zip(base, signs, sigma_params)]
        out.append(ModelParams.from_inverse(params.mu_tilde_v0, *inv))
    return out


def coupling_shift_sigma(obs, params: ModelParams, d: int, sigma_params: Sequence[float]) -> float:
    """Mean absolute change of ``<O>`` over the eight sign patterns of the coupling shifts."""
    centre = expectation(obs, params, d)
    diffs = [abs(expectation(obs, p, d) - centre) for p in shifted_params(params, sigma_params)]
    return sum(diffs) / len(diffs)


def theoretical_sigma(obs, params: ModelParams, d: int, method: str = "exact",
                      sigma_params: Sequence[float] | None = None,
                      budget: float | None = DEFAULT_VARIANCE_BUDGET) -> float:
    """``sqrt(Var O)`` under the model, or the coupling-shift estimate.

    ``method="exact"`` raises :class:`~pigm.moments.wick.CostBudgetExceeded`
    when the contraction cost exceeds ``budget``; callers fall back to
    ``coupling_shift``, which needs ``sigma_params``.
    """
    if method == "exact":
        return math.sqrt(abs(variance_exact(obs, params, d, budget=budget)))
    if method == "coupling_shift":
        if sigma_params is None:
            raise ValueError("coupling_shift needs sigma_params")
        return coupling_shift_sigma(obs, params, d, sigma_params)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
