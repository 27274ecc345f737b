"""Fast invariant checks run by ``pigm selftest``."""
from __future__ import annotations

import math
import sys
from typing import Callable, Sequence, TextIO

import numpy as np

from .analysis import fisher_one_sided
from .ensemble import Permutation, permute, validate_matrix
from .moments import ModelParams, expectation, symbolic_expectation
from .observables import catalog, evaluate, evaluate_bruteforce
from .rep_theory import Irrep, projector_matrix

TOL = 1e-9


def _random_matrix(d: int, rng: np.random.Generator):
    a = rng.uniform(-1, 1, (d, d))
    a = np.triu(a, 1)
    return validate_matrix(a + a.T)


def check_projectors(d: int, rng) -> None:
    ps = [projector_matrix(d, r) for r in (Irrep.V0, Irrep.VH, Irrep.V2)]
    total = projector_matrix(d, Irrep.PHYS_TOTAL)
    for p in ps:
        assert np.allclose(p @ p, p, atol=TOL), "projector not idempotent"
    for a in range(3):
        for b in range(a + 1, 3):
            assert np.allclose(ps[a] @ ps[b], 0, atol=TOL), "projectors not orthogonal"
    assert np.allclose(sum(ps), total, atol=TOL), "projectors do not sum to the physical projector"
    traces = [np.trace(p) for p in ps]
    assert np.allclose(traces, [1, d - 1, d * (d - 3) / 2], atol=TOL), f"bad traces {traces}"


def check_observables(d: int, rng) -> None:
    m = _random_matrix(d, rng)
    perm = Permutation(tuple(rng.permutation(d)))
    pm = permute(m, perm)
    for obs in catalog():
        fast, brute = evaluate(m, obs), evaluate_bruteforce(m, obs)
        assert math.isclose(fast, brute, rel_tol=TOL, abs_tol=TOL), f"{obs.id}: {fast} != {brute}"
        assert math.isclose(evaluate(pm, obs), fast, rel_tol=TOL, abs_tol=TOL), f"{obs.id} not invariant"


def check_moments(d: int, rng) -> None:
    params = ModelParams.from_inverse(rng.uniform(-1, 1), *rng.uniform(0.05, 1.0, 3))
    for obs in catalog():
        if obs.degree > 3:
            continue
        a = expectation(obs, params, d)
        b = symbolic_expectation(obs).evaluate(params, d)
        assert math.isclose(a, b, rel_tol=TOL, abs_tol=TOL), f"{obs.id}: wick {a} != symbolic {b}"


def check_fisher(d: int, rng) -> None:
    n = 2 * d
    row1, col1 = d, int(rng.integers(1, n))
    denom = math.comb(n, row1)
    for a in range(max(0, row1 + col1 - n), min(row1, col1) + 1):
        tail = sum(math.comb(col1, x) * math.comb(n - col1, row1 - x)
                   for x in range(a, min(row1, col1) + 1)) / denom
        table = [[a, row1 - a], [col1 - a, n - row1 - col1 + a]]
        assert abs(fisher_one_sided(table) - tail) < 1e-12, f"fisher mismatch on {table}"


CHECKS: dict = {
    "projectors": check_projectors,
    "observables": check_observables,
    "moments": check_moments,
    "fisher": check_fisher,
}


def run_selfchecks(dims: Sequence[int] = (4, 6, 8), seed: int = 0, stream: TextIO | None = None,
                   checks: dict | None = None) -> int:
    """Run every check at every dimension; returns the number of failures."""
    stream = stream or sys.stdout
    failures = 0
    for d in dims:
        for name, fn in (checks or CHECKS).items():
            rng = np.random.default_rng([seed, d])
            try:
                fn(d, rng)
                status = "ok"
            except AssertionError as exc:
                failures += 1
                status = f"FAIL ({exc})"
            print(f"D={d} {name}: {status}", file=stream)
    return failures
