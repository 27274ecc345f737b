import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pigm.ensemble import Ensemble, Permutation, permute, validate_matrix
from pigm.observables import (PRESETS, ANOMALY12, UnknownObservable, catalog, ensemble_values, evaluate,
                              evaluate_bruteforce, evaluate_stack, get, observable_vector,
                              resolve_selection)

from conftest import random_symmetric

IDS = [o.id for o in catalog()]


def literal_sum(m, obs):
    """Independent oracle: explicit loop over every vertex assignment."""
    d = m.shape[0]
    n = obs.vertex_count
    total = 0.0
    for idx in itertools.product(range(d), repeat=n):
        term = 1.0
        for u, v in obs.edges:
            term *= m[idx[u], idx[v]]
        total += term
    return total


def test_catalog_shape():
    assert len(catalog()) == 35
    assert Counter(o.degree for o in catalog()) == {1: 1, 2: 3, 3: 8, 4: 23}
    assert set(map(frozenset, get("O3").edges)) == {frozenset(e) for e in [(0, 1), (1, 2), (2, 0)]}
    o31 = get("O31")
    assert o31.degree == 4 and o31.vertex_count == 8


def test_catalog_graphs_distinct():
    import networkx as nx

    graphs = []
    for o in catalog():
        g = nx.MultiGraph()
        g.add_edges_from(o.edges)
        graphs.append(g)
    for a, b in itertools.combinations(range(len(graphs)), 2):
        assert not nx.is_isomorphic(graphs[a], graphs[b]), (IDS[a], IDS[b])


def test_hand_values_d3():
    jm = np.ones((3, 3)) - np.eye(3)
    assert evaluate(jm, "O3") == pytest.approx(6.0)
    m = np.zeros((3, 3))
    m[0, 1] = m[1, 0] = 1.0
    assert [evaluate(m, o) for o in ("LIN", "Q1", "Q2", "Q3")] == pytest.approx([2, 2, 2, 4])
    assert evaluate(np.zeros((3, 3)), "O1") == 0.0


def test_o9_on_d2():
    x = 0.7
    assert evaluate_bruteforce([[0, x], [x, 0]], "O9") == pytest.approx(2 * x**4)
    assert evaluate([[0, x], [x, 0]], "O9") == pytest.approx(2 * x**4)


def test_zero_matrix_gives_zero():
    z = np.zeros((5, 5))
    assert all(evaluate_bruteforce(z, o) == 0 for o in catalog())


@pytest.mark.parametrize("d", [3, 4])
def test_bruteforce_matches_literal_loops(d, rng):
    m = random_symmetric(d, rng)
    for o in catalog():
        assert evaluate_bruteforce(m, o) == pytest.approx(literal_sum(m, o), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_fast_matches_bruteforce(d, rng):
    stack = np.array([random_symmetric(d, rng) for _ in range(20)])
    fast = evaluate_stack(stack, IDS)
    for k, o in enumerate(catalog()):
        assert np.allclose(fast[:, k], evaluate_bruteforce(stack, o), rtol=1e-9, atol=1e-12)


def test_bruteforce_cost_guard():
    with pytest.raises(ValueError):
        evaluate_bruteforce(np.zeros((9, 9)), "O31")
    assert evaluate_bruteforce(np.zeros((9, 9)), "O3") == 0.0


@given(st.integers(4, 9), st.integers(0, 2**32 - 1))
def test_permutation_invariance(d, seed):
    rng = np.random.default_rng(seed)
    m = validate_matrix(random_symmetric(d, rng))
    p = permute(m, Permutation.random(d, rng))
    a, b = evaluate_stack(m.entries, IDS), evaluate_stack(p.entries, IDS)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10)


@given(st.integers(4, 8), st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_homogeneity(d, seed, c):
    rng = np.random.default_rng(seed)
    m = random_symmetric(d, rng)
    base = evaluate_stack(m, IDS)
    scaled = evaluate_stack(c * m, IDS)
    degrees = np.array([o.degree for o in catalog()])
    assert np.allclose(scaled, c ** degrees * base, rtol=1e-9, atol=1e-9)


def test_selections():
    assert len(PRESETS["anomaly12"]) == 12 and PRESETS["anomaly12"] == ANOMALY12
    assert len(PRESETS["cubic_quartic"]) == 31
    assert len(PRESETS["cubic"]) == 8 and len(PRESETS["quartic"]) == 23
    assert resolve_selection("O3,Q1") == ("O3", "Q1")
    with pytest.raises(UnknownObservable):
        resolve_selection(["O99"])


def test_observable_vector(rng):
    m = validate_matrix(random_symmetric(6, rng), "day")
    v = observable_vector(m, "anomaly12")
    assert v.values.shape == (12,) and v.label == "day"
    assert v.values[0] == pytest.approx(evaluate(m, "O3"))
    assert observable_vector(m, []).values.shape == (0,)
    assert observable_vector(m, "cubic_quartic").values.shape == (31,)


def test_ensemble_values(rng):
    ens = Ensemble.from_stack([random_symmetric(5, rng) for _ in range(3)])
    ids, vals = ensemble_values(ens, "linear_quadratic")
    assert ids == ("LIN", "Q1", "Q2", "Q3") and vals.shape == (3, 4)
    assert vals[2, 3] == pytest.approx(math.pow(ens.data[2].sum(), 2))
