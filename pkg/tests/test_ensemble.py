import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pigm.ensemble import (CorrelationMatrix, Ensemble, EnsembleError, Permutation, concat, permute,
                           read_ensemble, validate_matrix, write_ensemble)

from conftest import random_symmetric


def test_zero_and_unit_offdiagonal_are_valid():
    assert isinstance(validate_matrix(np.zeros((2, 2))), CorrelationMatrix)
    m = validate_matrix([[0, 1], [1, 0]])
    assert m.entries[0, 1] == 1.0 and m.dim == 2


@pytest.mark.parametrize("raw", [[[0, 1], [0.5, 0]], [[0, 1, 2], [1, 0, 3]], [[0, np.nan], [np.nan, 0]]])
def test_invalid_matrices_rejected(raw):
    with pytest.raises(EnsembleError):
        validate_matrix(raw)


def test_diagonal_forced_to_zero():
    m = validate_matrix([[3.0, 1.0], [1.0, -2.0]])
    assert np.all(np.diag(m.entries) == 0.0)


def test_entries_are_read_only():
    m = validate_matrix(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        m.entries[0, 1] = 1.0


def test_permute_identity_and_involution(rng):
    m = validate_matrix(random_symmetric(3, rng))
    assert permute(m, Permutation.identity(3)) == m
    swap = Permutation((0, 2, 1))
    assert permute(permute(m, swap), swap) == m


def test_permute_relabels_indices():
    m = np.zeros((3, 3))
    m[0, 1] = m[1, 0] = 1.0
    out = permute(validate_matrix(m), Permutation((1, 2, 0))).entries
    expected = np.zeros((3, 3))
    expected[1, 2] = expected[2, 1] = 1.0
    assert np.array_equal(out, expected)


def test_permute_dimension_mismatch():
    with pytest.raises(EnsembleError):
        permute(validate_matrix(np.zeros((3, 3))), Permutation.identity(4))


def test_not_a_permutation():
    with pytest.raises(EnsembleError):
        Permutation((0, 0, 1))


@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_validate_idempotent_and_permute_preserves_entries(d, seed):
    rng = np.random.default_rng(seed)
    m = validate_matrix(random_symmetric(d, rng))
    assert validate_matrix(m.entries) == m
    p = permute(m, Permutation.random(d, rng))
    assert np.array_equal(np.sort(p.entries, axis=None), np.sort(m.entries, axis=None))
    assert np.array_equal(p.entries, p.entries.T)
    assert permute(p, Permutation(tuple(rng.permutation(d)))).dim == d


@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_permute_inverse_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    m = validate_matrix(random_symmetric(d, rng))
    s = Permutation.random(d, rng)
    assert permute(permute(m, s), s.inverse()) == m


def _ensemble(rng, n=3, d=4):
    stack = np.array([random_symmetric(d, rng) for _ in range(n)])
    return Ensemble.from_stack(stack, [f"2021-01-0{k + 1}" for k in range(n)])


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_round_trip_bit_exact(tmp_path, rng, suffix):
    ens = _ensemble(rng)
    ens_meta = Ensemble(ens.dim, ens.data, ens.labels, {"source": "unit"})
    path = tmp_path / f"e{suffix}"
    write_ensemble(ens_meta, path)
    back = read_ensemble(path)
    assert back == ens
    assert back.meta["source"] == "unit"


def test_round_trip_awkward_doubles(tmp_path):
    vals = np.array([1e-300, -0.1, 1 / 3, 2.0**-1074, 123456789.123456789, -0.0])
    m = np.zeros((4, 4))
    iu = np.triu_indices(4, 1)
    m[iu] = vals
    ens = Ensemble.from_stack((m + m.T)[None])
    for suffix in (".csv", ".json"):
        write_ensemble(ens, tmp_path / f"x{suffix}")
        assert np.array_equal(read_ensemble(tmp_path / f"x{suffix}").upper(), ens.upper())


def test_mixed_dims_rejected(tmp_path):
    doc = {"dim": 3, "days": [{"label": "a", "upper": [1, 2, 3]}, {"label": "b", "upper": [1, 2, 3, 4, 5, 6]}]}
    (tmp_path / "mixed.json").write_text(json.dumps(doc))
    with pytest.raises(EnsembleError):
        read_ensemble(tmp_path / "mixed.json")
    (tmp_path / "mixed.csv").write_text("label,i,j,value\na,0,1,0.5\nb,0,1,0.1\nb,0,2,0.2\nb,1,2,0.3\n")
    with pytest.raises(EnsembleError):
        read_ensemble(tmp_path / "mixed.csv")


def test_empty_file_gives_empty_ensemble(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("# dim: 5\nlabel,i,j,value\n")
    ens = read_ensemble(path)
    assert ens.size == 0 and ens.dim == 5
    path.write_text("# dim: 5\n")
    assert read_ensemble(path).dim == 5
    path.write_text("")
    with pytest.raises(EnsembleError):
        read_ensemble(path)


@pytest.mark.parametrize("body", [
    "label,i,j,val\n",
    "label,i,j,value\na,1,0,0.5\n",
    "label,i,j,value\na,0,1,x\n",
    "label,i,j,value\na,0,1,0.5\na,0,1,0.5\n",
])
def test_malformed_csv(tmp_path, body):
    (tmp_path / "bad.csv").write_text(body)
    with pytest.raises(EnsembleError):
        read_ensemble(tmp_path / "bad.csv")


def test_missing_file(tmp_path):
    with pytest.raises(EnsembleError):
        read_ensemble(tmp_path / "nope.csv")


def test_ensemble_labels_unique_and_concat(rng):
    a = _ensemble(rng)
    with pytest.raises(EnsembleError):
        concat([a, a])
    b = Ensemble.from_stack(a.data, ["x", "y", "z"])
    c = concat([a, b])
    assert c.size == 6 and c[3].label == "x"
    with pytest.raises(EnsembleError):
        concat([a, _ensemble(rng, d=5)])


def test_subset_and_upper(rng):
    ens = _ensemble(rng, n=4, d=5)
    sub = ens.subset([2, 0])
    assert sub.labels == (ens.labels[2], ens.labels[0])
    assert ens.upper().shape == (4, 10)
    assert np.array_equal(ens.upper()[1], ens[1].upper())
