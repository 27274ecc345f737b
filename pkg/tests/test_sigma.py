import itertools
import math

import pytest

from pigm.moments import ModelParams, expectation, theoretical_sigma, variance_exact
from pigm.moments.sigma import SHIFT_PRESET, coupling_shift_sigma, shifted_params


def test_shifted_points_and_clipping():
    p = ModelParams.from_inverse(0.2, 0.5, 0.1, 0.3)
    pts = shifted_params(p, [0.1, 0.2, 0.05])
    assert len(pts) == 8
    inv = {q.inverse for q in pts}
    want = {(max(0.5 + a * 0.1, 0), max(0.1 + b * 0.2, 0), max(0.3 + c * 0.05, 0))
            for a, b, c in itertools.product((1, -1), repeat=3)}
    assert {tuple(round(x, 12) for x in t) for t in inv} == {tuple(round(x, 12) for x in t) for t in want}
    assert all(q.mu_tilde_v0 == 0.2 for q in pts)
    assert min(q.inv_vh for q in pts) == 0.0


def test_shift_sigma_by_hand():
    p = ModelParams.from_inverse(0.4, 0.5, 0.2, 0.3)
    s = (0.05, 0.02, 0.01)
    base = expectation("O5", p, 9)
    diffs = []
    for signs in itertools.product((1, -1), repeat=3):
        q = ModelParams.from_inverse(0.4, *(b + g * w for b, g, w in zip(p.inverse, signs, s)))
        diffs.append(abs(expectation("O5", q, 9) - base))
    assert coupling_shift_sigma("O5", p, 9, s) == pytest.approx(sum(diffs) / 8)
    assert theoretical_sigma("O5", p, 9, "coupling_shift", s) == pytest.approx(sum(diffs) / 8)


def test_zero_shift_gives_zero():
    p = ModelParams.from_inverse(0.4, 0.5, 0.2, 0.3)
    assert coupling_shift_sigma("O3", p, 7, (0, 0, 0)) == 0.0


def test_exact_is_sqrt_variance():
    p = ModelParams.from_inverse(0.4, 0.5, 0.2, 0.3)
    assert theoretical_sigma("Q2", p, 10) == pytest.approx(math.sqrt(variance_exact("Q2", p, 10)))


def test_bad_arguments():
    p = ModelParams(0.0, 1, 1, 1)
    with pytest.raises(ValueError):
        theoretical_sigma("O1", p, 6, "coupling_shift")
    with pytest.raises(ValueError):
        theoretical_sigma("O1", p, 6, "bogus")
    with pytest.raises(ValueError):
        shifted_params(p, (0.1, 0.1))
    with pytest.raises(ValueError):
        shifted_params(p, (0.1, -0.1, 0.1))


def test_shift_preset_names():
    assert SHIFT_PRESET == ("O12", "O19")
