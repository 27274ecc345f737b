"""Hard-coded closed forms for the eight cubic expectation values.

Each entry is ``sqrt(D(D-1)) * prefactor(D) * mu_tilde * bracket`` where the
bracket is linear in ``mu_tilde^2`` and the three inverse couplings.  The
table reproduces the reference expressions verbatim, including the
coefficients that disagree with a direct Wick evaluation (see
``TABULATED_ERRATA``); :data:`CORRECTED` carries the first-principles value.
"""
from __future__ import annotations

import math

from .delta import RatD
from .params import ModelParams
from .symbolic import MomentExpression

_MU3, _MU_V0, _MU_VH, _MU_V2 = (3, 0, 0, 0), (1, 1, 0, 0), (1, 0, 1, 0), (1, 0, 0, 1)


def _poly(*coeffs) -> RatD:
    return RatD(coeffs)


# (prefactor multiplying sqrt(D(D-1)), bracket {monomial: polynomial in D})
TABULATED: dict = {
    "O1": (RatD((1,)).over(1, 1) / 2,
           {_MU3: _poly(2), _MU_V0: _poly(6), _MU_VH: _poly(-6, 6), _MU_V2: _poly(0, -3, 1)}),
    "O2": (RatD((1,)).over(1) / 2,
           {_MU3: _poly(2), _MU_V0: _poly(6), _MU_VH: _poly(-6, 4), _MU_V2: _poly(0, -3, 1)}),
    "O3": (RatD((1,)).over(2, 1) / 2,
           {_MU3: _poly(0, -4, 2), _MU_V0: _poly(-6, -6, 6),
            _MU_VH: _poly(6, 6, -15, 3), _MU_V2: _poly(0, 0, 9, -3)}),
    "O4": (RatD((1,)).over(1) / 2,
           {_MU3: _poly(0, 2), _MU_V0: _poly(0, 6), _MU_VH: _poly(0, -2, 2), _MU_V2: _poly(0, 0, -3, 1)}),
    "O5": (RatD((1,)).over(1) / 2,
           {_MU3: _poly(-2, 2), _MU_V0: _poly(-18, 6), _MU_VH: _poly(5, -7, 2)}),
    "O6": (RatD((-1, 1)).over(1) / 2,
           {_MU3: _poly(2), _MU_V0: _poly(6), _MU_VH: _poly(-6, 3)}),
    "O7": (RatD((-1, 1)) / 2,
           {_MU3: _poly(2), _MU_V0: _poly(6), _MU_VH: _poly(-2, 1)}),
    "O8": (RatD((0, -1, 1)),
           {_MU3: _poly(1), _MU_V0: _poly(3)}),
}

# observable -> [(monomial, tabulated polynomial, first-principles polynomial)]
TABULATED_ERRATA: dict = {}

CORRECTED: dict = {k: (pre, dict(br)) for k, (pre, br) in TABULATED.items()}


def _register_erratum(oid: str, mono: tuple, correct: RatD) -> None:
    TABULATED_ERRATA.setdefault(oid, []).append((mono, TABULATED[oid][1][mono], correct))
    CORRECTED[oid][1][mono] = correct


_register_erratum("O1", _MU_V2, _poly(0, -9, 3))
_register_erratum("O3", _MU_V0, _poly(0, -12, 6))
_register_erratum("O3", _MU_VH, _poly(0, 12, -15, 3))
_register_erratum("O5", _MU_V0, _poly(-6, 6))
_register_erratum("O5", _MU_VH, _poly(6, -7, 2))


def _table(corrected: bool) -> dict:
    return CORRECTED if corrected else TABULATED


def cubic_expression(oid: str, corrected: bool = False) -> MomentExpression:
    """The closed form as a :class:`MomentExpression`."""
    table = _table(corrected)
    if oid not in table:
        raise ValueError(f"no closed form for {oid!r}; expected one of O1..O8")
    pre, bracket = table[oid]
    return MomentExpression.build({(mono, 1): pre * poly for mono, poly in bracket.items()})


def cubic_expectation_analytic(oid: str, params: ModelParams, d: int, corrected: bool = False) -> float:
    """Evaluate the tabulated cubic closed form (``corrected=True`` applies the errata)."""
    table = _table(corrected)
    if oid not in table:
        raise ValueError(f"no closed form for {oid!r}; expected one of O1..O8")
    pre, bracket = table[oid]
    mu = params.mu_tilde_v0
    vals = {_MU3: mu * mu, _MU_V0: params.inv_v0, _MU_VH: params.inv_vh, _MU_V2: params.inv_v2}
    inner = sum(float(poly(d)) * vals[mono] for mono, poly in bracket.items())
    return math.sqrt(d * (d - 1.0)) * float(pre(d)) * mu * inner
