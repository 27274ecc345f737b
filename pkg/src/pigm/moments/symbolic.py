"""Exact expectation values as functions of ``D`` via delta algebra.

Monomials are exponent tuples ``(p, a, b, c)`` standing for
``mu_tilde^p * inv_v0^a * inv_vh^b * inv_v2^c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from .delta import ONE, ZERO, DeltaPolynomial, RatD
from .params import ModelParams
from .wick import matchings_list

MU = (1, 0, 0, 0)
INV_V0 = (0, 1, 0, 0)
INV_VH = (0, 0, 1, 0)
INV_V2 = (0, 0, 0, 1)

_I, _J, _K, _L, _P, _Q = ("i", "j", "k", "l", "p", "q")


def _f(a, b) -> DeltaPolynomial:
    return DeltaPolynomial.f(a, b)


def _scal(r: RatD, mono=(0, 0, 0, 0)) -> dict:
    return {mono: r}


@lru_cache(maxsize=1)
def one_point_template() -> DeltaPolynomial:
    """``<M_ij>`` with the ``(D(D-1))^(-1/2)`` factor stripped: ``mu ((D-1)/D - F(i,j))``."""
    const = DeltaPolynomial.scalar(RatD((-1, 1)).over(1))
    return (const - _f(_I, _J)).scale(_scal(ONE, MU))


@lru_cache(maxsize=1)
def two_point_template() -> DeltaPolynomial:
    """Connected ``<M_ij M_kl>`` with internal indices already summed."""
    fij, fkl = _f(_I, _J), _f(_K, _L)
    v0 = (fij * fkl).scale(ONE.over(0, 1)) \
        - (fij + fkl).scale(ONE.over(1)) \
        + DeltaPolynomial.scalar(RatD((-1, 1)).over(2))
    v0 = v0.scale(ONE.over(1))
    one = DeltaPolynomial.scalar(ONE)
    mask = (one - DeltaPolynomial.delta(_I, _J)) * (one - DeltaPolynomial.delta(_K, _L))
    vh = mask * (_f(_I, _K) + _f(_J, _K) + _f(_I, _L) + _f(_J, _L))
    vh = vh.scale(ONE.over(0, 0, 1) / 2)
    chain = (_f(_I, _P) * _f(_J, _P) * _f(_K, _Q) * _f(_L, _Q) * _f(_P, _Q)).sum_over([_P, _Q])
    v2 = (_f(_I, _K) * _f(_J, _L) + _f(_I, _L) * _f(_J, _K)).scale(Fraction(1, 2)) \
        - chain.scale(RatD.d().over(0, 0, 1)) \
        - (fij * fkl).scale(ONE.over(0, 1))
    return v0.scale(_scal(ONE, INV_V0)) + vh.scale(_scal(ONE, INV_VH)) + v2.scale(_scal(ONE, INV_V2))


def _sqrt_factor(p: int) -> tuple:
    """``(D(D-1))^(-p/2) = r(D) * sqrt(D(D-1))^s`` as ``(s, r)``."""
    s = p % 2
    h = (p + s) // 2
    return s, ONE.over(h, h)


@dataclass(frozen=True)
class MomentExpression:
    """``sum coeff(D) * sqrt(D(D-1))^s * mu^p inv_v0^a inv_vh^b inv_v2^c``.

    ``terms`` maps ``((p, a, b, c), s)`` to an exact :class:`RatD`.
    """

    terms: Mapping

    @classmethod
    def build(cls, terms: Mapping) -> "MomentExpression":
        clean = {k: v for k, v in terms.items() if not v.is_zero()}
        return cls(dict(sorted(clean.items())))

    def __add__(self, other: "MomentExpression") -> "MomentExpression":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, ZERO) + v
        return MomentExpression.build(out)

    def __neg__(self) -> "MomentExpression":
        return MomentExpression.build({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "MomentExpression") -> "MomentExpression":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MomentExpression):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self) -> int:
        return hash(tuple(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, mono: tuple, s: int | None = None) -> RatD:
        """Coefficient of a monomial; ``s`` defaults to whichever prefactor is present."""
        hits = [(k, v) for k, v in self.terms.items() if k[0] == tuple(mono) and (s is None or k[1] == s)]
        if len(hits) > 1:
            raise ValueError("monomial carries both prefactors; pass s explicitly")
        return hits[0][1] if hits else ZERO

    def coefficient_at(self, mono: tuple, d: int) -> float:
        """Numeric coefficient of a monomial at concrete ``D`` (prefactor included)."""
        root = math.sqrt(d * (d - 1.0))
        return sum(float(v(d)) * root ** s for (m, s), v in self.terms.items() if m == tuple(mono))

    def evaluate(self, params: ModelParams, d: int) -> float:
        vals = (params.mu_tilde_v0, params.inv_v0, params.inv_vh, params.inv_v2)
        root = math.sqrt(d * (d - 1.0))
        total = 0.0
        for (mono, s), r in self.terms.items():
            w = float(r(d)) * root ** s
            for e, v in zip(mono, vals):
                if e:
                    w *= v ** e
            total += w
        return total

    def to_sympy(self):
        import sympy

        dsym = sympy.Symbol("D")
        mu, a, b, c = sympy.symbols("mu_tilde inv_tau_v0 inv_tau_vh inv_tau_v2")
        expr = 0
        for (mono, s), r in self.terms.items():
            expr += r.to_sympy(dsym) * sympy.sqrt(dsym * (dsym - 1)) ** s \
                * mu ** mono[0] * a ** mono[1] * b ** mono[2] * c ** mono[3]
        return expr

    def __repr__(self) -> str:
        return f"MomentExpression({self.to_sympy()})"


def expression_from_coefficients(coeffs: Mapping) -> MomentExpression:
    """Attach the ``(D(D-1))^(-p/2)`` one-point normalisation to raw coefficients."""
    out: dict = {}
    for mono, r in coeffs.items():
        mono = tuple(mono) + (0,) * (4 - len(mono))
        s, scale = _sqrt_factor(mono[0])
        key = (mono, s)
        out[key] = out.get(key, ZERO) + r * scale
    return MomentExpression.build(out)


def _symbolic_edges(edges, connected: bool = False) -> MomentExpression:
    one, two = one_point_template(), two_point_template()
    verts = sorted({v for e in edges for v in e})
    total = DeltaPolynomial()
    for pairs, singles in matchings_list(len(edges)):
        if connected and singles:
            continue
        term = DeltaPolynomial.scalar(ONE)
        for a, b in pairs:
            (i, j), (k, l) = edges[a], edges[b]
            term = term * two.substitute({_I: i, _J: j, _K: k, _L: l})
        for s in singles:
            i, j = edges[s]
            term = term * one.substitute({_I: i, _J: j})
        total = total + term.sum_over(verts)
    return expression_from_coefficients(total.scalar_part())


@lru_cache(maxsize=64)
def symbolic_expectation(obs, connected: bool = False) -> MomentExpression:
    """Exact expectation of a catalog observable as a function of ``D``.

    ``connected=True`` (degree two only) drops the product of means, giving
    ``sum (<M_e M_f> - <M_e><M_f>)``.
    """
    from ..observables import get

    obs = get(obs)
    if obs.degree > 4:
        raise ValueError(f"degree {obs.degree} unsupported")
    if connected and obs.degree != 2:
        raise ValueError("connected part is defined here for quadratic observables only")
    return _symbolic_edges(tuple(obs.edges), connected)
