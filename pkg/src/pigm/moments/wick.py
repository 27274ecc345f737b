"""Numeric Wick engine: pairings, index-coincidence patterns, contractions.

For a product of Gaussian entries ``prod_e M_e`` with common mean, Wick's
theorem gives a sum over partial matchings: matched factors contribute a
covariance, unmatched ones the mean.  For an observable the indices are then
summed; grouping index assignments by which indices coincide turns the sum
into a finite sum over set partitions of the vertices, each weighted by the
falling factorial ``D (D-1) ... (D-b+1)`` for ``b`` blocks.
"""
from __future__ import annotations

import math
import string
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
import opt_einsum as oe

from .params import ModelParams, PatternMoments, covariance_tensor, mean_matrix, pattern_moments


class CostBudgetExceeded(RuntimeError):
    """The requested exact computation is larger than the configured budget."""


def partial_matchings(n: int) -> Iterator[tuple]:
    """Yield ``(pairs, singles)`` for every partial matching of ``range(n)``."""

    def rec(items):
        if not items:
            yield (), ()
            return
        first, rest = items[0], items[1:]
        for pairs, singles in rec(rest):
            yield pairs, (first,) + singles
        for k, other in enumerate(rest):
            remaining = rest[:k] + rest[k + 1:]
            for pairs, singles in rec(remaining):
                yield ((first, other),) + pairs, singles

    yield from rec(tuple(range(n)))


@lru_cache(maxsize=16)
def matchings_list(n: int) -> tuple:
    return tuple(partial_matchings(n))


def wick_term_count(n: int) -> int:
    """Number of partial matchings of ``n`` items (telephone numbers)."""
    return sum(math.factorial(n) // (math.factorial(n - 2 * p) * math.factorial(p) * 2 ** p)
               for p in range(n // 2 + 1))


def set_partitions(n: int) -> Iterator[tuple]:
    """Restricted growth strings of length ``n``: ``rgs[v]`` is the block of vertex ``v``."""
    if n == 0:
        yield ()
        return
    rgs = [0] * n

    def rec(pos, top):
        if pos == n:
            yield tuple(rgs)
            return
        for b in range(top + 2):
            rgs[pos] = b
            yield from rec(pos + 1, max(top, b))

    rgs[0] = 0
    yield from rec(1, 0)


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def falling(d: int, b: int) -> int:
    out = 1
    for k in range(b):
        out *= d - k
    return out


def _wick_sum(edge_blocks: Sequence[tuple], pm: PatternMoments, matchings) -> float:
    total = 0.0
    for pairs, singles in matchings:
        w = pm.mbar ** len(singles)
        if w == 0.0 and singles:
            continue
        for a, b in pairs:
            w *= pm.cov(edge_blocks[a], edge_blocks[b])
        total += w
    return total


def expectation_edges(edges: Sequence[tuple], pm: PatternMoments, d: int,
                      budget: float | None = None) -> float:
    """Full expectation of ``sum prod_{(u,v) in edges} M_uv`` by set-partition enumeration."""
    verts = sorted({v for e in edges for v in e})
    relabel = {v: k for k, v in enumerate(verts)}
    edges = [(relabel[u], relabel[v]) for u, v in edges]
    matchings = matchings_list(len(edges))
    cost = bell(len(verts)) * len(matchings)
    if budget is not None and cost > budget:
        raise CostBudgetExceeded(f"{cost} partition-matching terms exceed budget {budget:g}")
    cache: dict = {}
    total = 0.0
    for rgs in set_partitions(len(verts)):
        nb = max(rgs) + 1
        if nb > d:
            continue
        eb = []
        ok = True
        for u, v in edges:
            bu, bv = rgs[u], rgs[v]
            if bu == bv:
                ok = False
                break
            eb.append((bu, bv) if bu < bv else (bv, bu))
        if not ok:
            continue
        key = tuple(eb)
        w = cache.get(key)
        if w is None:
            w = cache[key] = _wick_sum(eb, pm, matchings)
        total += falling(d, nb) * w
    return total


def expectation(obs, params: ModelParams, d: int) -> float:
    """Full expectation of a catalog observable (degree at most four)."""
    from ..observables import get

    obs = get(obs)
    if obs.degree > 4:
        raise ValueError(f"degree {obs.degree} unsupported")
    if d < 4:
        raise ValueError(f"need D >= 4, got {d}")
    return expectation_edges(obs.edges, pattern_moments(params, d), d)


# ---------------------------------------------------------------------------
# second moments of observables as tensor-network contractions at fixed D

def _doubled(edges: Sequence[tuple]) -> tuple:
    shift = max(v for e in edges for v in e) + 1
    return tuple(edges) + tuple((u + shift, v + shift) for u, v in edges)


DEFAULT_VARIANCE_BUDGET = 1e12


@lru_cache(maxsize=128)
def _variance_networks(edges: tuple, d: int) -> tuple:
    """Compiled contractions for every matching that links the two copies."""
    k = len(edges)
    both = _doubled(edges)
    letters = string.ascii_letters
    out = []
    for pairs, singles in matchings_list(2 * k):
        if not any((a < k) != (b < k) for a, b in pairs):
            continue
        ops = [letters[both[a][0]] + letters[both[a][1]] + letters[both[b][0]] + letters[both[b][1]]
               for a, b in pairs]
        ops += [letters[both[s][0]] + letters[both[s][1]] for s in singles]
        spec = ",".join(ops) + "->"
        shapes = [(d,) * 4] * len(pairs) + [(d, d)] * len(singles)
        _, info = oe.contract_path(spec, *shapes, shapes=True, optimize="dp")
        expr = oe.contract_expression(spec, *shapes, optimize=info.path)
        out.append((expr, len(pairs), len(singles), float(info.opt_cost)))
    return tuple(out)


def variance_cost(obs, d: int) -> float:
    """Estimated floating-point operations of :func:`variance_exact`."""
    from ..observables import get

    return sum(n[3] for n in _variance_networks(get(obs).edges, d))


def variance_exact(obs, params: ModelParams, d: int,
                   budget: float | None = DEFAULT_VARIANCE_BUDGET) -> float:
    """``<O^2> - <O>^2`` as the sum of Wick terms that connect the two copies of ``O``.

    Each term is a contraction of covariance tensors and mean matrices at the
    given ``D``.  Terms pairing factors only within one copy add up to
    ``<O>^2`` and are skipped, so no cancellation occurs.
    """
    from ..observables import get

    obs = get(obs)
    nets = _variance_networks(obs.edges, d)
    if budget is not None:
        cost = sum(n[3] for n in nets)
        if cost > budget:
            raise CostBudgetExceeded(f"{obs.id}: ~{cost:.3g} flops exceed budget {budget:g}")
    kt = covariance_tensor(params, d)
    mean = mean_matrix(params, d)
    total = 0.0
    for expr, n_pairs, n_singles, _ in nets:
        if n_singles and params.mu_tilde_v0 == 0.0:
            continue
        total += float(expr(*([kt] * n_pairs + [mean] * n_singles)))
    return total
