"""The 35 permutation-invariant polynomials of degree at most four.

Each invariant is a sum over unrestricted indices of a product of matrix
entries; it is named by a loopless multigraph whose vertices are the summed
indices and whose edges are the factors.  Every entry in :func:`catalog`
carries its edge list (the definition) and a closed-form evaluator built from
row sums, Hadamard powers and matrix products, costing at most ``O(D^3)``.
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .ensemble import CorrelationMatrix, Ensemble

BRUTEFORCE_MAX_DIM = 8


class UnknownObservable(KeyError):
    pass


@dataclass(frozen=True)
class GraphObservable:
    id: str
    edges: tuple

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        for u, v in edges:
            if u == v:
                raise ValueError(f"{self.id}: loop at vertex {u}")
        if not 1 <= len(edges) <= 4:
            raise ValueError(f"{self.id}: degree must be 1..4")
        object.__setattr__(self, "edges", edges)

    @property
    def degree(self) -> int:
        return len(self.edges)

    @property
    def vertex_count(self) -> int:
        return len({v for e in self.edges for v in e})


@dataclass(frozen=True)
class ObservableVector:
    label: str
    selection: tuple
    values: np.ndarray


# (id, edges, evaluator on primitives)
_P = (0, 1)
_DEFS: list = [
    ("LIN", [_P], lambda p: p.t),
    ("Q1", [_P, _P], lambda p: p.h2.sum((-1, -2))),
    ("Q2", [(0, 1), (1, 2)], lambda p: (p.r ** 2).sum(-1)),
    ("Q3", [(0, 1), (2, 3)], lambda p: p.t ** 2),
    ("O1", [_P, _P, _P], lambda p: p.h3.sum((-1, -2))),
    ("O2", [_P, _P, (1, 2)], lambda p: (p.s2 * p.r).sum(-1)),
    ("O3", [(0, 1), (1, 2), (2, 0)], lambda p: p.tr3),
    ("O4", [_P, _P, (2, 3)], lambda p: p.q1 * p.t),
    ("O5", [(0, 1), (1, 2), (2, 3)], lambda p: p.rmr),
    ("O6", [(0, 1), (0, 2), (0, 3)], lambda p: (p.r ** 3).sum(-1)),
    ("O7", [(0, 1), (1, 2), (3, 4)], lambda p: p.q2 * p.t),
    ("O8", [(0, 1), (2, 3), (4, 5)], lambda p: p.t ** 3),
    ("O9", [_P] * 4, lambda p: (p.h2 * p.h2).sum((-1, -2))),
    ("O10", [_P, _P, (1, 2), (1, 2)], lambda p: (p.s2 ** 2).sum(-1)),
    ("O11", [(0, 1), (1, 2), (1, 2), (1, 2)], lambda p: (p.r * p.s3).sum(-1)),
    ("O12", [(0, 1), (0, 2), (1, 2), (1, 2)], lambda p: (p.h2 * p.m2).sum((-1, -2))),
    ("O13", [(0, 1), (2, 1), (3, 1), (3, 1)], lambda p: (p.r ** 2 * p.s2).sum(-1)),
    ("O14", [(0, 1), (2, 3), (2, 3), (2, 3)], lambda p: p.t * p.h3.sum((-1, -2))),
    ("O15", [(0, 1), (1, 2), (1, 2), (2, 3)], lambda p: _quad(p.h2, p.r, p.r)),
    ("O16", [(0, 1), (1, 2), (2, 3), (2, 3)], lambda p: _quad(p.m, p.r, p.s2)),
    ("O17", [(0, 1), (1, 2), (0, 2), (2, 3)], lambda p: (p.diag3 * p.r).sum(-1)),
    ("O18", [_P, _P, (2, 3), (2, 3)], lambda p: p.q1 ** 2),
    ("O19", [(0, 1), (1, 2), (2, 3), (3, 0)], lambda p: (p.m2 * p.m2).sum((-1, -2))),
    ("O20", [(0, 2), (1, 2), (3, 2), (4, 2)], lambda p: (p.r ** 4).sum(-1)),
    ("O21", [(0, 3), (1, 2), (3, 2), (4, 2)], lambda p: _quad(p.m, p.r ** 2, p.r)),
    ("O22", [(0, 1), (2, 3), (3, 4), (4, 2)], lambda p: p.t * p.tr3),
    ("O23", [_P, _P, (2, 3), (3, 4)], lambda p: p.q1 * p.q2),
    ("O24", [(0, 1), (2, 3), (3, 4), (3, 4)], lambda p: p.t * (p.s2 * p.r).sum(-1)),
    ("O25", [(0, 1), (1, 2), (2, 3), (3, 4)], lambda p: (p.mr ** 2).sum(-1)),
    ("O26", [(0, 1), (2, 3), (2, 4), (2, 5)], lambda p: p.t * (p.r ** 3).sum(-1)),
    ("O27", [(0, 1), (1, 2), (3, 4), (3, 5)], lambda p: p.q2 ** 2),
    ("O28", [_P, _P, (2, 3), (4, 5)], lambda p: p.q1 * p.t ** 2),
    ("O29", [(0, 1), (2, 3), (3, 4), (4, 5)], lambda p: p.t * p.rmr),
    ("O30", [(0, 1), (1, 2), (3, 4), (5, 6)], lambda p: p.q2 * p.t ** 2),
    ("O31", [(0, 1), (2, 3), (4, 5), (6, 7)], lambda p: p.t ** 4),
]

ANOMALY12 = ("O3", "O5", "O9", "O10", "O12", "O16", "O17", "O19", "O21", "O22", "O25", "O29")

PRESETS = {
    "all": tuple(d[0] for d in _DEFS),
    "cubic_quartic": tuple(d[0] for d in _DEFS if d[0].startswith("O")),
    "cubic": tuple(d[0] for d in _DEFS if len(d[1]) == 3),
    "quartic": tuple(d[0] for d in _DEFS if len(d[1]) == 4),
    "linear_quadratic": ("LIN", "Q1", "Q2", "Q3"),
    "anomaly12": ANOMALY12,
}


def _quad(a: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", u, a, v)


class _Primitives:
    """Lazily computed building blocks shared by the closed forms."""

    def __init__(self, x: np.ndarray):
        self.m = x

    def __getattr__(self, name):
        fn = _PRIMS.get(name)
        if fn is None:
            raise AttributeError(name)
        val = fn(self)
        setattr(self, name, val)
        return val


_PRIMS: dict = {
    "r": lambda p: p.m.sum(-1),
    "t": lambda p: p.r.sum(-1),
    "h2": lambda p: p.m * p.m,
    "h3": lambda p: p.h2 * p.m,
    "s2": lambda p: p.h2.sum(-1),
    "s3": lambda p: p.h3.sum(-1),
    "m2": lambda p: p.m @ p.m,
    "mr": lambda p: np.einsum("...ij,...j->...i", p.m, p.r),
    "rmr": lambda p: (p.r * p.mr).sum(-1),
    "diag3": lambda p: np.einsum("...ij,...ji->...i", p.m2, p.m),
    "tr3": lambda p: p.diag3.sum(-1),
    "q1": lambda p: p.h2.sum((-1, -2)),
    "q2": lambda p: (p.r ** 2).sum(-1),
}


@lru_cache(maxsize=1)
def _catalog_index() -> dict:
    return {oid: (GraphObservable(oid, tuple(edges)), fn) for oid, edges, fn in _DEFS}


def catalog() -> list:
    """All 35 observables in catalog order (LIN, Q1..Q3, O1..O31)."""
    idx = _catalog_index()
    return [idx[d[0]][0] for d in _DEFS]


def get(oid: str | GraphObservable) -> GraphObservable:
    if isinstance(oid, GraphObservable):
        return oid
    try:
        return _catalog_index()[oid][0]
    except KeyError:
        raise UnknownObservable(oid) from None


def resolve_selection(selection: str | Iterable[str]) -> tuple:
    """Expand a preset name or validate an explicit list of ids."""
    if isinstance(selection, str):
        if selection in PRESETS:
            return PRESETS[selection]
        selection = [s for s in selection.split(",") if s]
    ids = tuple(get(s).id for s in selection)
    return ids


def _matrix(m) -> np.ndarray:
    return m.entries if isinstance(m, CorrelationMatrix) else np.asarray(m, dtype=float)


def evaluate_stack(x, selection: Sequence[str]) -> np.ndarray:
    """Closed-form values for a stack ``(..., D, D)``; returns ``(..., len(selection))``."""
    x = np.asarray(x, dtype=float)
    prims = _Primitives(x)
    idx = _catalog_index()
    cols = []
    for oid in selection:
        if oid not in idx:
            raise UnknownObservable(oid)
        cols.append(np.asarray(idx[oid][1](prims), dtype=float))
    if not cols:
        return np.zeros(x.shape[:-2] + (0,))
    return np.stack(cols, axis=-1)


def evaluate(m, obs: str | GraphObservable) -> float:
    """Value of one observable on one matrix."""
    oid = get(obs).id
    return float(evaluate_stack(_matrix(m), [oid])[..., 0])


def _einsum_spec(obs: GraphObservable, batch: bool) -> str:
    letters = string.ascii_lowercase
    terms = [letters[u] + letters[v] for u, v in obs.edges]
    if batch:
        return ",".join("z" + t for t in terms) + "->z"
    return ",".join(terms) + "->"


def evaluate_bruteforce(m, obs: str | GraphObservable) -> float | np.ndarray:
    """Literal nested sum over every index tuple (no contraction reordering).

    Accepts one matrix or a stack; refuses ``D > 8`` for graphs with seven or
    more vertices.
    """
    obs = get(obs)
    x = _matrix(m)
    d = x.shape[-1]
    if obs.vertex_count >= 7 and d > BRUTEFORCE_MAX_DIM:
        raise ValueError(f"brute force of {obs.id} refused for D={d} > {BRUTEFORCE_MAX_DIM}")
    batch = x.ndim == 3
    spec = _einsum_spec(obs, batch)
    out = np.einsum(spec, *([x] * obs.degree), optimize=False)
    return out if batch else float(out)


def observable_vector(m, selection: str | Iterable[str]) -> ObservableVector:
    ids = resolve_selection(selection)
    vals = evaluate_stack(_matrix(m), ids) if ids else np.zeros(0)
    return ObservableVector(getattr(m, "label", ""), ids, np.asarray(vals, dtype=float))


def ensemble_values(ens: Ensemble, selection: str | Iterable[str]) -> tuple:
    """``(ids, values)`` with ``values`` of shape ``(N_D, len(ids))``."""
    ids = resolve_selection(selection)
    return ids, evaluate_stack(ens.data, ids)
