"""Validated containers for symmetric zero-diagonal matrices and their ensembles.

Indices are 0-based throughout. Ensemble files come in two flavours:

CSV
    Optional ``#`` comment lines (``# dim: D`` declares the dimension, other
    ``# key: value`` lines are metadata), then the header ``label,i,j,value``
    followed by one row per upper-triangle entry (``i < j``).

JSON
    ``{"dim": D, "days": [{"label": ..., "upper": [...]}, ...]}`` where
    ``upper`` lists the ``D(D-1)/2`` upper-triangle entries in row-major order.
    An optional ``"meta"`` object is carried through untouched.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

SYMMETRY_TOL = 1e-12


class EnsembleError(ValueError):
    """Raised for malformed matrices, ensembles or ensemble files."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """A real symmetric matrix with exactly zero diagonal."""

    entries: np.ndarray
    label: str = ""

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def upper(self) -> np.ndarray:
        iu = np.triu_indices(self.dim, 1)
        return self.entries[iu]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorrelationMatrix):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.label, self.entries.tobytes()))


def validate_matrix(raw, label: str = "") -> CorrelationMatrix:
    """Check and normalise a raw square array.

    Entries are symmetrised exactly as ``(M + M.T) / 2`` once the asymmetry
    is within ``SYMMETRY_TOL`` and the diagonal is set to exactly zero.
    """
    m = np.array(raw, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise EnsembleError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise EnsembleError(f"non-finite entries in matrix {label!r}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise EnsembleError(f"matrix {label!r} is asymmetric (max |M - M^T| = {asym:.3g})")
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 0.0)
    return CorrelationMatrix(_frozen(m), str(label))


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0, ..., D-1}``; ``mapping[i]`` is the image of ``i``."""

    mapping: tuple

    def __post_init__(self):
        mp = tuple(int(x) for x in self.mapping)
        if sorted(mp) != list(range(len(mp))):
            raise EnsembleError(f"not a permutation: {mp}")
        object.__setattr__(self, "mapping", mp)

    @property
    def dim(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, dim: int) -> "Permutation":
        return cls(tuple(range(dim)))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(rng.permutation(dim)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.dim
        for i, s in enumerate(self.mapping):
            inv[s] = i
        return Permutation(tuple(inv))


def permute(m: CorrelationMatrix, sigma: Permutation) -> CorrelationMatrix:
    """Relabel indices so that ``result[sigma(i), sigma(j)] == m[i, j]``."""
    if sigma.dim != m.dim:
        raise EnsembleError(f"permutation of size {sigma.dim} cannot act on dim {m.dim}")
    inv = np.array(sigma.inverse().mapping, dtype=int)
    out = m.entries[np.ix_(inv, inv)].copy()
    return CorrelationMatrix(_frozen(out), m.label)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """An ordered collection of same-dimension matrices with unique labels.

    ``data`` is the stacked ``(N, D, D)`` array; members are materialised
    lazily as :class:`CorrelationMatrix` views.
    """

    dim: int
    data: np.ndarray
    labels: tuple
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.data.shape[1:] != (self.dim, self.dim) or self.data.shape[0] != len(self.labels):
            raise EnsembleError("ensemble data shape does not match dim/labels")
        if len(set(self.labels)) != len(self.labels):
            raise EnsembleError("ensemble labels must be unique")
        if self.data.flags.writeable:
            _frozen(self.data)

    @classmethod
    def from_matrices(cls, matrices: Sequence[CorrelationMatrix], dim: int | None = None,
                      meta: Mapping | None = None) -> "Ensemble":
        matrices = list(matrices)
        if dim is None:
            if not matrices:
                raise EnsembleError("dimension required for an empty ensemble")
            dim = matrices[0].dim
        for m in matrices:
            if m.dim != dim:
                raise EnsembleError(f"member {m.label!r} has dim {m.dim}, expected {dim}")
        data = np.array([m.entries for m in matrices], dtype=float).reshape(len(matrices), dim, dim)
        return cls(dim, data, tuple(m.label for m in matrices), dict(meta or {}))

    @classmethod
    def from_stack(cls, data, labels: Iterable[str] | None = None, validate: bool = True,
                   meta: Mapping | None = None) -> "Ensemble":
        """Build from an ``(N, D, D)`` array, validating each member."""
        arr = np.array(data, dtype=float)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise EnsembleError(f"expected an (N, D, D) stack, got {arr.shape}")
        n, d = arr.shape[0], arr.shape[1]
        labels = tuple(str(x) for x in labels) if labels is not None else tuple(f"m{k:06d}" for k in range(n))
        if len(labels) != n:
            raise EnsembleError("label count does not match stack size")
        if validate:
            if not np.all(np.isfinite(arr)):
                raise EnsembleError("non-finite entries in stack")
            asym = np.max(np.abs(arr - arr.transpose(0, 2, 1))) if arr.size else 0.0
            if asym > SYMMETRY_TOL:
                raise EnsembleError(f"stack contains asymmetric matrices (max {asym:.3g})")
            arr = (arr + arr.transpose(0, 2, 1)) / 2.0
            idx = np.arange(d)
            arr[:, idx, idx] = 0.0
        return cls(d, arr, labels, dict(meta or {}))

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, k: int) -> CorrelationMatrix:
        return CorrelationMatrix(self.data[k], self.labels[k])

    def __iter__(self) -> Iterator[CorrelationMatrix]:
        for k in range(self.size):
            yield self[k]

    @property
    def matrices(self) -> list:
        return list(self)

    def subset(self, index) -> "Ensemble":
        idx = np.asarray(index, dtype=int)
        return Ensemble(self.dim, self.data[idx].copy(), tuple(self.labels[k] for k in idx), dict(self.meta))

    def upper(self) -> np.ndarray:
        """``(N, D(D-1)/2)`` array of upper-triangle entries."""
        iu = np.triu_indices(self.dim, 1)
        return self.data[:, iu[0], iu[1]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ensemble):
            return NotImplemented
        return (self.dim == other.dim and self.labels == other.labels
                and np.array_equal(self.data, other.data))


def concat(ensembles: Sequence[Ensemble]) -> Ensemble:
    dims = {e.dim for e in ensembles}
    if len(dims) != 1:
        raise EnsembleError(f"cannot concatenate ensembles of dims {sorted(dims)}")
    data = np.concatenate([e.data for e in ensembles], axis=0)
    labels = tuple(lab for e in ensembles for lab in e.labels)
    return Ensemble(dims.pop(), data, labels)


def _upper_to_stack(upper: np.ndarray, dim: int) -> np.ndarray:
    n = upper.shape[0]
    out = np.zeros((n, dim, dim))
    iu = np.triu_indices(dim, 1)
    out[:, iu[0], iu[1]] = upper
    out[:, iu[1], iu[0]] = upper
    return out


def _dim_from_upper(length: int) -> int:
    d = int(round((1 + math.sqrt(1 + 8 * length)) / 2))
    if d * (d - 1) // 2 != length:
        raise EnsembleError(f"upper-triangle length {length} is not D(D-1)/2 for any D")
    return d


def write_ensemble(ens: Ensemble, path, meta: Mapping | None = None) -> None:
    """Write an ensemble; the format follows the file suffix (``.json`` or CSV)."""
    path = Path(path)
    meta = dict(ens.meta) | dict(meta or {})
    if path.suffix.lower() == ".json":
        days = [{"label": lab, "upper": [float(x) for x in row]}
                for lab, row in zip(ens.labels, ens.upper())]
        doc = {"dim": ens.dim, "meta": meta, "days": days}
        path.write_text(json.dumps(doc, indent=1) + "\n")
        return
    iu = np.triu_indices(ens.dim, 1)
    with path.open("w", newline="") as fh:
        fh.write(f"# dim: {ens.dim}\n")
        for k in sorted(meta):
            fh.write(f"# {k}: {json.dumps(meta[k], sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "i", "j", "value"])
        for lab, m in zip(ens.labels, ens.data):
            for i, j in zip(*iu):
                w.writerow([lab, int(i), int(j), repr(float(m[i, j]))])


def read_ensemble(path) -> Ensemble:
    """Read an ensemble written by :func:`write_ensemble` (or by hand)."""
    path = Path(path)
    if not path.exists():
        raise EnsembleError(f"no such file: {path}")
    if path.suffix.lower() == ".json":
        return _read_json(path)
    return _read_csv(path)


def _read_json(path: Path) -> Ensemble:
    try:
        doc = json.loads(path.read_text())
        dim = int(doc["dim"])
        days = doc.get("days", [])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise EnsembleError(f"malformed ensemble JSON {path}: {exc}") from exc
    n_up = dim * (dim - 1) // 2
    labels, rows = [], []
    for day in days:
        up = day.get("upper")
        if up is None or len(up) != n_up:
            raise EnsembleError(f"day {day.get('label')!r}: upper length must be {n_up}")
        labels.append(str(day["label"]))
        rows.append([float(x) for x in up])
    upper = np.array(rows, dtype=float).reshape(len(rows), n_up)
    return Ensemble.from_stack(_upper_to_stack(upper, dim), labels, meta=doc.get("meta", {}))


def _read_csv(path: Path) -> Ensemble:
    declared = None
    meta = {}
    entries: dict = {}
    order: list = []
    with path.open(newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                key, val = key.strip(), val.strip()
                if key == "dim":
                    declared = int(val)
                elif key:
                    try:
                        meta[key] = json.loads(val)
                    except json.JSONDecodeError:
                        meta[key] = val
                continue
            if line.strip():
                lines.append(line)
    if not lines:
        if declared is None:
            raise EnsembleError(f"{path}: empty file without a '# dim:' declaration")
        return Ensemble(declared, np.zeros((0, declared, declared)), (), meta)
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if header != ["label", "i", "j", "value"]:
        raise EnsembleError(f"{path}: header must be label,i,j,value, got {header}")
    max_idx = -1
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise EnsembleError(f"{path}:{lineno}: expected 4 fields")
        lab = row[0]
        try:
            i, j, v = int(row[1]), int(row[2]), float(row[3])
        except ValueError as exc:
            raise EnsembleError(f"{path}:{lineno}: {exc}") from exc
        if not 0 <= i < j:
            raise EnsembleError(f"{path}:{lineno}: need 0 <= i < j, got ({i}, {j})")
        if lab not in entries:
            entries[lab] = {}
            order.append(lab)
        if (i, j) in entries[lab]:
            raise EnsembleError(f"{path}:{lineno}: duplicate entry ({i}, {j}) for {lab!r}")
        entries[lab][(i, j)] = v
        max_idx = max(max_idx, j)
    dim = declared if declared is not None else max_idx + 1
    n_up = dim * (dim - 1) // 2
    iu = list(zip(*np.triu_indices(dim, 1)))
    upper = np.zeros((len(order), n_up))
    for k, lab in enumerate(order):
        got = entries[lab]
        if len(got) != n_up or any(key not in got for key in iu):
            raise EnsembleError(f"{path}: day {lab!r} does not have the {n_up} entries of a dim-{dim} matrix")
        upper[k] = [got[key] for key in iu]
    return Ensemble.from_stack(_upper_to_stack(upper, dim), order, meta=meta)
