"""Symmetric-group machinery on the space of symmetric zero-diagonal matrices.

The physical subspace splits into three irreducible pieces under simultaneous
row/column permutations: the trivial line ``V0`` (dimension 1), the hook
``VH`` (dimension ``D-1``) and ``V2`` (dimension ``D(D-3)/2``).  Projectors
are applied through closed forms built from row sums and the total sum, so a
single application costs ``O(D^2)`` and nothing of size ``D^2 x D^2`` is ever
formed outside the explicit test helper :func:`projector_matrix`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ensemble import CorrelationMatrix, EnsembleError, validate_matrix

DENSE_LIMIT = 32


class Irrep(str, enum.Enum):
    V0 = "V0"
    VH = "VH"
    V2 = "V2"
    PHYS_TOTAL = "PHYS_TOTAL"


def irrep_dim(irrep: Irrep | str, d: int) -> int:
    irrep = Irrep(irrep)
    return {
        Irrep.V0: 1,
        Irrep.VH: d - 1,
        Irrep.V2: d * (d - 3) // 2,
        Irrep.PHYS_TOTAL: d * (d - 1) // 2,
    }[irrep]


def hook_basis(d: int) -> np.ndarray:
    """Rows ``a = 1..D-1`` of the orthonormal hook basis in natural coordinates.

    Row ``a`` is ``(e_1 + ... + e_a - a e_{a+1}) / sqrt(a(a+1))``.
    """
    rows = np.zeros((d - 1, d))
    for a in range(1, d):
        rows[a - 1, :a] = 1.0
        rows[a - 1, a] = -float(a)
        rows[a - 1] /= np.sqrt(a * (a + 1.0))
    return rows


@dataclass(frozen=True, eq=False)
class ClebschSet:
    dim: int
    c0: np.ndarray
    ca: np.ndarray
    phys_v0: np.ndarray
    phys_vh: np.ndarray


@lru_cache(maxsize=64)
def build_clebschs(d: int) -> ClebschSet:
    """Natural-basis and physical Clebsch coefficients for dimension ``d``.

    The physical coefficients are assembled from the natural-basis ones:

    * ``phys_v0[i, j] = sqrt((D-1)/D) c0_i c0_j - F(i, j) / sqrt(D(D-1))``
    * ``phys_vh[a, i, j] = sqrt((D-2)/(2 D^2)) (C_ai + C_aj)
      - sqrt(2/(D-2)) sum_{b,c,k} C_bi C_cj C_ak C_bk C_ck``

    with ``F(i, j) = sum_a C_ai C_aj``.  Both vanish on the diagonal.
    """
    if d < 4:
        raise ValueError(f"need D >= 4 for a non-empty V2 block, got {d}")
    c0 = np.full(d, 1.0 / np.sqrt(d))
    ca = hook_basis(d)
    f = ca.T @ ca
    phys_v0 = np.sqrt((d - 1.0) / d) * np.outer(c0, c0) - f / np.sqrt(d * (d - 1.0))
    # the b, c sums factor into F(i, k) F(j, k)
    triple = np.einsum("ik,jk,ak->aij", f, f, ca)
    phys_vh = np.sqrt((d - 2.0) / (2.0 * d * d)) * (ca[:, :, None] + ca[:, None, :]) \
        - np.sqrt(2.0 / (d - 2.0)) * triple
    for arr in (c0, ca, phys_v0, phys_vh):
        arr.setflags(write=False)
    return ClebschSet(d, c0, ca, phys_v0, phys_vh)


def f_kernel(d: int) -> np.ndarray:
    """``F(i, j) = delta_ij - 1/D``, the hook-space projector in natural coordinates."""
    if d < 2:
        raise ValueError(f"need D >= 2, got {d}")
    return np.eye(d) - 1.0 / d


def _as_array(m) -> np.ndarray:
    return m.entries if isinstance(m, CorrelationMatrix) else np.asarray(m, dtype=float)


def _sums(x: np.ndarray):
    r = x.sum(axis=-1)
    t = r.sum(axis=-1)
    return r, t


def _apply(x: np.ndarray, irrep: Irrep) -> np.ndarray:
    """Projector action on a physical matrix or a stack ``(..., D, D)`` of them."""
    d = x.shape[-1]
    if irrep is Irrep.PHYS_TOTAL:
        out = (x + np.swapaxes(x, -1, -2)) / 2.0
        idx = np.arange(d)
        out[..., idx, idx] = 0.0
        return out
    x = _apply(x, Irrep.PHYS_TOTAL)
    off = 1.0 - np.eye(d)
    r, t = _sums(x)
    t = np.asarray(t)[..., None, None]
    v0 = off * t / (d * (d - 1.0))
    if irrep is Irrep.V0:
        return v0
    vh = off * (r[..., :, None] + r[..., None, :] - 2.0 * t / d) / (d - 2.0)
    if irrep is Irrep.VH:
        return vh
    return x - v0 - vh


def project_array(x, irrep: Irrep | str) -> np.ndarray:
    """Array-level projector; accepts one matrix or a stack of matrices."""
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise EnsembleError(f"expected square matrices, got shape {x.shape}")
    if x.shape[-1] < 4:
        raise ValueError("projectors need D >= 4")
    return _apply(x.copy(), Irrep(irrep))


def project(m: CorrelationMatrix, irrep: Irrep | str) -> CorrelationMatrix:
    """Irreducible component of ``m``; ``PHYS_TOTAL`` returns ``m`` itself."""
    if not isinstance(m, CorrelationMatrix):
        m = validate_matrix(m)
    out = project_array(m.entries, irrep)
    out.setflags(write=False)
    return CorrelationMatrix(out, m.label)


@dataclass(frozen=True)
class Components:
    s_v0: float
    s_vh: np.ndarray
    m_v2: CorrelationMatrix


def decompose(m: CorrelationMatrix) -> Components:
    """Coordinates of ``m`` along V0 and VH, and its V2 part as a matrix."""
    if not isinstance(m, CorrelationMatrix):
        m = validate_matrix(m)
    cl = build_clebschs(m.dim)
    x = m.entries
    s_v0 = float(np.sum(cl.phys_v0 * x))
    s_vh = np.einsum("aij,ij->a", cl.phys_vh, x)
    return Components(s_v0, s_vh, project(m, Irrep.V2))


def decompose_stack(x: np.ndarray):
    """Vectorised :func:`decompose` over ``(N, D, D)``; returns ``(s_v0, s_vh, m_v2)``."""
    d = x.shape[-1]
    cl = build_clebschs(d)
    s_v0 = np.einsum("ij,nij->n", cl.phys_v0, x)
    s_vh = np.einsum("aij,nij->na", cl.phys_vh, x)
    return s_v0, s_vh, project_array(x, Irrep.V2)


def reconstruct(s_v0: float, s_vh, m_v2, label: str = "") -> CorrelationMatrix:
    """Inverse of :func:`decompose`."""
    v2 = _as_array(m_v2)
    d = v2.shape[0]
    s_vh = np.asarray(s_vh, dtype=float)
    if v2.shape != (d, d) or s_vh.shape != (d - 1,):
        raise EnsembleError(f"component shapes do not match: s_vh {s_vh.shape}, m_v2 {v2.shape}")
    cl = build_clebschs(d)
    out = s_v0 * cl.phys_v0 + np.einsum("a,aij->ij", s_vh, cl.phys_vh) + v2
    return validate_matrix(out, label or getattr(m_v2, "label", ""))


def projector_matrix(d: int, irrep: Irrep | str) -> np.ndarray:
    """Dense ``D^2 x D^2`` kernel ``P[(i,j),(k,l)]`` from the delta expressions.

    Intended for verification only; refused above ``D = 32``.
    """
    if d > DENSE_LIMIT:
        raise ValueError(f"dense projector refused for D > {DENSE_LIMIT}")
    irrep = Irrep(irrep)
    e = np.eye(d)
    one = np.ones((d, d))
    off = 1.0 - e
    mask = np.einsum("ij,kl->ijkl", off, off)
    phys = 0.5 * (np.einsum("ik,jl->ijkl", e, e) + np.einsum("il,jk->ijkl", e, e)) \
        - np.einsum("ij,jk,kl->ijkl", e, e, e)
    v0 = mask / (d * (d - 1.0))
    vh = mask * (np.einsum("ik,jl->ijkl", e, one) + np.einsum("il,jk->ijkl", e, one)
                 + np.einsum("jk,il->ijkl", e, one) + np.einsum("jl,ik->ijkl", e, one)
                 - 4.0 / d) / (2.0 * (d - 2.0))
    k = {Irrep.PHYS_TOTAL: phys, Irrep.V0: v0, Irrep.VH: vh, Irrep.V2: phys - v0 - vh}[irrep]
    return k.reshape(d * d, d * d)


def physical_basis(d: int) -> np.ndarray:
    """Orthonormal basis ``(e_i e_j^T + e_j e_i^T)/sqrt(2)``, ``i < j``, as an ``(n, D, D)`` stack."""
    iu = np.triu_indices(d, 1)
    n = len(iu[0])
    out = np.zeros((n, d, d))
    out[np.arange(n), iu[0], iu[1]] = 1.0 / np.sqrt(2.0)
    out[np.arange(n), iu[1], iu[0]] = 1.0 / np.sqrt(2.0)
    return out


def projector_trace(d: int, irrep: Irrep | str) -> float:
    """Trace computed by applying the projector to every physical basis element."""
    b = physical_basis(d)
    pb = project_array(b, irrep)
    return float(np.sum(b * pb))


@dataclass(frozen=True, eq=False)
class TensorStates:
    """Orthonormal states of ``V_D (x) V_D`` as ``D x D`` arrays (``[i, j]`` is the ``e_i (x) e_j`` coefficient).

    ``v0_sum`` and ``v0_hook`` span the two trivial copies, ``vh_sym`` and
    ``vh_cubic`` (indexed by the hook label first) two of the hook copies, and
    ``diag_v0`` / ``diag_vh`` the diagonal-only states.
    """

    v0_sum: np.ndarray
    v0_hook: np.ndarray
    vh_sym: np.ndarray
    vh_cubic: np.ndarray
    diag_v0: np.ndarray
    diag_vh: np.ndarray


def tensor_states(d: int) -> TensorStates:
    cl = build_clebschs(d)
    ca = cl.ca
    f = ca.T @ ca
    ones = np.ones(d)
    hook_outer = np.einsum("ai,aj->aij", ca, ca)
    v0_sum = np.full((d, d), 1.0 / d)
    v0_hook = hook_outer.sum(axis=0) / np.sqrt(d - 1.0)
    vh_sym = (np.einsum("i,aj->aij", ones, ca) + np.einsum("ai,j->aij", ca, ones)) / np.sqrt(2.0 * d)
    vh_cubic = np.sqrt(d / (d - 2.0)) * np.einsum("ak,ik,jk->aij", ca, f, f)
    diag_v0 = np.eye(d) / np.sqrt(d)
    diag_vh = np.einsum("ai,ij->aij", ca, np.eye(d))
    return TensorStates(v0_sum, v0_hook, vh_sym, vh_cubic, diag_v0, diag_vh)
