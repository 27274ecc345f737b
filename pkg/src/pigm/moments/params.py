"""Couplings of the permutation-invariant Gaussian model and derived moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rep_theory import f_kernel


@dataclass(frozen=True)
class ModelParams:
    """Linear coupling ``mu_tilde_v0`` and the three quadratic couplings.

    ``tau_*`` are the precisions of the V0, VH and V2 blocks; the moments
    depend on their inverses, exposed as ``inv_v0``, ``inv_vh``, ``inv_v2``.
    ``math.inf`` is accepted and means a frozen (zero-variance) block.
    """

    mu_tilde_v0: float
    tau_v0: float
    tau_vh: float
    tau_v2: float

    def __post_init__(self):
        for name in ("tau_v0", "tau_vh", "tau_v2"):
            v = float(getattr(self, name))
            if not v > 0 or math.isnan(v):
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "mu_tilde_v0", float(self.mu_tilde_v0))
        if not math.isfinite(self.mu_tilde_v0):
            raise ValueError("mu_tilde_v0 must be finite")

    @classmethod
    def from_inverse(cls, mu_tilde: float, inv_v0: float, inv_vh: float, inv_v2: float) -> "ModelParams":
        def tau(x):
            return math.inf if x == 0 else 1.0 / x
        return cls(mu_tilde, tau(inv_v0), tau(inv_vh), tau(inv_v2))

    @property
    def inv_v0(self) -> float:
        return 1.0 / self.tau_v0

    @property
    def inv_vh(self) -> float:
        return 1.0 / self.tau_vh

    @property
    def inv_v2(self) -> float:
        return 1.0 / self.tau_v2

    @property
    def inverse(self) -> tuple:
        return (self.inv_v0, self.inv_vh, self.inv_v2)

    @property
    def mu_v0(self) -> float:
        """Linear coupling in the action, ``tau_v0 * mu_tilde``."""
        return self.tau_v0 * self.mu_tilde_v0

    def as_dict(self) -> dict:
        return {"mu_tilde_v0": self.mu_tilde_v0, "inv_tau_v0": self.inv_v0,
                "inv_tau_vh": self.inv_vh, "inv_tau_v2": self.inv_v2}


@dataclass(frozen=True)
class PatternMoments:
    """Off-diagonal mean and the three covariances by index overlap."""

    mbar: float
    var: float
    cov_share1: float
    cov_disjoint: float

    def cov(self, e, f) -> float:
        shared = len(set(e) & set(f))
        if shared == 2:
            return self.var
        if shared == 1:
            return self.cov_share1
        return self.cov_disjoint


def two_point_parts(d: int, i: int, j: int, k: int, l: int) -> tuple:
    """Connected two-point function at concrete indices, split by block.

    Returns the coefficients of ``(1/tau_v0, 1/tau_vh, 1/tau_v2)``.
    """
    f = f_kernel(d)
    v0 = (f[i, j] * f[k, l] / (d - 1) - (f[i, j] + f[k, l]) / d + (d - 1) / d ** 2) / d
    mask = (i != j) * (k != l)
    vh = mask * (f[i, k] + f[j, k] + f[i, l] + f[j, l]) / (2.0 * (d - 2))
    u = f[i] * f[j]
    w = f[k] * f[l]
    v2 = (0.5 * f[i, k] * f[j, l] + 0.5 * f[i, l] * f[j, k]
          - d / (d - 2.0) * (u @ f @ w) - f[i, j] * f[k, l] / (d - 1))
    return float(v0), float(vh), float(v2)


def pattern_moments(params: ModelParams, d: int) -> PatternMoments:
    """Evaluate the one- and two-point functions at the three overlap patterns."""
    if d < 4:
        raise ValueError(f"need D >= 4, got {d}")
    inv = np.array(params.inverse)
    var = float(inv @ two_point_parts(d, 0, 1, 0, 1))
    c1 = float(inv @ two_point_parts(d, 0, 1, 0, 2))
    c2 = float(inv @ two_point_parts(d, 0, 1, 2, 3))
    mbar = params.mu_tilde_v0 / math.sqrt(d * (d - 1.0))
    return PatternMoments(mbar, var, c1, c2)


def covariance_tensor(params: ModelParams, d: int) -> np.ndarray:
    """Dense ``Cov(M_ij, M_kl)`` as a ``(D, D, D, D)`` array (zero on diagonals)."""
    pm = pattern_moments(params, d)
    e = np.eye(d)
    one = np.ones((d, d))
    off = 1.0 - e
    pair = 0.5 * (np.einsum("ik,jl->ijkl", e, e) + np.einsum("il,jk->ijkl", e, e))
    touch = (np.einsum("ik,jl->ijkl", e, one) + np.einsum("il,jk->ijkl", e, one)
             + np.einsum("jk,il->ijkl", e, one) + np.einsum("jl,ik->ijkl", e, one))
    # on off-diagonal pairs: same edge -> touch = 2, pair = 1; one shared -> touch = 1
    alpha = 2.0 * (pm.var - 2.0 * pm.cov_share1 + pm.cov_disjoint)
    beta = pm.cov_share1 - pm.cov_disjoint
    gamma = pm.cov_disjoint
    k = alpha * pair + beta * touch + gamma
    return k * np.einsum("ij,kl->ijkl", off, off)


def mean_matrix(params: ModelParams, d: int) -> np.ndarray:
    return params.mu_tilde_v0 / math.sqrt(d * (d - 1.0)) * (1.0 - np.eye(d))


# ---------------------------------------------------------------------------
# alternative parameterisation by graph-basis couplings

@dataclass(frozen=True)
class GraphCouplings:
    """Couplings of ``tau1 sum M_ij^2 + tau2 sum M_ij M_jk + tau3 sum M_ij M_kl - mu sum M_ij``."""

    mu: float
    tau1: float
    tau2: float
    tau3: float


def from_graph_couplings(g: GraphCouplings, d: int) -> ModelParams:
    """Map graph-basis couplings to the block couplings.

    Each quadratic invariant is a multiple of the identity on every block:
    ``sum M_ij M_jk`` has eigenvalues ``(D-1, (D-2)/2, 0)`` on ``(V0, VH, V2)``
    and ``sum M_ij M_kl`` has ``(D(D-1), 0, 0)``.  The action carries a factor
    one half, hence the doubling.
    """
    tau_v0 = 2.0 * (g.tau1 + (d - 1) * g.tau2 + d * (d - 1) * g.tau3)
    tau_vh = 2.0 * g.tau1 + (d - 2) * g.tau2
    tau_v2 = 2.0 * g.tau1
    mu_v0 = g.mu * math.sqrt(d * (d - 1.0))
    return ModelParams(mu_v0 / tau_v0, tau_v0, tau_vh, tau_v2)


def to_graph_couplings(p: ModelParams, d: int) -> GraphCouplings:
    tau1 = p.tau_v2 / 2.0
    tau2 = (p.tau_vh - p.tau_v2) / (d - 2)
    tau3 = (p.tau_v0 / 2.0 - tau1 - (d - 1) * tau2) / (d * (d - 1))
    mu = p.mu_v0 / math.sqrt(d * (d - 1.0))
    return GraphCouplings(mu, tau1, tau2, tau3)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Embedding13:
    mu_vec: np.ndarray
    lambda_v0: np.ndarray
    lambda_vh: np.ndarray
    lambda_v2: float
    lambda_v3: float


def embed_13param(params: ModelParams, d: int) -> Embedding13:
    """Couplings of the general 13-parameter model at which it reduces to this one.

    The ``-2 sqrt(D-2)/D`` off-diagonal entries of ``lambda_vh`` are kept as
    given in the reference form.
    """
    if d < 4:
        raise ValueError(f"need D >= 4, got {d}")
    mu_vec = params.mu_v0 * np.array([math.sqrt((d - 1.0) / d), -1.0 / math.sqrt(d)])
    s1 = math.sqrt(d - 1.0) / d
    lam0 = params.tau_v0 * np.array([[(d - 1.0) / d, -s1], [-s1, 1.0 / d]])
    a = (d - 2.0) / (2.0 * d)
    b = 2.0 * math.sqrt(d - 2.0) / d
    lamh = params.tau_vh * np.array([[a, a, -b], [a, a, -b], [-b, -b, 2.0 / d]])
    return Embedding13(mu_vec, lam0, lamh, params.tau_v2, 0.0)
