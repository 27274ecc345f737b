"""Draw symmetric zero-diagonal matrices from the permutation-invariant Gaussian model.

Matrix ``k`` of a run is generated from its own Philox-4x64 stream keyed by
``seed + (k << 64)``, so any slice of an ensemble can be regenerated alone and
parallel generation reproduces the serial result.  Normals come from the
Box-Muller transform, which consumes a fixed number of uniforms per matrix.

Noise construction: with ``G`` symmetric, zero-diagonal and unit normals on
the upper triangle, ``G / sqrt(2)`` has covariance equal to the identity on
the physical subspace, so ``sum_L inv_tau_L^(1/2) P_L(G / sqrt(2))`` has
covariance ``sum_L inv_tau_L P_L``.
"""
from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import Ensemble
from .moments.params import ModelParams, mean_matrix
from .rep_theory import Irrep, project_array

RNG_ALGORITHM = "philox4x64-boxmuller"
RNG_VERSION = 1
_CHUNK = 4096


@dataclass(frozen=True)
class SamplerConfig:
    params: ModelParams
    dim: int
    count: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.params, ModelParams):
            raise TypeError("params must be ModelParams")
        if int(self.dim) < 4:
            raise ValueError(f"need dim >= 4, got {self.dim}")
        if int(self.count) < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "seed", int(self.seed))

    def metadata(self) -> dict:
        return {"rng": RNG_ALGORITHM, "rng_version": RNG_VERSION, "seed": self.seed,
                "dim": self.dim, "count": self.count, **self.params.as_dict()}


def _normals(seed: int, index: int, m: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed + (index << 64)))
    half = (m + 1) // 2
    u = gen.random(2 * half)
    rad = np.sqrt(-2.0 * np.log1p(-u[:half]))
    ang = 2.0 * math.pi * u[half:]
    return np.concatenate([rad * np.cos(ang), rad * np.sin(ang)])[:m]


def unit_noise(seed: int, dim: int, start: int, stop: int) -> np.ndarray:
    """Symmetric zero-diagonal matrices of unit normals for indices ``start..stop-1``."""
    iu = np.triu_indices(dim, 1)
    m = iu[0].size
    out = np.zeros((stop - start, dim, dim))
    for row, k in enumerate(range(start, stop)):
        z = _normals(seed, k, m)
        out[row][iu] = z
    return out + out.transpose(0, 2, 1)


def _draw(config: SamplerConfig, start: int, stop: int) -> np.ndarray:
    p, d = config.params, config.dim
    g = unit_noise(config.seed, d, start, stop) / math.sqrt(2.0)
    x = np.broadcast_to(mean_matrix(p, d), g.shape).copy()
    for inv, irrep in zip(p.inverse, (Irrep.V0, Irrep.VH, Irrep.V2)):
        if inv > 0:
            x += math.sqrt(inv) * project_array(g, irrep)
    return x


def date_labels(count: int, start: str = "2000-01-01") -> tuple:
    """Consecutive ISO dates, handy when synthetic days must look like calendar days."""
    d0 = _dt.date.fromisoformat(start)
    return tuple((d0 + _dt.timedelta(days=k)).isoformat() for k in range(count))


def sample(config: SamplerConfig, labels: Sequence[str] | None = None) -> Ensemble:
    """Draw ``config.count`` matrices; deterministic in ``config``."""
    chunks = [_draw(config, a, min(a + _CHUNK, config.count))
              for a in range(0, config.count, _CHUNK)]
    data = np.concatenate(chunks)
    return Ensemble.from_stack(data, labels=labels, validate=False, meta=config.metadata())


def sample_fit_roundtrip(params: ModelParams, dim: int, n: int, seed: int) -> ModelParams:
    """Sample ``n`` matrices and refit the four couplings by moment matching."""
    from .analysis import fit

    return fit(sample(SamplerConfig(params, dim, n, seed))).params
