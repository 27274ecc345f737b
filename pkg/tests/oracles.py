"""Reference computations that share no code path with the moment engines."""
import itertools
import math

import numpy as np

from pigm.observables import evaluate_stack
from pigm.rep_theory import Irrep, projector_matrix


def physical_covariance(params, d):
    """Cov(M_e, M_f) over upper-triangle pairs, from the dense projector kernels."""
    iu = list(zip(*np.triu_indices(d, 1)))
    cov = np.zeros((len(iu), len(iu)))
    for inv, r in zip(params.inverse, (Irrep.V0, Irrep.VH, Irrep.V2)):
        p = projector_matrix(d, r).reshape(d, d, d, d)
        for a, (i, j) in enumerate(iu):
            for b, (k, l) in enumerate(iu):
                # coordinate sqrt(2) M_ij has covariance sum inv P; kernel P[(ij),(kl)] carries 1/2 per ordering
                cov[a, b] += inv * 2.0 * p[i, j, k, l] / 2.0
    return cov


def gaussian_quadrature_moments(ids, params, d=4, order=5):
    """Exact mean and variance of polynomial observables (total degree <= 2*order-1 per axis)."""
    iu = np.triu_indices(d, 1)
    n = len(iu[0])
    cov = physical_covariance(params, d)
    w_vals, w_vecs = np.linalg.eigh(cov)
    root = w_vecs * np.sqrt(np.clip(w_vals, 0, None))
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    weights = weights / math.sqrt(2 * math.pi)
    mean = params.mu_tilde_v0 / math.sqrt(d * (d - 1))
    grid = np.array(list(itertools.product(range(order), repeat=n)))
    z = nodes[grid]
    w = np.prod(weights[grid], axis=1)
    x = mean + z @ root.T
    mats = np.zeros((len(x), d, d))
    mats[:, iu[0], iu[1]] = x
    mats = mats + mats.transpose(0, 2, 1)
    vals = evaluate_stack(mats, ids)
    m1 = w @ vals
    m2 = w @ vals ** 2
    return m1, m2 - m1 ** 2
