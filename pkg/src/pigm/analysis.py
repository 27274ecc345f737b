"""Fitting, theory-vs-data diagnostics, anomaly ranking and pairwise similarity."""
from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import linalg, stats
from scipy.spatial.distance import pdist

from .ensemble import Ensemble
from .moments.params import ModelParams
from .moments.sigma import SHIFT_PRESET, theoretical_sigma
from .moments.symbolic import INV_V0, INV_V2, INV_VH, MU, symbolic_expectation
from .moments.wick import DEFAULT_VARIANCE_BUDGET, CostBudgetExceeded, expectation
from .observables import ObservableVector, ensemble_values, evaluate_stack, resolve_selection

CONDITION_LIMIT = 1e8
BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_PERCENTILES = (0.15, 99.85)
SUBSET_SIZES = (25, 50, 100)
LEAST_GAUSSIAN_COUNT = 12
_MU2 = (2, 0, 0, 0)
_BASE = ("LIN", "Q1", "Q2", "Q3")


class DegenerateData(ValueError):
    pass


# ---------------------------------------------------------------------------
# fitting

@dataclass(frozen=True)
class FitReport:
    """Moment-matched couplings.

    ``params`` is ``None`` when an inverse coupling comes out negative; the
    raw solution is always in ``mu_tilde`` and ``inverse``.
    """

    params: ModelParams | None
    mu_tilde: float
    inverse: tuple
    inputs: dict
    residuals: dict
    flags: tuple
    dim: int
    n_days: int

    def as_dict(self) -> dict:
        return {"mu_tilde_v0": self.mu_tilde,
                "inv_tau_v0": self.inverse[0], "inv_tau_vh": self.inverse[1], "inv_tau_v2": self.inverse[2],
                "inputs": self.inputs, "residuals": self.residuals, "flags": list(self.flags),
                "dim": self.dim, "n_days": self.n_days}


def _moment_system(d: int):
    lin = symbolic_expectation("LIN").coefficient_at(MU, d)
    rows = []
    for oid in ("Q3", "Q2", "Q1"):
        e = symbolic_expectation(oid)
        rows.append((e.coefficient_at(_MU2, d),
                     [e.coefficient_at(m, d) for m in (INV_V0, INV_VH, INV_V2)]))
    return lin, rows


def solve_moments(means: Sequence[float], d: int) -> tuple:
    """``(mu_tilde, (inv_v0, inv_vh, inv_v2))`` from the means of LIN, Q1, Q2, Q3."""
    m_lin, m_q1, m_q2, m_q3 = (float(x) for x in means)
    lin, rows = _moment_system(d)
    mu = m_lin / lin
    a = np.array([r[1] for r in rows])
    if np.any(np.abs(np.triu(a, 1)) > 1e-12 * np.abs(a).max()):
        raise AssertionError("quadratic moment system is not triangular")
    rhs = np.array([m_q3, m_q2, m_q1]) - np.array([r[0] for r in rows]) * mu * mu
    inv = linalg.solve_triangular(a, rhs, lower=True)
    return mu, tuple(float(x) for x in inv)


def fit(ens: Ensemble) -> FitReport:
    """Match the ensemble means of the linear and three quadratic observables."""
    if ens.size < 2:
        raise ValueError("fit needs at least two matrices")
    if ens.dim < 4:
        raise ValueError("fit needs D >= 4")
    vals = evaluate_stack(ens.data, _BASE)
    means = vals.mean(axis=0)
    mu, inv = solve_moments(means, ens.dim)
    flags = []
    if np.ptp(ens.data, axis=0).max() == 0.0:
        flags.append("zero_variance")
    names = ("v0", "vh", "v2")
    for n, x in zip(names, inv):
        if x < 0:
            flags.append(f"negative_inverse_{n}")
    params = None
    if not any(f.startswith("negative") for f in flags):
        params = ModelParams.from_inverse(mu, *inv)
    inputs = dict(zip(_BASE, (float(x) for x in means)))
    residuals = {}
    if params is not None:
        residuals = {oid: symbolic_expectation(oid).evaluate(params, ens.dim) - inputs[oid] for oid in _BASE}
    return FitReport(params, mu, inv, inputs, residuals, tuple(flags), ens.dim, ens.size)


def coupling_sigmas(ens: Ensemble) -> tuple:
    """Spread across days of the inverse couplings moment-matched to each day alone."""
    if ens.size < 2:
        raise ValueError("need at least two matrices")
    vals = evaluate_stack(ens.data, _BASE)
    per_day = np.array([solve_moments(v, ens.dim)[1] for v in vals])
    return tuple(float(x) for x in per_day.std(axis=0, ddof=1))


# ---------------------------------------------------------------------------
# theory table shared by the deviation and classification reports

@dataclass(frozen=True)
class TheoryEntry:
    mean: float
    sigma: float
    method: str


def theory_table(params: ModelParams, d: int, selection="cubic_quartic", sigma_method="exact",
                 sigma_params: Sequence[float] | None = None,
                 budget: float | None = DEFAULT_VARIANCE_BUDGET) -> dict:
    """Predicted mean and sigma per observable.

    ``sigma_method`` is ``"exact"``, ``"coupling_shift"``, ``"reference"`` (shift
    for O12 and O19, exact otherwise) or a mapping from id to method.  Exact
    requests over budget fall back to the shift estimate when
    ``sigma_params`` is available.
    """
    out = {}
    for oid in resolve_selection(selection):
        if isinstance(sigma_method, Mapping):
            method = sigma_method.get(oid, "exact")
        elif sigma_method == "reference":
            method = "coupling_shift" if oid in SHIFT_PRESET else "exact"
        else:
            method = sigma_method
        try:
            sig = theoretical_sigma(oid, params, d, method, sigma_params, budget)
        except CostBudgetExceeded:
            if sigma_params is None:
                raise
            method = "coupling_shift"
            sig = theoretical_sigma(oid, params, d, method, sigma_params)
        out[oid] = TheoryEntry(expectation(oid, params, d), sig, method)
    return out


def _needs_shift(sigma_method) -> bool:
    if isinstance(sigma_method, Mapping):
        return "coupling_shift" in sigma_method.values()
    return sigma_method in ("reference", "coupling_shift")


# ---------------------------------------------------------------------------
# deviation report

@dataclass(frozen=True)
class DeviationRow:
    id: str
    exp_mean: float
    th_mean: float
    sigma_E: float
    sigma_T: float
    delta: float
    sigma_ratio: float
    se_multiples: float
    rel_error: float
    ci_lo: float
    ci_hi: float
    sigma_method: str


@dataclass(frozen=True)
class DeviationReport:
    rows: tuple
    meta: dict = field(default_factory=dict)

    REFERENCE_COLUMNS = ("id", "delta", "sigma_ratio", "sigma_method")

    @property
    def average_delta(self) -> float:
        return float(np.mean([r.delta for r in self.rows]))

    @property
    def average_sigma_ratio(self) -> float:
        return float(np.mean([r.sigma_ratio for r in self.rows]))

    def row(self, oid: str) -> DeviationRow:
        return next(r for r in self.rows if r.id == oid)

    def records(self) -> list:
        return [asdict(r) for r in self.rows]

    def reference_records(self) -> list:
        """Rows restricted to the columns of the shipped deviation reference table."""
        return [{c: getattr(r, c) for c in self.REFERENCE_COLUMNS} for r in self.rows]


def _bootstrap_means(values: np.ndarray, n_boot: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = values.shape[0]
    out = np.empty((n_boot, values.shape[1]))
    for b in range(n_boot):
        out[b] = values[rng.integers(0, n, n)].mean(axis=0)
    return out


def deviation_report(ens: Ensemble, params: ModelParams, selection="cubic_quartic",
                     sigma_method="exact", sigma_params: Sequence[float] | None = None,
                     n_boot: int = BOOTSTRAP_RESAMPLES, seed: int = 0,
                     budget: float | None = DEFAULT_VARIANCE_BUDGET,
                     theory: Mapping | None = None) -> DeviationReport:
    """Normalised absolute errors, sigma ratios, standard-error multiples and bootstrap CIs."""
    ids, vals = ensemble_values(ens, selection)
    if sigma_params is None and _needs_shift(sigma_method):
        sigma_params = coupling_sigmas(ens)
    if theory is None:
        theory = theory_table(params, ens.dim, ids, sigma_method, sigma_params, budget)
    n = ens.size
    exp_mean = vals.mean(axis=0)
    sigma_e = vals.std(axis=0, ddof=1)
    boots = _bootstrap_means(vals, n_boot, seed)
    lo, hi = np.percentile(boots, BOOTSTRAP_PERCENTILES, axis=0)
    rows = []
    for k, oid in enumerate(ids):
        th = theory[oid]
        gap = abs(th.mean - exp_mean[k])
        se = sigma_e[k] / math.sqrt(n)
        rows.append(DeviationRow(
            oid, float(exp_mean[k]), th.mean, float(sigma_e[k]), th.sigma,
            _ratio(gap, sigma_e[k]), _ratio(sigma_e[k], th.sigma), _ratio(gap, se),
            _ratio(gap, abs(exp_mean[k])), float(lo[k]), float(hi[k]), th.method))
    meta = {"n_days": n, "dim": ens.dim, "sigma_E_ddof": 1, "bootstrap_resamples": n_boot,
            "bootstrap_percentiles": list(BOOTSTRAP_PERCENTILES), "seed": seed,
            "sigma_params": list(sigma_params) if sigma_params is not None else None}
    return DeviationReport(tuple(rows), meta)


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return float(a / b)


def least_gaussian(ens: Ensemble, params: ModelParams, count: int = LEAST_GAUSSIAN_COUNT,
                   selection="cubic_quartic") -> tuple:
    """Ids with the largest normalised absolute error, in descending order."""
    ids, vals = ensemble_values(ens, selection)
    if not 1 <= count <= len(ids):
        raise ValueError(f"count must be in 1..{len(ids)}")
    sigma_e = vals.std(axis=0, ddof=1)
    gaps = np.array([abs(expectation(o, params, ens.dim) - m) for o, m in zip(ids, vals.mean(axis=0))])
    delta = np.array([_ratio(g, s) for g, s in zip(gaps, sigma_e)])
    order = np.argsort(-delta, kind="stable")
    return tuple(ids[k] for k in order[:count])


# ---------------------------------------------------------------------------
# day capture and balanced accuracy

@dataclass(frozen=True)
class Capture:
    rate: float
    centre: float
    sigma: float
    degenerate: bool


def _inside(values: np.ndarray, centre: float, sigma: float, k: float) -> np.ndarray:
    # absorb rounding in the centre when sigma is zero
    slack = 8 * np.finfo(float).eps * max(abs(centre), 1.0)
    return np.abs(values - centre) <= k * sigma + slack


def capture_rate(values, centre: float, sigma: float, k_sigma: float = 2.0) -> Capture:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values")
    inside = _inside(values, centre, sigma, k_sigma)
    return Capture(float(inside.mean()), float(centre), float(sigma), bool(sigma == 0))


def day_capture(ens: Ensemble, obs: str, mode: str = "empirical", params: ModelParams | None = None,
                k_sigma: float = 2.0, sigma_method: str = "exact",
                sigma_params: Sequence[float] | None = None) -> Capture:
    """Fraction of days within ``k_sigma`` of the empirical or the predicted mean."""
    _, vals = ensemble_values(ens, [obs])
    v = vals[:, 0]
    if mode == "empirical":
        return capture_rate(v, v.mean(), v.std(ddof=1), k_sigma)
    if mode == "theoretical":
        if params is None:
            raise ValueError("theoretical capture needs params")
        sig = theoretical_sigma(obs, params, ens.dim, sigma_method, sigma_params)
        return capture_rate(v, expectation(obs, params, ens.dim), sig, k_sigma)
    raise ValueError(f"mode must be 'empirical' or 'theoretical', got {mode!r}")


@dataclass(frozen=True)
class ClassificationRow:
    id: str
    empirical_capture: float
    theoretical_capture: float
    tp: int
    fn: int
    fp: int
    tn: int
    tpr: float | None
    tnr: float | None
    balanced_accuracy: float | None
    sigma_method: str = "exact"


def classify_days(values, empirical: tuple, theoretical: tuple, k_sigma: float = 2.0,
                  oid: str = "", sigma_method: str = "exact") -> ClassificationRow:
    """Typical = inside the empirical band; predicted typical = inside the theoretical band."""
    values = np.asarray(values, dtype=float)
    actual = _inside(values, empirical[0], empirical[1], k_sigma)
    pred = _inside(values, theoretical[0], theoretical[1], k_sigma)
    tp = int(np.sum(actual & pred))
    fn = int(np.sum(actual & ~pred))
    fp = int(np.sum(~actual & pred))
    tn = int(np.sum(~actual & ~pred))
    tpr = tp / (tp + fn) if tp + fn else None
    tnr = tn / (tn + fp) if tn + fp else None
    ba = (tpr + tnr) / 2 if tpr is not None and tnr is not None else None
    return ClassificationRow(oid, float(actual.mean()), float(pred.mean()), tp, fn, fp, tn,
                             tpr, tnr, ba, sigma_method)


def balanced_accuracy(ens: Ensemble, obs: str, params: ModelParams, k_sigma: float = 2.0,
                      sigma_method: str = "exact", sigma_params=None) -> ClassificationRow:
    _, vals = ensemble_values(ens, [obs])
    v = vals[:, 0]
    th = theory_table(params, ens.dim, [obs], sigma_method, sigma_params)[obs]
    return classify_days(v, (v.mean(), v.std(ddof=1)), (th.mean, th.sigma), k_sigma, obs, th.method)


@dataclass(frozen=True)
class ClassificationReport:
    rows: tuple
    meta: dict = field(default_factory=dict)

    REFERENCE_COLUMNS = ("id", "empirical_capture_pct", "theoretical_capture_pct",
                         "balanced_accuracy", "sigma_method")

    @property
    def average_balanced_accuracy(self) -> float | None:
        vals = [r.balanced_accuracy for r in self.rows if r.balanced_accuracy is not None]
        return float(np.mean(vals)) if vals else None

    def row(self, oid: str) -> ClassificationRow:
        return next(r for r in self.rows if r.id == oid)

    def records(self) -> list:
        return [asdict(r) for r in self.rows]

    def reference_records(self) -> list:
        return [{"id": r.id, "empirical_capture_pct": 100 * r.empirical_capture,
                 "theoretical_capture_pct": 100 * r.theoretical_capture,
                 "balanced_accuracy": r.balanced_accuracy, "sigma_method": r.sigma_method}
                for r in self.rows]


def classification_report(ens: Ensemble, params: ModelParams, selection="cubic_quartic",
                          k_sigma: float = 2.0, sigma_method="exact", sigma_params=None,
                          theory: Mapping | None = None) -> ClassificationReport:
    ids, vals = ensemble_values(ens, selection)
    if sigma_params is None and _needs_shift(sigma_method):
        sigma_params = coupling_sigmas(ens)
    if theory is None:
        theory = theory_table(params, ens.dim, ids, sigma_method, sigma_params)
    rows = []
    for k, oid in enumerate(ids):
        v = vals[:, k]
        th = theory[oid]
        rows.append(classify_days(v, (v.mean(), v.std(ddof=1)), (th.mean, th.sigma), k_sigma,
                                  oid, th.method))
    return ClassificationReport(tuple(rows), {"k_sigma": k_sigma, "sigma_E_ddof": 1,
                                              "n_days": ens.size, "dim": ens.dim})


# ---------------------------------------------------------------------------
# distances

@dataclass(frozen=True)
class DistanceResult:
    distances: np.ndarray
    ridge: float = 0.0
    condition: float = 1.0
    kept_features: tuple = ()


def feature_matrix(vectors) -> np.ndarray:
    """Stack a list of :class:`ObservableVector` (or accept an ``(N, k)`` array)."""
    if isinstance(vectors, np.ndarray):
        x = vectors
    else:
        vectors = list(vectors)
        x = np.array([v.values if isinstance(v, ObservableVector) else v for v in vectors], dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected an (N, k) feature matrix, got shape {x.shape}")
    return x


def _zscore(x: np.ndarray, ddof: int) -> tuple:
    sd = x.std(axis=0, ddof=ddof)
    keep = sd > 0
    if not keep.any():
        raise DegenerateData("every feature has zero variance")
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} zero-variance feature(s)", stacklevel=3)
    z = (x[:, keep] - x[:, keep].mean(axis=0)) / sd[keep]
    return z, tuple(int(k) for k in np.flatnonzero(keep))


def choose_ridge(eigvals: np.ndarray, limit: float = CONDITION_LIMIT) -> float:
    """0 if the condition number is below ``limit``, else the smallest power of ten that fixes it."""
    lo, hi = float(eigvals.min()), float(eigvals.max())
    if lo > 0 and hi / lo < limit:
        return 0.0
    e = -16
    while (hi + 10.0 ** e) / (max(lo, 0.0) + 10.0 ** e) >= limit:
        e += 1
    return 10.0 ** e


def _whitener(z: np.ndarray, ridge) -> tuple:
    cov = np.cov(z, rowvar=False, ddof=1).reshape(z.shape[1], z.shape[1])
    cov = (cov + cov.T) / 2
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-9 * max(w.max(), 1.0):
        raise DegenerateData("sample covariance is not positive semidefinite")
    w = np.clip(w, 0.0, None)
    cond = float(w.max() / w.min()) if w.min() > 0 else math.inf
    eps = choose_ridge(w) if ridge == "auto" else float(ridge)
    if w.min() + eps <= 0:
        raise DegenerateData("covariance is singular; a positive ridge is required")
    return v / np.sqrt(w + eps), eps, cond


def mahalanobis(vectors, ridge="auto") -> DistanceResult:
    """Distance of every vector from the sample mean under the (N-1)-normalised covariance.

    Features are z-scored first; with ``ridge=0`` this leaves distances
    unchanged, and it makes the ridge act on a dimensionless covariance.
    """
    x = feature_matrix(vectors)
    if x.shape[0] < 2:
        raise ValueError("need at least two vectors")
    z, kept = _zscore(x, ddof=1)
    wh, eps, cond = _whitener(z, ridge)
    return DistanceResult(np.linalg.norm(z @ wh, axis=1), eps, cond, kept)


def euclidean_standardized(vectors, ddof: int = 0) -> DistanceResult:
    """Euclidean length after per-feature z-scoring (population sigma by default)."""
    x = feature_matrix(vectors)
    z, kept = _zscore(x, ddof=ddof)
    return DistanceResult(np.linalg.norm(z, axis=1), kept_features=kept)


@dataclass(frozen=True)
class PCAResult:
    scores: np.ndarray
    k: int
    explained_ratio: np.ndarray
    components: np.ndarray


def pca_reduce(vectors, variance_threshold: float = 0.70) -> PCAResult:
    """Project z-scored features onto the fewest components reaching the threshold."""
    if not 0 < variance_threshold <= 1:
        raise ValueError("variance_threshold must be in (0, 1]")
    x = feature_matrix(vectors)
    if x.shape[0] < 2:
        raise ValueError("need at least two vectors")
    z, _ = _zscore(x, ddof=1)
    cov = np.cov(z, rowvar=False, ddof=1).reshape(z.shape[1], z.shape[1])
    w, v = np.linalg.eigh((cov + cov.T) / 2)
    order = np.argsort(w)[::-1]
    w, v = np.clip(w[order], 0.0, None), v[:, order]
    ratio = w / w.sum()
    k = int(np.searchsorted(np.cumsum(ratio), variance_threshold - 1e-12) + 1)
    k = min(k, len(w))
    return PCAResult(z @ v[:, :k], k, ratio, v[:, :k])


# ---------------------------------------------------------------------------
# contingency statistics

def fisher_one_sided(table) -> float:
    """P(top-left cell >= observed) with all margins fixed (exact hypergeometric tail)."""
    (a, b), (c, d) = [[int(x) for x in r] for r in table]
    if min(a, b, c, d) < 0:
        raise ValueError("table entries must be non-negative")
    row1, col1, n = a + b, a + c, a + b + c + d
    hi = min(row1, col1)
    rest = n - col1
    term = math.comb(col1, a) * math.comb(rest, row1 - a)
    tail = term
    for x in range(a, hi):
        # exact: the quotient is the next integer term
        term = term * (col1 - x) * (row1 - x) // ((x + 1) * (rest - row1 + x + 1))
        tail += term
    # int / int true division is correctly rounded
    return tail / math.comb(n, row1)


def odds_ratio(p_top: float, p_bottom: float) -> float:
    """``(P_T / (1 - P_T)) / (P_B / (1 - P_B))`` with the limiting values at 0 and 1."""
    def odds(p):
        return math.inf if p == 1 else p / (1 - p)
    num, den = odds(p_top), odds(p_bottom)
    if den == 0:
        return math.nan if num == 0 else math.inf
    if math.isinf(den):
        return math.nan if math.isinf(num) else 0.0
    return num / den


@dataclass(frozen=True)
class SubsetRow:
    subset_size: int
    top_events: int
    bottom_events: int
    p_top: float
    p_bottom: float
    fisher_p: float
    odds_ratio: float


@dataclass(frozen=True)
class AnomalyReport:
    metric: str
    features: str
    labels: tuple
    distances: np.ndarray
    ranking: tuple
    rows: tuple
    meta: dict = field(default_factory=dict)

    REFERENCE_COLUMNS = ("metric", "features", "subset_size", "p_top", "p_bottom",
                         "fisher_p", "odds_ratio")

    def row(self, size: int) -> SubsetRow:
        return next(r for r in self.rows if r.subset_size == size)

    def reference_records(self) -> list:
        return [{"metric": self.metric, "features": self.features, "subset_size": r.subset_size,
                 "p_top": r.p_top, "p_bottom": r.p_bottom, "fisher_p": r.fisher_p,
                 "odds_ratio": r.odds_ratio} for r in self.rows]


def subset_contrast(ranked_events: Sequence[bool], size: int) -> SubsetRow:
    """Compare event rates in the first and last ``size`` entries of a ranking."""
    ev = np.asarray(ranked_events, dtype=bool)
    if size < 1 or 2 * size > ev.size:
        raise ValueError(f"subset size {size} must be in 1..{ev.size // 2}")
    a, c = int(ev[:size].sum()), int(ev[-size:].sum())
    pt, pb = a / size, c / size
    return SubsetRow(size, a, c, pt, pb, fisher_one_sided([[a, size - a], [c, size - c]]),
                     odds_ratio(pt, pb))


FEATURES = ("observables", "raw", "pca")
METRICS = ("mahalanobis", "euclidean_standardized")


def anomaly_features(ens: Ensemble, features: str, selection="anomaly12",
                     pca_threshold: float = 0.70) -> np.ndarray:
    if features == "observables":
        return ensemble_values(ens, selection)[1]
    if features == "raw":
        return ens.upper()
    if features == "pca":
        return pca_reduce(ens.upper(), pca_threshold).scores
    raise ValueError(f"features must be one of {FEATURES}")


def anomaly_study(ens: Ensemble, event_dates: Iterable[str], features: str = "observables",
                  metric: str = "mahalanobis", subset_sizes: Sequence[int] = SUBSET_SIZES,
                  selection="anomaly12", ridge="auto", pca_threshold: float = 0.70) -> AnomalyReport:
    """Rank days by distance from the mean and contrast event rates in the extremes."""
    events_set = set(event_dates)
    unknown = events_set - set(ens.labels)
    if unknown:
        raise ValueError(f"event dates not in ensemble: {sorted(unknown)[:5]}")
    x = anomaly_features(ens, features, selection, pca_threshold)
    if metric == "mahalanobis":
        res = mahalanobis(x, ridge)
    elif metric == "euclidean_standardized":
        res = euclidean_standardized(x)
    else:
        raise ValueError(f"metric must be one of {METRICS}")
    order = np.argsort(-res.distances, kind="stable")
    ranked = [ens.labels[k] in events_set for k in order]
    rows = tuple(subset_contrast(ranked, s) for s in subset_sizes)
    meta = {"ridge": res.ridge, "condition": res.condition, "n_features": x.shape[1],
            "covariance_ddof": 1, "n_events": len(events_set)}
    if features == "observables":
        meta["selection"] = list(resolve_selection(selection))
    return AnomalyReport(metric, features, ens.labels, res.distances,
                         tuple(ens.labels[k] for k in order), rows, meta)


# ---------------------------------------------------------------------------
# similarity

@dataclass(frozen=True)
class SimilarityReport:
    n_pairs: int
    pairs: np.ndarray
    mahalanobis: np.ndarray
    euclidean: np.ndarray
    spearman: float
    p_value: float
    method: str
    meta: dict = field(default_factory=dict)

    def closest(self, k: int = 10, metric: str = "mahalanobis") -> np.ndarray:
        d = self.mahalanobis if metric == "mahalanobis" else self.euclidean
        return self.pairs[np.argsort(d, kind="stable")[:k]]


EXACT_SPEARMAN_MAX = 9


def spearman(a, b, alternative: str = "greater") -> tuple:
    """``(rho, p, method)``; exact permutation p-value when ``len(a) <= 9``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length sequences of length >= 2")
    rho = float(stats.spearmanr(a, b).statistic)
    n = a.size
    if n <= EXACT_SPEARMAN_MAX:
        ra, rb = stats.rankdata(a), stats.rankdata(b)
        ra, rb = ra - ra.mean(), rb - rb.mean()
        denom = math.sqrt((ra @ ra) * (rb @ rb))
        if denom == 0:
            return math.nan, math.nan, "exact_permutation"
        tol = 1e-12
        count = total = 0
        for perm in itertools.permutations(rb):
            r = float(ra @ np.array(perm)) / denom
            total += 1
            if alternative == "greater":
                count += r >= rho - tol
            elif alternative == "less":
                count += r <= rho + tol
            else:
                count += abs(r) >= abs(rho) - tol
        return rho, count / total, "exact_permutation"
    res = stats.spearmanr(a, b, alternative=alternative)
    return rho, float(res.pvalue), "t_approximation"


def pairwise_mahalanobis(vectors, ridge="auto") -> tuple:
    """Condensed pairwise distances under the pooled covariance; returns ``(d, ridge)``."""
    x = feature_matrix(vectors)
    z, _ = _zscore(x, ddof=1)
    wh, eps, _ = _whitener(z, ridge)
    return pdist(z @ wh), eps


def similarity_study(ens: Ensemble, selection="anomaly12", ridge="auto",
                     alternative: str = "greater") -> SimilarityReport:
    """Rank all day pairs by observable-vector Mahalanobis and by matrix Euclidean distance."""
    if ens.size < 3:
        raise ValueError("similarity needs at least three matrices")
    _, vals = ensemble_values(ens, selection)
    dm, eps = pairwise_mahalanobis(vals, ridge)
    de = pdist(ens.upper())
    rho, p, method = spearman(dm, de, alternative)
    ii, jj = np.triu_indices(ens.size, 1)
    meta = {"ridge": eps, "alternative": alternative, "euclidean": "upper-triangle Frobenius",
            "selection": list(resolve_selection(selection))}
    return SimilarityReport(int(dm.size), np.stack([ii, jj], axis=1), dm, de, rho, p, method, meta)


# ---------------------------------------------------------------------------
# shipped reference tables (real-data values, not reproducible without the source data)

REFERENCE_TABLES = {
    "deviation": "deviation_reference.csv",
    "capture": "capture_reference.csv",
    "anomaly_in_sample": "anomaly_reference_in_sample.csv",
    "anomaly_out_of_sample": "anomaly_reference_out_of_sample.csv",
}


def reference_table(name: str) -> list:
    """Rows of a shipped reference table as dicts (numbers parsed as float)."""
    if name not in REFERENCE_TABLES:
        raise KeyError(f"unknown reference table {name!r}; choose from {sorted(REFERENCE_TABLES)}")
    text = resources.files("pigm").joinpath("data", REFERENCE_TABLES[name]).read_text()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({k: _maybe_float(v) for k, v in rec.items()})
    return rows


def _maybe_float(v: str):
    try:
        return float(v)
    except ValueError:
        return v
