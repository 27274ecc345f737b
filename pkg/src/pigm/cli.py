"""Command-line entry point: ``pigm <subcommand> ...``.

Exit status is 0 on success, 1 on a data or validation error and 2 on a
usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .ensemble import EnsembleError, read_ensemble, write_ensemble

FORMATS = """\
file formats
------------
ensemble CSV   lines starting with '#' are metadata: '# dim: D' then '# key: <json>'.
               Header 'label,i,j,value', one row per upper-triangle entry (0-based
               i < j), values written with Python repr (round-trips bit-exactly).
               A file with only '# dim: D' and the header is an empty ensemble.
ensemble JSON  {"dim": D, "meta": {...}, "days": [{"label": L, "upper": [...]}]},
               'upper' in row-major order of (i, j) with i < j, length D(D-1)/2.
tick CSV       pair,timestamp,bid,ask   timestamp 'YYYYMMDD HH:MM:SS.mmm' (UTC);
               optional header row starting with 'pair'.
pairs JSON     {"EUR/USD": 1, ...} symbol -> index 1..P (default: sorted symbols).
calendar JSON  list of ISO dates to exclude, or {"exclude": [...],
               "interval_minutes": 5, "exclude_year_end": true,
               "min_valid_returns": 2, "zero_variance": "error" | "zero"}.
events         JSON list of ISO dates, or CSV with one date per row (optional
               header 'date').
fit JSON       {"metadata": {...}, "fit": {"mu_tilde_v0", "inv_tau_v0",
               "inv_tau_vh", "inv_tau_v2", "inputs", "residuals", "flags", "dim",
               "n_days"}, "coupling_sigmas": [s_v0, s_vh, s_v2]}.
predict JSON   {"metadata": {...}, "dim": D, "observables": [{"id", "expectation",
               "sigma_T", "method"}]}.
reports        JSON {"metadata", "meta", "rows"} plus a CSV of the rows.
Every JSON artifact carries "metadata": {"tool", "version", "subcommand",
"config_hash", "seed"}; CSV artifacts carry the same block as '# key: value'
lines.
"""

log = logging.getLogger("pigm")


class DataError(Exception):
    """Raised for problems with input data; maps to exit status 1."""


# ---------------------------------------------------------------------------
# metadata and writers

def _config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "out_dir")}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _metadata(args: argparse.Namespace) -> dict:
    return {"tool": "pigm", "version": __version__, "subcommand": args.command,
            "config_hash": _config_hash(args), "seed": getattr(args, "seed", None)}


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(_clean(doc), indent=1, sort_keys=True) + "\n")


def _write_csv(path, rows: Sequence[dict], metadata: dict) -> None:
    with Path(path).open("w", newline="") as fh:
        for k in sorted(metadata):
            fh.write(f"# {k}: {json.dumps(metadata[k])}\n")
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _params_from_fit(path):
    from .moments import ModelParams

    doc = _read_json(path)
    f = doc.get("fit", doc)
    try:
        p = ModelParams.from_inverse(f["mu_tilde_v0"], f["inv_tau_v0"], f["inv_tau_vh"], f["inv_tau_v2"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: unusable fit ({exc})") from exc
    return p, f.get("dim"), doc.get("coupling_sigmas")


def _floats(text: str, n: int | None = None) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _read_events(path) -> list:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            return [str(x) for x in json.loads(text)]
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: {exc}") from exc
    rows = [r[0].strip() for r in csv.reader(text.splitlines()) if r and r[0].strip()]
    return [r for r in rows if r.lower() != "date"]


# ---------------------------------------------------------------------------
# subcommands

def cmd_ingest(args) -> int:
    from .ingest import CalendarConfig, build_daily_ensemble

    pairs = _read_json(args.pairs) if args.pairs else None
    cal = CalendarConfig.from_json(args.calendar) if args.calendar else CalendarConfig()
    if args.interval is not None:
        cal = CalendarConfig(cal.exclude, args.interval, cal.exclude_year_end,
                             cal.min_valid_returns, cal.zero_variance)
    ens = build_daily_ensemble(args.ticks, pairs, cal, args.max_bad_rows)
    write_ensemble(ens, args.out, {"metadata": _metadata(args)})
    print(f"wrote {ens.size} matrices of dim {ens.dim} to {args.out}")
    return 0


def cmd_observables(args) -> int:
    from .observables import ensemble_values

    ens = read_ensemble(args.ensemble)
    ids, vals = ensemble_values(ens, args.selection)
    rows = [{"label": lab, **{o: float(v) for o, v in zip(ids, row)}} for lab, row in zip(ens.labels, vals)]
    _write_csv(args.out, rows, _metadata(args))
    print(f"wrote {len(ids)} observables for {ens.size} matrices to {args.out}")
    return 0


def cmd_fit(args) -> int:
    from .analysis import coupling_sigmas, fit

    ens = read_ensemble(args.ensemble)
    rep = fit(ens)
    doc = {"metadata": _metadata(args), "fit": rep.as_dict(), "coupling_sigmas": list(coupling_sigmas(ens))}
    _write_json(args.out, doc)
    print(json.dumps(_clean(rep.as_dict())))
    return 1 if rep.params is None else 0


def cmd_predict(args) -> int:
    from .analysis import theory_table

    params, dim, sig = _params_from_fit(args.fit)
    dim = args.D or dim
    if not dim:
        raise DataError("dimension unknown: pass --D")
    sigma_params = args.sigma_params or sig
    theory = theory_table(params, int(dim), args.selection, args.sigma_method, sigma_params, args.budget)
    obs = [{"id": k, "expectation": v.mean, "sigma_T": v.sigma, "method": v.method} for k, v in theory.items()]
    _write_json(args.out, {"metadata": _metadata(args), "dim": int(dim), "observables": obs})
    print(f"wrote predictions for {len(obs)} observables to {args.out}")
    return 0


def _theory_from_predict(path):
    from .analysis import TheoryEntry

    doc = _read_json(path)
    return {o["id"]: TheoryEntry(float(o["expectation"]), float(o["sigma_T"]), o["method"])
            for o in doc["observables"]}


def cmd_report(args) -> int:
    from .analysis import classification_report, deviation_report

    ens = read_ensemble(args.ensemble)
    params, _, sig = _params_from_fit(args.fit)
    theory = _theory_from_predict(args.predict) if args.predict else None
    if theory is not None:
        missing = [o for o in _selection_ids(args.selection) if o not in theory]
        if missing:
            raise DataError(f"predictions missing for {missing}")
    sigma_params = args.sigma_params or sig
    dev = deviation_report(ens, params, args.selection, args.sigma_method, sigma_params,
                           n_boot=args.bootstrap, seed=args.seed, theory=theory)
    cls = classification_report(ens, params, args.selection, args.k_sigma, args.sigma_method,
                                sigma_params, theory=theory)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = _metadata(args)
    _write_json(out / "deviation.json", {"metadata": meta, "meta": dev.meta, "rows": dev.records(),
                                         "average_delta": dev.average_delta,
                                         "average_sigma_ratio": dev.average_sigma_ratio})
    _write_csv(out / "deviation.csv", dev.records(), meta)
    _write_csv(out / "deviation_reference_columns.csv", dev.reference_records(), meta)
    _write_json(out / "capture.json", {"metadata": meta, "meta": cls.meta, "rows": cls.records(),
                                       "average_balanced_accuracy": cls.average_balanced_accuracy})
    _write_csv(out / "capture.csv", cls.records(), meta)
    _write_csv(out / "capture_reference_columns.csv", cls.reference_records(), meta)
    print(f"{len(dev.rows)} deviation rows; average delta {dev.average_delta:.4f}; "
          f"average balanced accuracy {cls.average_balanced_accuracy}")
    return 0


def _selection_ids(selection):
    from .observables import resolve_selection

    return resolve_selection(selection)


def cmd_anomaly(args) -> int:
    from .analysis import anomaly_study

    ens = read_ensemble(args.ensemble)
    events = _read_events(args.events)
    rep = anomaly_study(ens, events, args.features, args.metric, args.subset_sizes, args.selection,
                        args.ridge if args.ridge == "auto" else float(args.ridge), args.pca_threshold)
    meta = _metadata(args)
    doc = {"metadata": meta, "meta": rep.meta, "metric": rep.metric, "features": rep.features,
           "rows": rep.reference_records(),
           "distances": [{"label": lab, "distance": float(d)} for lab, d in zip(rep.labels, rep.distances)],
           "ranking": list(rep.ranking)}
    _write_json(args.out, doc)
    csv_path = Path(args.out).with_suffix(".csv")
    _write_csv(csv_path, rep.reference_records(), meta)
    for r in rep.rows:
        print(f"s={r.subset_size}: P_T={r.p_top:.2f} P_B={r.p_bottom:.2f} OR={r.odds_ratio:.3g} p={r.fisher_p:.3g}")
    return 0


def cmd_similarity(args) -> int:
    from .analysis import similarity_study

    ens = read_ensemble(args.ensemble)
    rep = similarity_study(ens, args.selection, args.ridge if args.ridge == "auto" else float(args.ridge))
    labels = ens.labels

    def pairs(idx):
        return [{"a": labels[i], "b": labels[j]} for i, j in idx]

    doc = {"metadata": _metadata(args), "meta": rep.meta, "n_pairs": rep.n_pairs,
           "spearman": rep.spearman, "p_value": rep.p_value, "method": rep.method,
           "closest_mahalanobis": pairs(rep.closest(args.top)),
           "closest_euclidean": pairs(rep.closest(args.top, "euclidean"))}
    _write_json(args.out, doc)
    print(f"{rep.n_pairs} pairs; spearman {rep.spearman:.4f} (p={rep.p_value:.3g}, {rep.method})")
    return 0


def cmd_sample(args) -> int:
    from .moments import ModelParams
    from .sampler import SamplerConfig, date_labels, sample

    if args.fit:
        params, _, _ = _params_from_fit(args.fit)
    else:
        params = ModelParams.from_inverse(args.mu_tilde, *args.inv_tau)
    cfg = SamplerConfig(params, args.D, args.n, args.seed)
    labels = date_labels(args.n, args.start_date) if args.start_date else None
    ens = sample(cfg, labels)
    meta = _metadata(args)
    write_ensemble(ens, args.out, {"metadata": meta})
    _write_json(str(args.out) + ".meta.json", {"metadata": meta, "config": cfg.metadata()})
    print(f"wrote {ens.size} sampled matrices of dim {ens.dim} to {args.out}")
    return 0


def cmd_selftest(args) -> int:
    from .selfcheck import run_selfchecks

    failures = run_selfchecks(dims=args.dims, seed=args.seed, stream=sys.stdout)
    return 1 if failures else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pigm", description="Permutation-invariant Gaussian matrix model toolkit.",
                                epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"pigm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_, epilog=FORMATS,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(func=func)
        return sp

    def selection(sp, default):
        sp.add_argument("--selection", default=default,
                        help="preset (all, cubic_quartic, cubic, quartic, linear_quadratic, anomaly12) "
                             "or comma-separated ids")

    def sigma(sp):
        sp.add_argument("--sigma-method", default="exact", choices=("exact", "coupling_shift", "reference"))
        sp.add_argument("--sigma-params", type=lambda s: _floats(s, 3), default=None,
                        help="shifts of the three inverse couplings for coupling_shift")

    sp = add("ingest", cmd_ingest, "build daily correlation matrices from tick files")
    sp.add_argument("--ticks", nargs="+", required=True)
    sp.add_argument("--pairs")
    sp.add_argument("--calendar")
    sp.add_argument("--interval", type=int, choices=(1, 5, 10, 15, 30, 60))
    sp.add_argument("--max-bad-rows", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("observables", cmd_observables, "evaluate observables on every matrix")
    sp.add_argument("--ensemble", required=True)
    selection(sp, "all")
    sp.add_argument("--out", required=True)

    sp = add("fit", cmd_fit, "moment-match the four couplings")
    sp.add_argument("--ensemble", required=True)
    sp.add_argument("--out", required=True)

    sp = add("predict", cmd_predict, "predicted means and sigmas")
    sp.add_argument("--fit", required=True)
    sp.add_argument("--D", type=int)
    selection(sp, "cubic_quartic")
    sigma(sp)
    sp.add_argument("--budget", type=float, default=1e12, help="flop budget for exact sigma")
    sp.add_argument("--out", required=True)

    sp = add("report", cmd_report, "deviation, day-capture and balanced-accuracy reports")
    sp.add_argument("--ensemble", required=True)
    sp.add_argument("--fit", required=True)
    sp.add_argument("--predict")
    selection(sp, "cubic_quartic")
    sigma(sp)
    sp.add_argument("--k-sigma", type=float, default=2.0)
    sp.add_argument("--bootstrap", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", required=True)

    sp = add("anomaly", cmd_anomaly, "rank days by distance and test event enrichment")
    sp.add_argument("--ensemble", required=True)
    sp.add_argument("--events", required=True)
    sp.add_argument("--features", default="observables", choices=("observables", "raw", "pca"))
    sp.add_argument("--metric", default="mahalanobis", choices=("mahalanobis", "euclidean_standardized"))
    selection(sp, "anomaly12")
    sp.add_argument("--subset-sizes", type=_ints, default=[25, 50, 100])
    sp.add_argument("--ridge", default="auto")
    sp.add_argument("--pca-threshold", type=float, default=0.70)
    sp.add_argument("--out", required=True)

    sp = add("similarity", cmd_similarity, "pairwise day similarity and rank agreement")
    sp.add_argument("--ensemble", required=True)
    selection(sp, "anomaly12")
    sp.add_argument("--ridge", default="auto")
    sp.add_argument("--top", type=int, default=10)
    sp.add_argument("--out", required=True)

    sp = add("sample", cmd_sample, "draw matrices from the model")
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--mu-tilde", type=float, default=0.0)
    sp.add_argument("--inv-tau", type=lambda s: _floats(s, 3), default=[1.0, 1.0, 1.0],
                    help="inverse couplings v0,vh,v2")
    sp.add_argument("--fit", help="take couplings from a fit JSON instead")
    sp.add_argument("--start-date", help="label matrices with consecutive ISO dates from this day")
    sp.add_argument("--out", required=True)

    sp = add("selftest", cmd_selftest, "run the built-in invariant checks")
    sp.add_argument("--dims", type=_ints, default=[4, 6, 8])
    sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, EnsembleError, ValueError, KeyError, OSError) as exc:
        print(f"pigm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
