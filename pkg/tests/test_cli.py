import csv
import json
from pathlib import Path

import pytest

from pigm import __version__
from pigm.cli import FORMATS, main
from pigm.ensemble import read_ensemble

META_KEYS = {"tool", "version", "subcommand", "config_hash", "seed"}


def csv_metadata(path):
    meta = {}
    for line in path.read_text().splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        meta[key] = json.loads(value)
    return meta


def csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def check_json_meta(path, sub):
    doc = json.loads(path.read_text())
    assert set(doc["metadata"]) == META_KEYS
    assert doc["metadata"]["version"] == __version__ and doc["metadata"]["subcommand"] == sub
    return doc


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    data_dir = Path(__file__).parent / "data"
    out = tmp_path_factory.mktemp("pipe")
    ens = out / "ens.csv"
    assert main(["ingest", "--ticks", str(data_dir / "ticks_pipeline.csv"), "--out", str(ens)]) == 0
    assert main(["fit", "--ensemble", str(ens), "--out", str(out / "fit.json")]) == 0
    assert main(["predict", "--fit", str(out / "fit.json"), "--out", str(out / "pred.json")]) == 0
    assert main(["report", "--ensemble", str(ens), "--fit", str(out / "fit.json"),
                 "--predict", str(out / "pred.json"), "--bootstrap", "100", "--out-dir", str(out / "rep")]) == 0
    return out


def test_selftest_passes(capsys):
    assert main(["selftest", "--dims", "4,5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 8 and all(l.endswith(": ok") for l in lines)


def test_sample_is_byte_identical(tmp_path):
    args = ["sample", "--D", "6", "--n", "20", "--seed", "7", "--mu-tilde", "0.3", "--inv-tau", "0.5,0.2,0.1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    side = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert side["metadata"]["seed"] == 7 and set(side["metadata"]) == META_KEYS
    e = read_ensemble(a)
    assert e.size == 20 and e.dim == 6
    c = tmp_path / "c.csv"
    main(args[:6] + ["8"] + args[7:] + ["--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_pipeline_outputs(pipeline):
    ens = read_ensemble(pipeline / "ens.csv")
    assert ens.dim == 5 and ens.size == 26 and "2021-12-10" not in ens.labels
    fit = check_json_meta(pipeline / "fit.json", "fit")
    assert fit["fit"]["dim"] == 5 and len(fit["coupling_sigmas"]) == 3
    pred = check_json_meta(pipeline / "pred.json", "predict")
    assert pred["dim"] == 5 and len(pred["observables"]) == 31
    dev = check_json_meta(pipeline / "rep" / "deviation.json", "report")
    assert len(dev["rows"]) == 31
    assert len(csv_rows(pipeline / "rep" / "deviation.csv")) == 31
    check_json_meta(pipeline / "rep" / "capture.json", "report")
    for name in ("deviation.csv", "capture.csv", "deviation_reference_columns.csv"):
        meta = csv_metadata(pipeline / "rep" / name)
        assert set(meta) >= META_KEYS and meta["seed"] == 0


def test_predict_matches_report_theory(pipeline):
    pred = {o["id"]: o for o in json.loads((pipeline / "pred.json").read_text())["observables"]}
    rows = {r["id"]: r for r in json.loads((pipeline / "rep" / "deviation.json").read_text())["rows"]}
    for oid, o in pred.items():
        assert rows[oid]["th_mean"] == pytest.approx(o["expectation"])
        assert rows[oid]["sigma_T"] == pytest.approx(o["sigma_T"])


def test_observables_anomaly_similarity(pipeline, tmp_path):
    ens = str(pipeline / "ens.csv")
    assert main(["observables", "--ensemble", ens, "--out", str(tmp_path / "obs.csv")]) == 0
    rows = csv_rows(tmp_path / "obs.csv")
    assert len(rows) == 26
    labels = [r["label"] for r in rows]
    events = tmp_path / "events.json"
    events.write_text(json.dumps(labels[:6]))
    assert main(["anomaly", "--ensemble", ens, "--events", str(events), "--subset-sizes", "5,10",
                 "--out", str(tmp_path / "anom.json")]) == 0
    doc = check_json_meta(tmp_path / "anom.json", "anomaly")
    assert [r["subset_size"] for r in doc["rows"]] == [5, 10]
    ev_csv = tmp_path / "events.csv"
    ev_csv.write_text("date\n" + "\n".join(labels[:6]) + "\n")
    assert main(["anomaly", "--ensemble", ens, "--events", str(ev_csv), "--subset-sizes", "5",
                 "--metric", "euclidean_standardized", "--out", str(tmp_path / "anom2.json")]) == 0
    assert main(["similarity", "--ensemble", ens, "--top", "3", "--out", str(tmp_path / "sim.json")]) == 0
    sim = check_json_meta(tmp_path / "sim.json", "similarity")
    assert sim["n_pairs"] == 26 * 25 // 2


def test_exit_codes(tmp_path, capsys):
    assert main(["no-such-command"]) == 2
    assert main(["sample", "--D", "6"]) == 2
    assert main(["fit", "--ensemble", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "f.json")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("# dim: 4\nlabel,i,j,value\nx,0,9,1.0\n")
    assert main(["fit", "--ensemble", str(bad), "--out", str(tmp_path / "f.json")]) == 1
    assert main(["sample", "--D", "2", "--n", "3", "--seed", "1", "--out", str(tmp_path / "s.csv")]) == 1
    err = capsys.readouterr().err
    assert "error" in err.lower()


def test_help_documents_formats(capsys):
    assert main(["report", "--help"]) == 0
    out = capsys.readouterr().out
    assert "ensemble CSV" in out and "predict JSON" in out
    assert "tick CSV" in FORMATS


def test_config_hash_tracks_arguments(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["sample", "--D", "5", "--n", "3", "--seed", "1", "--out", str(a)])
    main(["sample", "--D", "5", "--n", "3", "--seed", "1", "--out", str(b)])
    ha = json.loads((tmp_path / "a.csv.meta.json").read_text())["metadata"]["config_hash"]
    hb = json.loads((tmp_path / "b.csv.meta.json").read_text())["metadata"]["config_hash"]
    assert ha == hb
    main(["sample", "--D", "5", "--n", "4", "--seed", "1", "--out", str(b)])
    assert json.loads((tmp_path / "b.csv.meta.json").read_text())["metadata"]["config_hash"] != ha
