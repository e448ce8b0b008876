import json

from biokey.cli import main


def test_cli_synth_extract_rank_eval_template_bench(tmp_path, capsys):
    data = tmp_path / "data"
    rc = main([
        "synth", "--out", str(data), "--subjects", "3", "--sessions", "1",
        "--trials", "6", "--seed", "5",
    ])
    assert rc == 0
    assert (data / "manifest.json").exists()

    feats = tmp_path / "features"
    assert main(["extract", "--data", str(data), "--out", str(feats), "--seed", "5"]) == 0
    assert (feats / "eeg_features.csv").exists()
    assert (feats / "key_features.csv").exists()

    rankdir = tmp_path / "rank"
    rc = main([
        "rank", "--features", str(feats / "key_features.csv"), "--out", str(rankdir),
        "--trees", "20", "--seed", "5",
    ])
    assert rc == 0
    ranking = json.loads((rankdir / "ranking.json").read_text())
    assert len(ranking["ranked"]) >= 1

    evaldir = tmp_path / "eval"
    rc = main([
        "eval", "--data", str(data), "--out", str(evaldir), "--modality", "key",
        "--folds", "3", "--trees", "15", "--seed", "5",
    ])
    assert rc == 0
    report = json.loads((evaldir / "report.json").read_text())
    assert 0.0 <= report["accuracy"] <= 1.0
    assert (evaldir / "confusion.tsv").exists()

    tdir = tmp_path / "template"
    rc = main([
        "template", "--data", str(data), "--out", str(tdir), "--modality", "key",
        "--folds", "3", "--seed", "5",
    ])
    assert rc == 0
    summary = json.loads((tdir / "template_summary.json").read_text())
    assert 0.0 <= summary["rank1"] <= 1.0
    assert (tdir / "cmc.tsv").exists() and (tdir / "far_frr.tsv").exists()

    bench = tmp_path / "bench.json"
    rc = main([
        "bench", "--data", str(data), "--out", str(bench), "--modality", "key",
        "--trees", "20", "--queries", "50", "--seed", "5",
    ])
    assert rc == 0
    assert json.loads(bench.read_text())["n_queries"] == 50

    # eval --method template runs the matching evaluation instead of CV
    tm = tmp_path / "eval_template"
    rc = main([
        "eval", "--data", str(data), "--out", str(tm), "--modality", "key",
        "--method", "template", "--folds", "3", "--seed", "5",
    ])
    assert rc == 0
    payload = json.loads((tm / "report.json").read_text())
    assert payload["kind"] == "template"
    assert len(payload["cmc"]) == 3


def test_cli_train_writes_model(tmp_path):
    data = tmp_path / "data"
    assert main([
        "synth", "--out", str(data), "--subjects", "2", "--sessions", "1",
        "--trials", "4", "--seed", "6",
    ]) == 0
    model = tmp_path / "model.json"
    rc = main([
        "train", "--data", str(data), "--out", str(model), "--modality", "key",
        "--trees", "10", "--seed", "6",
    ])
    assert rc == 0
    payload = json.loads(model.read_text())
    assert payload["format"] == "biokey-forest-v1"
    assert len(payload["trees"]) == 10
    assert "norm_stats" in payload


def test_cli_error_is_clean(tmp_path, capsys):
    rc = main(["extract", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
