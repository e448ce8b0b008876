import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from biokey import dataio
from biokey.errors import FormatError, IntegrityError, ParameterError


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def _csv_lines(n, marker_rows):
    lines = [dataio.CSV_HEADER]
    for i in range(n):
        mk = marker_rows.get(i, 0)
        lines.append(f"{i / 128.0:.6f},0.1,0.2,0.3,0.4,0.5,{mk}")
    return "\n".join(lines) + "\n"


def test_load_recording_two_trials(tmp_path):
    text = _csv_lines(400, {10: 1, 100: 2, 150: 1, 300: 2})
    rec = dataio.load_recording(_write(tmp_path / "r.csv", text))
    assert rec.n_trials == 2
    assert rec.marker_pairs() == [(10, 100), (150, 300)]
    assert rec.samples.shape == (400, 5)


def test_load_recording_unpaired_marker(tmp_path):
    text = _csv_lines(400, {10: 1})
    with pytest.raises(IntegrityError):
        dataio.load_recording(_write(tmp_path / "r.csv", text))


def test_load_recording_missing_column(tmp_path):
    lines = [dataio.CSV_HEADER, "0.0,1,2,3,4,5"]  # 6 columns only
    with pytest.raises(FormatError):
        dataio.load_recording(_write(tmp_path / "r.csv", "\n".join(lines) + "\n"))


def test_load_recording_bad_header(tmp_path):
    with pytest.raises(FormatError):
        dataio.load_recording(_write(tmp_path / "r.csv", "a,b,c\n0,0,0\n"))


def test_load_recording_non_monotone_time(tmp_path):
    lines = [
        dataio.CSV_HEADER,
        "0.000000,0,0,0,0,0,0",
        "0.007813,0,0,0,0,0,0",
        "0.005000,0,0,0,0,0,0",
    ]
    with pytest.raises(IntegrityError):
        dataio.load_recording(_write(tmp_path / "r.csv", "\n".join(lines) + "\n"))


def test_load_keystrokes_round(tmp_path):
    events = []
    for i, key in enumerate("abcdefghijkl"):
        events.append({"key": key, "action": "down", "t_ms": i * 200.0})
        events.append({"key": key, "action": "up", "t_ms": i * 200.0 + 90.0})
    text = "\n".join(json.dumps(e) for e in events) + "\n"
    got = dataio.load_keystrokes(_write(tmp_path / "k.jsonl", text))
    assert len(got) == 24
    assert len(dataio.validate_key_pairing(got)) == 12


def test_load_keystrokes_bad_action(tmp_path):
    text = json.dumps({"key": "a", "action": "press", "t_ms": 0.0}) + "\n"
    with pytest.raises(FormatError):
        dataio.load_keystrokes(_write(tmp_path / "k.jsonl", text))


def test_load_keystrokes_duplicate_down(tmp_path):
    rows = [
        {"key": "a", "action": "down", "t_ms": 0.0},
        {"key": "a", "action": "down", "t_ms": 5.0},
        {"key": "a", "action": "up", "t_ms": 10.0},
    ]
    text = "\n".join(json.dumps(r) for r in rows) + "\n"
    with pytest.raises(IntegrityError):
        dataio.load_keystrokes(_write(tmp_path / "k.jsonl", text))


def test_load_keystrokes_up_without_down(tmp_path):
    text = json.dumps({"key": "a", "action": "up", "t_ms": 1.0}) + "\n"
    with pytest.raises(IntegrityError):
        dataio.load_keystrokes(_write(tmp_path / "k.jsonl", text))


# ---------------------------------------------------------------------------
# feature matrix round trip

def test_feature_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    m = dataio.FeatureMatrix(
        ["a", "b", "c", "d", "e"],
        rng.standard_normal((3, 5)) * 1e-7,
        np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]]),
    )
    dataio.write_feature_matrix(m, tmp_path / "m.csv")
    back = dataio.read_feature_matrix(tmp_path / "m.csv")
    assert back.feature_names == m.feature_names
    assert np.array_equal(back.rows, m.rows)  # repr round trip is exact
    assert np.array_equal(back.labels, m.labels)


def test_feature_matrix_duplicate_names():
    with pytest.raises(FormatError):
        dataio.FeatureMatrix(["mean_AF3", "mean_AF3"], np.zeros((1, 2)), np.zeros((1, 3)))


def test_feature_matrix_empty_round_trip(tmp_path):
    m = dataio.FeatureMatrix(["a", "b"], np.zeros((0, 2)), np.zeros((0, 3)))
    dataio.write_feature_matrix(m, tmp_path / "m.csv")
    back = dataio.read_feature_matrix(tmp_path / "m.csv")
    assert back.rows.shape == (0, 2)
    assert back.feature_names == ["a", "b"]


# ---------------------------------------------------------------------------
# synthetic generator

def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_synth_small_dataset_counts_and_determinism(tmp_path):
    manifest = dataio.DatasetManifest(subjects=2, sessions=1, trials_per_session=5, seed=7)
    d1 = dataio.synth_dataset(manifest, tmp_path / "d1")
    d2 = dataio.synth_dataset(manifest, tmp_path / "d2")
    trials = dataio.iter_dataset(d1)
    assert len(trials) == 10
    assert _tree_digest(d1) == _tree_digest(d2)


def test_synth_subjects_have_distinct_hold_profiles(tmp_path):
    manifest = dataio.DatasetManifest(subjects=2, sessions=1, trials_per_session=5, seed=7)
    root = dataio.synth_dataset(manifest, tmp_path / "d")
    from biokey.features import timing_intervals

    per_subject = {1: [], 2: []}
    for subject, _, _, _, jsonl in dataio.iter_dataset(root):
        events = dataio.load_keystrokes(jsonl)
        per_subject[subject].append(timing_intervals(events)["hold"])
    m1 = np.mean(per_subject[1], axis=0)
    m2 = np.mean(per_subject[2], axis=0)
    assert np.mean(np.abs(m1 - m2)) > 0.0


def test_synth_trials_load_and_validate(tmp_path):
    manifest = dataio.DatasetManifest(subjects=2, sessions=2, trials_per_session=2, seed=3)
    root = dataio.synth_dataset(manifest, tmp_path / "d")
    for subject, session, trial, csv_path, jsonl in dataio.iter_dataset(root):
        rec = dataio.load_recording(csv_path)
        events = dataio.load_keystrokes(jsonl)
        assert rec.n_trials == 1
        assert len(events) == 24
        start, end = rec.marker_pairs()[0]
        assert end - start >= 10
        # all key events land inside the marker window
        t0 = start / rec.sample_rate_hz * 1000.0
        t1 = end / rec.sample_rate_hz * 1000.0
        assert all(t0 <= e.t_ms < t1 for e in events)


def test_synth_full_paper_scale_count(tmp_path):
    manifest = dataio.DatasetManifest(subjects=10, sessions=10, trials_per_session=50, seed=42)
    root = dataio.synth_dataset(manifest, tmp_path / "full")
    assert len(dataio.iter_dataset(root)) == 5000


def test_manifest_validation():
    with pytest.raises(ParameterError):
        dataio.DatasetManifest(subjects=1, sessions=1, trials_per_session=1)
    with pytest.raises(ParameterError):
        dataio.DatasetManifest(subjects=2, sessions=1, trials_per_session=1, password_keys=("a",))


def test_manifest_round_trip(tmp_path):
    manifest = dataio.DatasetManifest(subjects=3, sessions=2, trials_per_session=4, seed=9)
    root = dataio.synth_dataset(manifest, tmp_path / "d")
    assert dataio.load_manifest(root) == manifest
