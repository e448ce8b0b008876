"""Acceptance gate: one test per criterion, each printing a PASS line with
the measured numbers (run with `pytest tests/test_acceptance.py -v -s`).

The reference dataset is the seeded synthetic one (10 subjects, 4 sessions,
15 trials, seed 42) shared through the session fixture.
"""

import math
import time

import numpy as np
import pytest

from biokey import augment, dataio, learn, matcher, pipeline, select
from biokey.features import (
    minmax_normalize,
    spectral_features,
    time_features,
    wavelet_features,
)

import oracles

FS = 128.0


def _report(name: str, detail: str):
    print(f"\n[ACCEPT] {name}: PASS ({detail})")


# ---------------------------------------------------------------------------
# C01 feature oracle suite

def _oracle_spectral(x: np.ndarray) -> dict:
    """Bin-by-bin recomputation of the spectral features from a periodogram."""
    spec = np.fft.rfft(x)
    amps = [abs(complex(v)) for v in spec]
    powers = [a * a for a in amps]
    freqs = [k * FS / x.size for k in range(len(amps))]
    total = sum(powers)
    sen = 0.0
    for p in powers:
        q = p / total
        if q > 0:
            sen -= q * math.log2(q)
    sen /= math.log2(len(powers))
    peaks = [
        (-amps[k], k)
        for k in range(1, len(amps) - 1)
        if amps[k] > amps[k - 1] and amps[k] > amps[k + 1]
    ]
    peaks.sort()
    if len(peaks) >= 2:
        k2 = peaks[1][1]
    else:
        k2 = sorted((-a, k) for k, a in enumerate(amps))[1][1]
    m2f_hz, m2f_amp = freqs[k2], amps[k2]
    num = sum(
        p for f, p in zip(freqs, powers)
        if m2f_hz - 5.0 <= f <= m2f_hz + 5.0 and f < 63.0
    )
    den = sum(p for f, p in zip(freqs, powers) if f < 63.0)
    out = {
        "spectral_entropy": sen,
        "m2f_hz": m2f_hz,
        "m2f_amp": m2f_amp,
        "m2f_rel_energy": num / den,
    }
    for name, lo, hi in [
        ("bp_delta", 0.0, 4.0), ("bp_theta", 4.0, 7.0), ("bp_alpha", 7.0, 13.0),
        ("bp_beta", 13.0, 30.0), ("bp_gamma", 30.0, 63.0), ("bp_raw", 0.0, 63.0),
    ]:
        out[name] = sum(p for f, p in zip(freqs, powers) if lo <= f < hi)
    return out


def _close(a, b, rel, abs_tol=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_tol)


def test_c01_feature_oracle_suite():
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    tight = {"mean", "median", "std", "mad", "p25", "p75", "iqr", "shannon_entropy"}
    for i in range(100):
        x = rng.standard_normal(1024) * rng.uniform(0.5, 3.0) + rng.uniform(-2, 2)
        xs = list(x)
        tvals, _ = time_features(x)
        expected_time = {
            "mean": oracles.mean(xs), "median": oracles.median(xs),
            "std": oracles.std_n_minus_1(xs), "mad": oracles.mad(xs),
            "p25": oracles.rank_percentile(xs, 25), "p75": oracles.rank_percentile(xs, 75),
            "iqr": oracles.iqr(xs), "skewness": oracles.skewness(xs),
            "kurtosis": oracles.kurtosis_excess(xs),
            "hjorth_activity": oracles.hjorth_activity(xs),
            "hjorth_mobility": oracles.hjorth_mobility(xs),
            "hjorth_complexity": oracles.hjorth_complexity(xs),
            "shannon_entropy": oracles.shannon_entropy_64bins(xs),
        }
        for name, want in expected_time.items():
            rel = 1e-12 if name in tight else 1e-9
            assert _close(tvals[name], want, rel), (i, name, tvals[name], want)
        svals, _ = spectral_features(x, FS)
        expected_spec = _oracle_spectral(x)
        for name, want in expected_spec.items():
            assert _close(svals[name], want, 1e-9), (i, name, svals[name], want)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"oracle suite took {elapsed:.1f}s"
    _report("C01 feature-oracle-suite", f"100 signals, 23 features each, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# C02 wavelet Parseval

def test_c02_wavelet_parseval():
    rng = np.random.default_rng(1002)
    worst = 0.0
    for _ in range(50):
        x = rng.standard_normal(1024) * rng.uniform(0.2, 5.0)
        bands = wavelet_features(x, "wpt18")
        total_power = float(np.sum(x ** 2)) / 1024.0
        rel = abs(sum(bands.values()) - total_power) / total_power
        worst = max(worst, rel)
        assert rel <= 1e-6
    _report("C02 wavelet-parseval", f"50 signals, worst relative error {worst:.2e}")


# ---------------------------------------------------------------------------
# C03 keystroke identity

def test_c03_keystroke_identity_exact(acceptance_bundle):
    d = dict(zip(acceptance_bundle.key.feature_names, range(45)))
    rows = acceptance_bundle.key.rows
    for i in range(1, 12):
        dd = rows[:, d[f"downdown_{i}"]]
        ud = rows[:, d[f"updown_{i}"]]
        h = rows[:, d[f"hold_{i}"]]
        assert np.array_equal(dd, ud + h), f"DD != UD + H at position {i}"
    _report("C03 keystroke-identity", f"DD=UD+H bitwise on {rows.shape[0]} trials x 11 digraphs")


# ---------------------------------------------------------------------------
# C04 gini importance exact recomputation

def _bruteforce_importance(forest) -> np.ndarray:
    totals = np.zeros(forest.n_features_)
    for tree in forest.trees:
        n_root = tree.counts[0].sum()
        for node in range(tree.n_nodes):
            f = int(tree.feature[node])
            if f < 0:
                continue
            counts_m = tree.counts[node]
            n_m = counts_m.sum()
            acc = oracles.gini_impurity(list(counts_m))
            for child in (int(tree.left[node]), int(tree.right[node])):
                cc = tree.counts[child]
                acc -= (cc.sum() / n_m) * oracles.gini_impurity(list(cc))
            totals[f] += (n_m / n_root) * acc
    totals /= len(forest.trees)
    if totals.sum() > 0:
        totals = totals / totals.sum()
    return totals


def test_c04_gini_importance_exact():
    rng = np.random.default_rng(1004)
    for trial in range(20):
        n = int(rng.integers(20, 101))
        d = int(rng.integers(3, 12))
        X = rng.standard_normal((n, d))
        y = (X[:, 0] - 0.7 * X[:, min(1, d - 1)] + 0.5 * rng.standard_normal(n) > 0).astype(int)
        spec = learn.ModelSpec(kind="forest", n_trees=int(rng.integers(1, 6)), seed=2000 + trial)
        forest = learn.fit(spec, X, y)
        forest.feature_names = [f"f{k}" for k in range(d)]
        got = np.zeros(d)
        for name, v in select.gini_importance(forest).ranked:
            got[int(name[1:])] = v
        assert np.array_equal(got, _bruteforce_importance(forest)), f"forest {trial}"
    _report("C04 gini-importance-exact", "20 random forests, bit-identical recomputation")


# ---------------------------------------------------------------------------
# C05 augmentation properties

def test_c05_augmentation_properties():
    rng = np.random.default_rng(1005)
    X = np.vstack([rng.standard_normal((8, 5)), rng.standard_normal((40, 5)) + 2.0])
    y = np.array([1] * 8 + [0] * 40)
    for method in ("smote", "adasyn"):
        fn = augment.smote if method == "smote" else augment.adasyn
        Xa, ya = fn(X, y, 1, target_count=40, k=5, seed=7)
        Xb, yb = fn(X, y, 1, target_count=40, k=5, seed=7)
        assert np.array_equal(Xa, Xb) and np.array_equal(ya, yb), "determinism"
        assert (ya == 1).sum() == 40, "exact balance"
        assert np.array_equal(Xa[:48], X), "non-minority rows untouched"
        minority = X[:8]
        for s in Xa[48:]:
            on_segment = False
            for i in range(8):
                for j in range(8):
                    if i == j:
                        continue
                    seg = minority[j] - minority[i]
                    denom = float(seg @ seg)
                    if denom == 0:
                        continue
                    u = float((s - minority[i]) @ seg) / denom
                    if -1e-9 <= u <= 1 + 1e-9 and np.linalg.norm(minority[i] + u * seg - s) <= 1e-9:
                        on_segment = True
            assert on_segment, f"{method} synthetic off-segment"
    trial = rng.standard_normal((5, 1024)) * 2.0
    out = augment.jitter(trial, 0.05, seed=3)
    ratio = (out - trial).std(axis=1) / trial.std(axis=1)
    assert np.all(ratio >= 0.04) and np.all(ratio <= 0.06), "jitter scale"
    assert np.array_equal(out, augment.jitter(trial, 0.05, seed=3)), "jitter determinism"
    _report("C05 augmentation-properties", "on-segment, balance, scale, determinism all hold")


# ---------------------------------------------------------------------------
# C06 fusion dominance

def test_c06_fusion_dominance(acceptance_bundle):
    t0 = time.perf_counter()
    cv = learn.CVSpec(n_folds=5, seed=42)
    spec = learn.ModelSpec(kind="forest", n_trees=150, seed=42)
    acc = {}
    for modality in ("eeg", "key", "fused"):
        acc[modality] = learn.run_identification(acceptance_bundle, modality, spec, cv).accuracy
    elapsed = time.perf_counter() - t0
    assert acc["fused"] >= max(acc["eeg"], acc["key"]) - 0.005, acc
    assert acc["fused"] >= acc["eeg"] + 0.01, acc
    assert elapsed < 300.0, f"{elapsed:.0f}s"
    _report(
        "C06 fusion-dominance",
        f"eeg={acc['eeg']:.4f} key={acc['key']:.4f} fused={acc['fused']:.4f}, {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# C07 imbalance rescue

def test_c07_imbalance_rescue(acceptance_bundle):
    cv = learn.CVSpec(n_folds=5, seed=42)
    spec = learn.ModelSpec(kind="forest", n_trees=60, seed=42)
    subjects = sorted(set(acceptance_bundle.eeg.subjects.tolist()))
    recalls = {"none": [], "smote": [], "adasyn": []}
    for subject in subjects:
        for method in recalls:
            aug = None if method == "none" else augment.AugmentSpec(method=method, seed=42)
            rep = learn.run_personalized(
                acceptance_bundle, subject, spec, cv, aug, modality="eeg"
            )
            recalls[method].append(rep.per_class[learn.GENUINE]["recall"])
    base = float(np.mean(recalls["none"]))
    sm = float(np.mean(recalls["smote"]))
    ad = float(np.mean(recalls["adasyn"]))
    assert sm >= base, (sm, base)
    assert ad >= base, (ad, base)
    _report(
        "C07 imbalance-rescue",
        f"mean genuine recall: none={base:.4f} smote={sm:.4f} adasyn={ad:.4f}",
    )


# ---------------------------------------------------------------------------
# C08 + C09: template matching on the synthetic dataset

@pytest.fixture(scope="module")
def template_split(acceptance_bundle):
    rows = np.hstack([acceptance_bundle.eeg.rows, acceptance_bundle.key.rows])
    names = list(acceptance_bundle.eeg.feature_names) + list(acceptance_bundle.key.feature_names)
    m = dataio.FeatureMatrix(names, rows, acceptance_bundle.eeg.labels.copy())
    y = m.subjects
    folds = learn.stratified_folds(y, learn.CVSpec(n_folds=5, seed=42))
    train_idx = folds.train_indices(0, y.size)
    test_idx = folds.test_folds[0]
    train_n, stats = minmax_normalize(m.select_rows(train_idx))
    probe_n, _ = minmax_normalize(m.select_rows(test_idx), stats)
    gallery = matcher.build_gallery(train_n)
    return train_n, probe_n, gallery


def test_c08_cmc_properties(template_split):
    train_n, probe_n, gallery = template_split
    mm = matcher.match_matrix(probe_n, gallery)
    curve, ranks = matcher.cmc(mm, probe_n.subjects)
    assert np.all(np.diff(curve) >= 0), "CMC must be non-decreasing"
    assert curve[-1] == 1.0, "closed-set CMC(10) must reach 1"
    assert curve.size == 10
    # probes identical to gallery samples must rank 1
    self_mm = matcher.match_matrix(train_n, gallery)
    _, self_ranks = matcher.cmc(self_mm, train_n.subjects)
    assert np.all(self_ranks == 1), "gallery samples must self-match at rank 1"
    _report(
        "C08 cmc-properties",
        f"rank1={curve[0]:.4f} rank3={curve[2]:.4f} CMC(10)={curve[-1]:.2f}",
    )


def test_c09_eer_consistency(template_split):
    _, probe_n, gallery = template_split
    mm = matcher.match_matrix(probe_n, gallery)
    order = {sid: i for i, sid in enumerate(mm.subject_order)}
    genuine, imposter = [], []
    for p, true_sid in enumerate(probe_n.subjects):
        for sid, col in order.items():
            (genuine if sid == true_sid else imposter).append(mm.distances[p, col])
    rates = matcher.far_frr_eer(genuine, imposter, bit_length=mm.bit_length)
    # integer Hamming distances tie heavily, so the reported operating point
    # lives on the interpolated curves; read both rates the same way
    far_at, frr_at = rates.rates_at(rates.eer_threshold)
    bound = 1.0 / max(len(genuine), len(imposter))
    assert abs(far_at - frr_at) <= bound, (far_at, frr_at, bound)
    assert abs(rates.eer - far_at) <= bound
    toy = matcher.far_frr_eer([0.1, 0.15, 0.2], [0.5, 0.6, 0.9])
    assert toy.eer == 0.0
    _report(
        "C09 eer-consistency",
        f"EER={rates.eer:.4f}, |FAR-FRR|={abs(far_at - frr_at):.2e} <= {bound:.2e}; toy EER=0",
    )


# ---------------------------------------------------------------------------
# C10 template speedup

def test_c10_template_speedup(template_split):
    train_n, probe_n, _ = template_split
    gallery = matcher.build_gallery(train_n)
    forest = learn.fit(
        learn.ModelSpec(kind="forest", seed=42), train_n.rows, train_n.subjects
    )  # spec defaults: 500 trees, sqrt features
    rep = matcher.benchmark(gallery, forest, probe_n, n_queries=1000)
    assert rep.n_queries >= 1000
    assert rep.template_mean_ms <= rep.classifier_mean_ms / 3.0, rep
    _report(
        "C10 template-speedup",
        f"template {rep.template_mean_ms:.3f} ms vs forest {rep.classifier_mean_ms:.2f} ms "
        f"({rep.speedup:.0f}x over {rep.n_queries} queries)",
    )


# ---------------------------------------------------------------------------
# C11 leakage suite

def test_c11_leakage_suite(acceptance_bundle):
    m = acceptance_bundle.eeg
    y = m.subjects
    folds = learn.stratified_folds(y, learn.CVSpec(n_folds=5, seed=42))
    train_idx = folds.train_indices(0, y.size)
    test_idx = folds.test_folds[0]
    sel = learn.SelectionSpec(top_k=30, rank_trees=20)

    def artifacts(matrix):
        train_n, _, chosen, stats = learn._prepare_fold_matrix(
            matrix, train_idx, test_idx, y[train_idx], sel, seed=42
        )
        model = learn.fit(
            learn.ModelSpec(kind="forest", n_trees=10, seed=42), train_n.rows, y[train_idx]
        )
        gallery = matcher.build_gallery(train_n)
        return stats, chosen, model.to_json(), gallery.thresholds

    base = artifacts(m)
    mutated_rows = m.rows.copy()
    mutated_rows[test_idx] = mutated_rows[test_idx] * -3.7 + 1e4
    mutated = dataio.FeatureMatrix(list(m.feature_names), mutated_rows, m.labels.copy())
    after = artifacts(mutated)
    assert np.array_equal(base[0][0], after[0][0]), "normalization min leaked"
    assert np.array_equal(base[0][1], after[0][1]), "normalization max leaked"
    assert base[1] == after[1], "selected columns leaked"
    assert base[2] == after[2], "fitted model leaked"
    assert np.array_equal(base[3], after[3]), "gallery thresholds leaked"
    _report(
        "C11 leakage-suite",
        "normalization, pruning/ranking, model and thresholds unchanged by test-row mutation",
    )


# ---------------------------------------------------------------------------
# C12 end-to-end determinism

def test_c12_end_to_end_determinism(tmp_path):
    manifest = dataio.DatasetManifest(subjects=5, sessions=2, trials_per_session=8, seed=42)
    outputs = []
    for run in ("run1", "run2"):
        root = dataio.synth_dataset(manifest, tmp_path / run)
        bundle = pipeline.load_bundle(root)
        cv = learn.CVSpec(n_folds=5, seed=42)
        spec = learn.ModelSpec(kind="forest", n_trees=40, seed=42)
        report = learn.run_identification(bundle, "fused", spec, cv)
        rows = np.hstack([bundle.eeg.rows, bundle.key.rows])
        names = list(bundle.eeg.feature_names) + list(bundle.key.feature_names)
        norm, _ = minmax_normalize(dataio.FeatureMatrix(names, rows, bundle.eeg.labels))
        gallery = matcher.build_gallery(norm)
        outputs.append(report.to_canonical_json() + "\n" + gallery.to_json())
    assert outputs[0] == outputs[1], "reports differ between identical-seed runs"
    _report("C12 end-to-end-determinism", f"{len(outputs[0])} canonical bytes, byte-identical")
