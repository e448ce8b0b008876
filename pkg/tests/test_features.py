import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biokey import features
from biokey.dataio import KeyEvent
from biokey.errors import IntegrityError, ParameterError

import oracles

FS = 128.0
T = np.arange(1024) / FS


# ---------------------------------------------------------------------------
# time features

def test_time_features_on_small_sample():
    vals, flags = features.time_features(np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
    assert vals["mean"] == 3.0
    assert vals["median"] == 3.0
    assert vals["std"] == pytest.approx(np.sqrt(2.5), rel=1e-12)
    assert vals["mad"] == pytest.approx(1.2, rel=1e-12)
    # rank rule: r25 = 1.25 -> element 2; r75 = 3.75 -> element 4
    assert vals["p25"] == 2.0
    assert vals["p75"] == 4.0
    assert vals["iqr"] == 2.0
    assert vals["skewness"] == 0.0
    assert vals["kurtosis"] == pytest.approx(-1.912, abs=1e-12)
    # a ramp's first difference is constant: mobility is exactly 0 and
    # complexity is 0/0-undefined, which must be flagged
    assert vals["hjorth_mobility"] == 0.0
    assert flags == ["degenerate_derivative"]


def test_time_features_match_bruteforce_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = rng.standard_normal(257)
        xs = list(x)
        vals, _ = features.time_features(x)
        assert vals["mean"] == pytest.approx(oracles.mean(xs), rel=1e-12)
        assert vals["median"] == pytest.approx(oracles.median(xs), rel=1e-12)
        assert vals["std"] == pytest.approx(oracles.std_n_minus_1(xs), rel=1e-12)
        assert vals["mad"] == pytest.approx(oracles.mad(xs), rel=1e-12)
        assert vals["p25"] == pytest.approx(oracles.rank_percentile(xs, 25), rel=1e-12)
        assert vals["p75"] == pytest.approx(oracles.rank_percentile(xs, 75), rel=1e-12)
        assert vals["iqr"] == pytest.approx(oracles.iqr(xs), rel=1e-12)
        assert vals["skewness"] == pytest.approx(oracles.skewness(xs), rel=1e-9)
        assert vals["kurtosis"] == pytest.approx(oracles.kurtosis_excess(xs), rel=1e-9)
        assert vals["hjorth_activity"] == pytest.approx(oracles.hjorth_activity(xs), rel=1e-9)
        assert vals["hjorth_mobility"] == pytest.approx(oracles.hjorth_mobility(xs), rel=1e-9)
        assert vals["hjorth_complexity"] == pytest.approx(
            oracles.hjorth_complexity(xs), rel=1e-9
        )
        assert vals["shannon_entropy"] == pytest.approx(
            oracles.shannon_entropy_64bins(xs), rel=1e-12
        )


def test_hjorth_mobility_of_sinusoid_matches_oracle():
    x = np.sin(2 * np.pi * 8.0 * T)
    vals, _ = features.time_features(x)
    assert vals["hjorth_mobility"] == pytest.approx(oracles.hjorth_mobility(list(x)), rel=1e-9)


def test_constant_signal_degenerates_with_flag():
    vals, flags = features.time_features(np.full(100, 3.3))
    assert vals["hjorth_mobility"] == 0.0
    assert vals["hjorth_complexity"] == 0.0
    assert vals["skewness"] == 0.0
    assert vals["kurtosis"] == 0.0
    assert vals["shannon_entropy"] == 0.0
    assert "constant_signal" in flags
    assert np.all(np.isfinite(list(vals.values())))


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=16, max_size=64),
    st.floats(-50, 50),
)
def test_shift_equivariance(xs, c):
    x = np.array(xs)
    a, _ = features.time_features(x)
    b, _ = features.time_features(x + c)
    assert b["mean"] == pytest.approx(a["mean"] + c, abs=1e-7)
    assert b["median"] == pytest.approx(a["median"] + c, abs=1e-7)
    for key in ["std", "mad", "iqr", "hjorth_mobility", "hjorth_complexity"]:
        assert b[key] == pytest.approx(a[key], abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=16, max_size=64))
def test_sign_antisymmetry(xs):
    x = np.array(xs)
    a, _ = features.time_features(x)
    b, _ = features.time_features(-x)
    assert b["skewness"] == pytest.approx(-a["skewness"], abs=1e-7)
    assert b["kurtosis"] == pytest.approx(a["kurtosis"], abs=1e-7)


def test_entropy_ranges():
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.standard_normal(1024)
        tvals, _ = features.time_features(x)
        svals, _ = features.spectral_features(x, FS)
        assert 0.0 <= tvals["shannon_entropy"] <= 6.0
        assert 0.0 <= svals["spectral_entropy"] <= 1.0


# ---------------------------------------------------------------------------
# spectral features

def test_pure_alpha_tone_dominates_alpha_band():
    x = np.sin(2 * np.pi * 10.0 * T)
    vals, _ = features.spectral_features(x, FS)
    assert vals["bp_alpha"] / vals["bp_raw"] >= 0.95
    amp_max = np.abs(np.fft.rfft(x)).max()
    assert vals["m2f_amp"] <= 0.05 * amp_max


def test_white_noise_spectral_entropy_high():
    x = np.random.default_rng(1).standard_normal(1024)
    vals, _ = features.spectral_features(x, FS)
    assert vals["spectral_entropy"] >= 0.9
    assert vals["spectral_entropy"] == pytest.approx(oracles.spectral_entropy(list(x)), rel=1e-9)


def test_two_tone_second_peak():
    x = np.sin(2 * np.pi * 10.0 * T) + 0.5 * np.sin(2 * np.pi * 20.0 * T)
    vals, _ = features.spectral_features(x, FS)
    bin_hz = FS / 1024
    f_oracle, a_oracle = oracles.second_peak(list(x), FS)
    assert abs(vals["m2f_hz"] - 20.0) <= bin_hz
    assert vals["m2f_hz"] == pytest.approx(f_oracle, rel=1e-9)
    assert vals["m2f_amp"] == pytest.approx(a_oracle, rel=1e-9)
    assert vals["m2f_rel_energy"] == pytest.approx(
        oracles.m2f_relative_energy(list(x), FS), rel=1e-9
    )


def test_band_powers_match_oracle_and_partition():
    x = np.random.default_rng(5).standard_normal(256)
    vals, _ = features.spectral_features(x, FS)
    for name, lo, hi in features.BAND_EDGES_HZ:
        assert vals[name] == pytest.approx(oracles.band_power(list(x), FS, lo, hi), rel=1e-9)
    named_sum = sum(vals[name] for name, _, _ in features.BAND_EDGES_HZ)
    assert named_sum == pytest.approx(vals["bp_raw"], rel=1e-9)


def test_zero_signal_spectral_flagged():
    vals, flags = features.spectral_features(np.zeros(256), FS)
    assert vals["spectral_entropy"] == 0.0
    assert "zero_signal" in flags


# ---------------------------------------------------------------------------
# wavelet features

def test_wavelet_zero_signal():
    vals = features.wavelet_features(np.zeros(1024))
    assert all(v == 0.0 for v in vals.values())


def test_wavelet_parseval_white_noise():
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = rng.standard_normal(1024)
        vals = features.wavelet_features(x)
        total_power = float(np.sum(x ** 2)) / 1024.0
        assert sum(vals.values()) == pytest.approx(total_power, rel=1e-6)


def test_wavelet_alpha_tone_band():
    x = np.sin(2 * np.pi * 10.0 * T)
    vals = features.wavelet_features(x)
    assert max(vals, key=vals.get) == "W5"  # 8-12 Hz leaf


def test_wavelet_nonnegative_and_named():
    x = np.random.default_rng(2).standard_normal(1024)
    wpt = features.wavelet_features(x, "wpt18")
    assert list(wpt) == [f"W{i}" for i in range(1, 19)]
    assert all(v >= 0 for v in wpt.values())
    dwt = features.wavelet_features(x, "dwt7")
    assert list(dwt) == ["cA6", "cD6", "cD5", "cD4", "cD3", "cD2", "cD1"]


def test_wavelet_wrong_length():
    with pytest.raises(ParameterError):
        features.wavelet_features(np.zeros(1000))


# ---------------------------------------------------------------------------
# smat + full vector

def test_smat_values():
    assert features.smat(np.ones((5, 1024))) == 5.0
    assert features.smat(np.zeros((5, 1024))) == 0.0
    trial = np.vstack([c * np.ones(1024) for c in range(1, 6)])
    assert features.smat(trial) == 15.0


def test_eeg_feature_vector_contract():
    rng = np.random.default_rng(4)
    trial = rng.standard_normal((5, 1024))
    fv = features.eeg_feature_vector(trial)
    assert len(fv.names) == 206
    assert len(set(fv.names)) == 206
    fv2 = features.eeg_feature_vector(trial)
    assert np.array_equal(fv.values, fv2.values)
    fv7 = features.eeg_feature_vector(trial, scheme="dwt7")
    assert len(fv7.names) == 5 * 30 + 1 == 151


# ---------------------------------------------------------------------------
# keystroke features

def _pairs(times):
    """times: list of (key, down_ms, up_ms)."""
    evs = []
    for key, d, u in times:
        evs.append(KeyEvent(key, "down", float(d)))
        evs.append(KeyEvent(key, "up", float(u)))
    return evs


def test_three_key_toy_intervals():
    evs = _pairs([("a", 0, 100), ("b", 150, 260), ("c", 240, 330)])
    iv = features.timing_intervals(evs)
    assert list(iv["hold"]) == [100.0, 110.0, 90.0]
    assert list(iv["downdown"]) == [150.0, 90.0]
    assert list(iv["upup"]) == [160.0, 70.0]
    assert list(iv["updown"]) == [50.0, -20.0]


def test_uniform_cadence_trial():
    evs = _pairs([(f"k{i}", i * 200, i * 200 + 100) for i in range(12)])
    fv = features.keystroke_features(evs)
    d = fv.as_dict()
    assert all(d[f"hold_{i}"] == 100.0 for i in range(1, 13))
    assert all(d[f"downdown_{i}"] == 200.0 for i in range(1, 12))
    assert all(d[f"upup_{i}"] == 200.0 for i in range(1, 12))
    assert all(d[f"updown_{i}"] == 100.0 for i in range(1, 12))
    assert len(fv.names) == 45


def test_duplicate_down_rejected():
    evs = [
        KeyEvent("a", "down", 0.0),
        KeyEvent("a", "down", 10.0),
        KeyEvent("a", "up", 20.0),
    ]
    with pytest.raises(IntegrityError):
        features.timing_intervals(evs)


def test_wrong_pair_count_rejected():
    evs = _pairs([(f"k{i}", i * 200, i * 200 + 100) for i in range(11)])
    with pytest.raises(IntegrityError):
        features.keystroke_features(evs)


def test_dd_equals_ud_plus_h():
    evs = _pairs([(f"k{i}", i * 217.25, i * 217.25 + 80 + 3 * i) for i in range(12)])
    iv = features.timing_intervals(evs)
    assert np.array_equal(iv["downdown"], iv["updown"] + iv["hold"][:-1])


# ---------------------------------------------------------------------------
# normalization

def test_minmax_basic():
    from biokey.dataio import FeatureMatrix

    m = FeatureMatrix(["a"], np.array([[2.0], [4.0], [6.0]]), np.zeros((3, 3), dtype=int))
    out, stats = features.minmax_normalize(m)
    assert list(out.rows[:, 0]) == [0.0, 0.5, 1.0]
    assert stats[0][0] == 2.0 and stats[1][0] == 6.0


def test_minmax_constant_column():
    from biokey.dataio import FeatureMatrix

    m = FeatureMatrix(["a"], np.full((3, 1), 9.0), np.zeros((3, 3), dtype=int))
    out, _ = features.minmax_normalize(m)
    assert np.all(out.rows == 0.5)


def test_minmax_clamps_with_train_stats():
    from biokey.dataio import FeatureMatrix

    train = FeatureMatrix(["a"], np.array([[2.0], [6.0]]), np.zeros((2, 3), dtype=int))
    _, stats = features.minmax_normalize(train)
    test = FeatureMatrix(["a"], np.array([[8.0]]), np.zeros((1, 3), dtype=int))
    out, _ = features.minmax_normalize(test, stats)
    assert out.rows[0, 0] == 1.0


def test_minmax_training_columns_hit_0_and_1():
    from biokey.dataio import FeatureMatrix

    rng = np.random.default_rng(8)
    m = FeatureMatrix(
        [f"f{i}" for i in range(6)], rng.standard_normal((20, 6)), np.zeros((20, 3), dtype=int)
    )
    out, _ = features.minmax_normalize(m)
    assert np.allclose(out.rows.min(axis=0), 0.0)
    assert np.allclose(out.rows.max(axis=0), 1.0)
