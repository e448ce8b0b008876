"""Per-trial feature extraction.

EEG: 13 time-domain + 10 spectral + 18 wavelet band powers per channel, plus
one cross-channel signal-magnitude-area total = 5 * 41 + 1 = 206 features
(the default ``wpt18`` wavelet scheme). A plain 6-level DWT scheme (``dwt7``,
7 bands per channel, 151 features total) is selectable.

Keystroke: hold (12), down-down (11), up-up (11), up-down (11) intervals in
milliseconds = 45 features.

Degenerate inputs (constant signals) yield 0.0 for the undefined statistics
and set a quality flag instead of emitting NaN, so downstream matrices stay
finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import wavelets
from .dataio import FeatureMatrix, KeyEvent, validate_key_pairing
from .errors import IntegrityError, ParameterError

CHANNEL_LABELS = ["AF3", "T7", "PZ", "T8", "AF4"]
ENTROPY_BINS = 64
M2F_HALF_WINDOW_HZ = 5.0
SPECTRUM_CUTOFF_HZ = 63.0
BAND_EDGES_HZ = [
    ("bp_delta", 0.0, 4.0),
    ("bp_theta", 4.0, 7.0),
    ("bp_alpha", 7.0, 13.0),
    ("bp_beta", 13.0, 30.0),
    ("bp_gamma", 30.0, 63.0),
]

TIME_FEATURE_NAMES = [
    "mean", "median", "std", "mad", "p25", "p75", "iqr", "skewness",
    "kurtosis", "hjorth_activity", "hjorth_mobility", "hjorth_complexity",
    "shannon_entropy",
]
SPECTRAL_FEATURE_NAMES = [
    "spectral_entropy", "m2f_hz", "m2f_amp", "m2f_rel_energy",
    "bp_delta", "bp_theta", "bp_alpha", "bp_beta", "bp_gamma", "bp_raw",
]
WPT18_NAMES = [f"W{i}" for i in range(1, 19)]
DWT7_NAMES = ["cA6", "cD6", "cD5", "cD4", "cD3", "cD2", "cD1"]


@dataclass
class FeatureVector:
    names: list[str]
    values: np.ndarray
    quality_flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != len(self.names):
            raise ParameterError("feature value count does not match name count")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))


def percentile(x: np.ndarray, p: float) -> float:
    """Rank-based percentile: r = (p/100)*n, 1-based; integral rank averages
    elements r and r+1, otherwise element ceil(r)."""
    xs = np.sort(np.asarray(x, dtype=float))
    n = xs.size
    if n == 0:
        raise ParameterError("percentile of an empty sample")
    r = p / 100.0 * n
    ri = int(np.floor(r))
    if np.isclose(r, ri) and 1 <= ri < n:
        return 0.5 * (xs[ri - 1] + xs[ri])
    return xs[min(max(int(np.ceil(r)), 1), n) - 1]


def _median(xs_sorted: np.ndarray) -> float:
    n = xs_sorted.size
    mid = n // 2
    if n % 2:
        return float(xs_sorted[mid])
    return 0.5 * float(xs_sorted[mid - 1] + xs_sorted[mid])


def time_features(x: np.ndarray) -> tuple[dict[str, float], list[str]]:
    """The 13 time-domain statistics; returns (values, quality flags)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ParameterError("time_features input contains non-finite values")
    n = x.size
    flags: list[str] = []
    mean = float(x.mean())
    xs = np.sort(x)
    med = _median(xs)
    dev = x - mean
    var1 = float(np.sum(dev ** 2) / (n - 1)) if n > 1 else 0.0
    s = np.sqrt(var1)
    mad = float(np.mean(np.abs(dev)))
    p25 = percentile(x, 25.0)
    p75 = percentile(x, 75.0)
    if s > 0:
        skew = float(np.sum(dev ** 3) / n / s ** 3)
        kurt = float(np.sum(dev ** 4) / n / s ** 4 - 3.0)
    else:
        skew, kurt = 0.0, 0.0
        flags.append("constant_signal")
    activity = var1

    def _var(v: np.ndarray) -> float:
        return float(np.var(v, ddof=1)) if v.size > 1 else 0.0

    d1 = np.diff(x)
    d2 = np.diff(d1)
    v0, v1, v2 = var1, _var(d1), _var(d2)
    mobility = np.sqrt(v1 / v0) if v0 > 0 else 0.0
    if v0 > 0 and v1 > 0:
        complexity = np.sqrt(v2 / v1) / mobility
    else:
        complexity = 0.0
        if "constant_signal" not in flags:
            flags.append("degenerate_derivative")

    if xs[-1] > xs[0]:
        counts, _ = np.histogram(x, bins=ENTROPY_BINS, range=(xs[0], xs[-1]))
        p = counts[counts > 0] / n
        entropy = float(-np.sum(p * np.log2(p)))
    else:
        entropy = 0.0

    values = {
        "mean": mean, "median": med, "std": s, "mad": mad,
        "p25": p25, "p75": p75, "iqr": p75 - p25,
        "skewness": skew, "kurtosis": kurt,
        "hjorth_activity": activity, "hjorth_mobility": float(mobility),
        "hjorth_complexity": float(complexity), "shannon_entropy": entropy,
    }
    return values, flags


def _periodogram(x: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    spec = np.fft.rfft(x)
    amp = np.abs(spec)
    power = amp ** 2
    freqs = np.fft.rfftfreq(x.size, d=1.0 / fs)
    return freqs, amp, power


def spectral_features(x: np.ndarray, fs: float) -> tuple[dict[str, float], list[str]]:
    """The 10 frequency-domain features; returns (values, quality flags)."""
    x = np.asarray(x, dtype=float)
    if x.size < 64:
        raise ParameterError("spectral_features needs at least 64 samples")
    flags: list[str] = []
    freqs, amp, power = _periodogram(x, fs)
    total = power.sum()
    if total > 0:
        p = power / total
        nz = p[p > 0]
        sen = float(-np.sum(nz * np.log2(nz)) / np.log2(p.size))
    else:
        sen = 0.0
        flags.append("zero_signal")

    # Second-max frequency: 2nd-largest strict local maximum of the amplitude
    # spectrum; fall back to the 2nd-largest bin when fewer than 2 peaks exist.
    interior = np.arange(1, amp.size - 1)
    is_peak = (amp[interior] > amp[interior - 1]) & (amp[interior] > amp[interior + 1])
    peak_bins = interior[is_peak]
    if peak_bins.size >= 2:
        order = np.lexsort((peak_bins, -amp[peak_bins]))
        second = peak_bins[order[1]]
    else:
        order = np.lexsort((np.arange(amp.size), -amp))
        second = order[1] if amp.size > 1 else 0
    m2f_hz = float(freqs[second])
    m2f_amp = float(amp[second])
    window = (freqs >= m2f_hz - M2F_HALF_WINDOW_HZ) & (freqs <= m2f_hz + M2F_HALF_WINDOW_HZ)
    below = freqs < SPECTRUM_CUTOFF_HZ
    denom = power[below].sum()
    m2f_rel = float(power[window & below].sum() / denom) if denom > 0 else 0.0

    values = {
        "spectral_entropy": sen,
        "m2f_hz": m2f_hz,
        "m2f_amp": m2f_amp,
        "m2f_rel_energy": m2f_rel,
    }
    for name, lo, hi in BAND_EDGES_HZ:
        band = (freqs >= lo) & (freqs < hi)
        values[name] = float(power[band].sum())
    values["bp_raw"] = float(power[(freqs >= 0.0) & (freqs < SPECTRUM_CUTOFF_HZ)].sum())
    return values, flags


def wavelet_features(x: np.ndarray, scheme: str = "wpt18") -> dict[str, float]:
    """Wavelet band powers; each is the band's squared-coefficient sum divided
    by the signal length (its contribution to mean signal power)."""
    x = np.asarray(x, dtype=float)
    if x.size != 1024:
        raise ParameterError(f"wavelet_features expects 1024 samples, got {x.size}")
    n = float(x.size)
    if scheme == "wpt18":
        leaves = wavelets.wavelet_packet(x, 4)
        lo_split = wavelets.split_node(leaves[0], 0)   # 0-2, 2-4 Hz
        hi_split = wavelets.split_node(leaves[1], 1)   # 4-6, 6-8 Hz
        bands = list(lo_split) + list(hi_split) + leaves[2:]
        return {name: float(np.sum(b ** 2) / n) for name, b in zip(WPT18_NAMES, bands)}
    if scheme == "dwt7":
        bands = wavelets.dwt(x, 6)
        return {name: float(np.sum(b ** 2) / n) for name, b in zip(DWT7_NAMES, bands)}
    raise ParameterError(f"unknown wavelet scheme {scheme!r}")


def smat(trial: np.ndarray) -> float:
    """Signal magnitude area over all channels: mean over time of summed |x|."""
    trial = np.asarray(trial, dtype=float)
    if trial.ndim != 2:
        raise ParameterError("smat expects a [channels x samples] matrix")
    return float(np.sum(np.abs(trial)) / trial.shape[1])


def scheme_feature_names(scheme: str = "wpt18") -> list[str]:
    wnames = WPT18_NAMES if scheme == "wpt18" else DWT7_NAMES
    names = []
    for ch in CHANNEL_LABELS:
        names += [f"{ch}_{n}" for n in TIME_FEATURE_NAMES]
        names += [f"{ch}_{n}" for n in SPECTRAL_FEATURE_NAMES]
        names += [f"{ch}_{n}" for n in wnames]
    names.append("smat")
    return names


def eeg_feature_vector(trial, scheme: str = "wpt18", fs: float = 128.0) -> FeatureVector:
    """Concatenated per-channel features (fixed channel order) plus SMAT."""
    eeg = np.asarray(getattr(trial, "eeg", trial), dtype=float)
    if eeg.shape[0] != len(CHANNEL_LABELS):
        raise ParameterError(f"expected {len(CHANNEL_LABELS)} channels, got {eeg.shape[0]}")
    names: list[str] = []
    values: list[float] = []
    flags: list[str] = []
    for c, ch in enumerate(CHANNEL_LABELS):
        tvals, tflags = time_features(eeg[c])
        svals, sflags = spectral_features(eeg[c], fs)
        wvals = wavelet_features(eeg[c], scheme)
        for d in (tvals, svals, wvals):
            for k, v in d.items():
                names.append(f"{ch}_{k}")
                values.append(v)
        flags += [f"{ch}:{f}" for f in tflags + sflags]
    names.append("smat")
    values.append(smat(eeg))
    return FeatureVector(names, np.array(values), flags)


def timing_intervals(events: list[KeyEvent]) -> dict[str, np.ndarray]:
    """Hold / down-down / up-up / up-down interval arrays for k ordered pairs.

    Up-down may be negative when the next key is pressed before the previous
    one is released.
    """
    pairs = validate_key_pairing(sorted(events, key=lambda e: e.t_ms))
    if not pairs:
        raise IntegrityError("no key pairs present")
    downs = np.array([d.t_ms for d, _ in pairs])
    ups = np.array([u.t_ms for _, u in pairs])
    return {
        "hold": ups - downs,
        "downdown": downs[1:] - downs[:-1],
        "upup": ups[1:] - ups[:-1],
        "updown": downs[1:] - ups[:-1],
    }


def keystroke_features(events: list[KeyEvent]) -> FeatureVector:
    """The 45 keystroke timing features for one 12-keypress trial."""
    iv = timing_intervals(events)
    if iv["hold"].size != 12:
        raise IntegrityError(f"expected 12 keypresses, got {iv['hold'].size}")
    names = (
        [f"hold_{i}" for i in range(1, 13)]
        + [f"downdown_{i}" for i in range(1, 12)]
        + [f"upup_{i}" for i in range(1, 12)]
        + [f"updown_{i}" for i in range(1, 12)]
    )
    values = np.concatenate([iv["hold"], iv["downdown"], iv["upup"], iv["updown"]])
    return FeatureVector(names, values)


def minmax_normalize(
    m: FeatureMatrix,
    stats: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[FeatureMatrix, tuple[np.ndarray, np.ndarray]]:
    """Map features linearly to [0, 1].

    Without `stats` the per-feature min/max come from `m` itself (training
    use); with `stats` they are applied as-is and values are clamped
    (test/probe use). Features with max == min map to 0.5.
    """
    if stats is None:
        lo = m.rows.min(axis=0) if m.rows.size else np.zeros(len(m.feature_names))
        hi = m.rows.max(axis=0) if m.rows.size else np.ones(len(m.feature_names))
        clamp = False
    else:
        lo, hi = stats
        clamp = True
    span = hi - lo
    degenerate = span <= 0
    safe_span = np.where(degenerate, 1.0, span)
    scaled = (m.rows - lo) / safe_span
    scaled[:, degenerate] = 0.5
    if clamp:
        scaled = np.clip(scaled, 0.0, 1.0)
    out = FeatureMatrix(list(m.feature_names), scaled, m.labels.copy())
    out.norm_stats = (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    return out, out.norm_stats
