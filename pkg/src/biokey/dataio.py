"""On-disk formats and the seeded synthetic dataset generator.

Formats
-------
Recording CSV: header ``t,AF3,T7,Pz,T8,AF4,marker``; ``t`` in seconds,
amplitudes unitless, ``marker`` 0/1/2 for none/start/end.

Keystroke JSONL: one ``{"key": "q", "action": "down", "t_ms": 1234.5}``
object per line.

Dataset directory: ``subject_<id>/session_<id>/trial_<id>.{csv,jsonl}``
plus a top-level ``manifest.json``.

All timestamps emitted by the generator are quantized to 1/1024 ms, so
differences and sums of generated times are exact in double precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, IntegrityError, ParameterError

SAMPLE_RATE_HZ = 128.0
CHANNELS = ["AF3", "T7", "Pz", "T8", "AF4"]
CSV_HEADER = "t,AF3,T7,Pz,T8,AF4,marker"
PASSWORD_KEYS = ["q", "u", "-", "caps", "e", "l", "e", "c", "caps", "3", "7", "1"]

MARKER_NONE, MARKER_START, MARKER_END = 0, 1, 2

# Generator fixtures (repo constants, not measured values). Keystroke timing
# ranges and noise follow the dataset contract; EEG band profile numbers are
# tuned so that the ten synthetic classes are learnable but overlapping.
HOLD_MEAN_RANGE_MS = (60.0, 180.0)
DOWNDOWN_MEAN_RANGE_MS = (80.0, 350.0)
TRIAL_NOISE_MS = 12.0
SESSION_DRIFT_MS = 8.0
SESSION_GAIN_STD = 0.05
TIME_QUANTUM_MS = 1.0 / 1024.0

EEG_BANDS_HZ = {
    "delta": (0.0, 4.0),
    "theta": (4.0, 7.0),
    "alpha": (7.0, 13.0),
    "beta": (13.0, 30.0),
    "gamma": (30.0, 63.0),
    "raw": (0.0, 63.0),
}
EEG_BASE_POWER = {
    "delta": 1.0,
    "theta": 0.7,
    "alpha": 0.9,
    "beta": 0.5,
    "gamma": 0.3,
    "raw": 0.4,
}
EEG_PROFILE_SPREAD = 0.3     # std of per-subject log band-power offsets
EEG_BACKGROUND_POWER = 1.5   # 1/f background, shared by all subjects

_TYPING_START_MS = 320.0
_POST_ROLL_S = 0.25


@dataclass(frozen=True)
class KeyEvent:
    key: str
    action: str  # "down" | "up"
    t_ms: float


@dataclass
class RawRecording:
    sample_rate_hz: float
    channels: list[str]
    samples: np.ndarray               # [n_samples x n_channels]
    markers: list[tuple[int, str]]    # (sample_index, "start"|"end")
    key_events: list[KeyEvent] = field(default_factory=list)

    def marker_pairs(self) -> list[tuple[int, int]]:
        """Validated (start, end) sample-index pairs."""
        pairs = []
        expect = "start"
        start = -1
        last = -1
        for idx, kind in self.markers:
            if kind != expect:
                raise IntegrityError(f"marker sequence broken at sample {idx}: got {kind}")
            if idx <= last:
                raise IntegrityError("markers are not strictly increasing")
            last = idx
            if kind == "start":
                start = idx
                expect = "end"
            else:
                pairs.append((start, idx))
                expect = "start"
        if expect == "end":
            raise IntegrityError("start marker without a matching end")
        return pairs

    @property
    def n_trials(self) -> int:
        return len(self.marker_pairs())


@dataclass(frozen=True)
class DatasetManifest:
    subjects: int
    sessions: int
    trials_per_session: int
    password_keys: tuple[str, ...] = tuple(PASSWORD_KEYS)
    seed: int = 0

    def __post_init__(self):
        if len(self.password_keys) != 12:
            raise ParameterError("password_keys must contain exactly 12 entries")
        if self.subjects < 2:
            raise ParameterError("a dataset needs at least 2 subjects")

    def to_json(self) -> str:
        return json.dumps(
            {
                "subjects": self.subjects,
                "sessions": self.sessions,
                "trials_per_session": self.trials_per_session,
                "password_keys": list(self.password_keys),
                "seed": self.seed,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        d = json.loads(text)
        return cls(
            subjects=d["subjects"],
            sessions=d["sessions"],
            trials_per_session=d["trials_per_session"],
            password_keys=tuple(d["password_keys"]),
            seed=d["seed"],
        )


@dataclass
class FeatureMatrix:
    """Named feature columns with (subject, session, trial) row labels."""

    feature_names: list[str]
    rows: np.ndarray                   # [n x d] float64
    labels: np.ndarray                 # [n x 3] int64: subject, session, trial
    norm_stats: tuple[np.ndarray, np.ndarray] | None = None  # (min, max), in-memory only

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.feature_names))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1, 3)
        if self.labels.shape[0] != self.rows.shape[0]:
            raise ParameterError("label count does not match row count")
        if len(set(self.feature_names)) != len(self.feature_names):
            dupes = sorted({n for n in self.feature_names if self.feature_names.count(n) > 1})
            raise FormatError(f"duplicate feature names: {dupes}")

    @property
    def subjects(self) -> np.ndarray:
        return self.labels[:, 0]

    def select_columns(self, names: list[str]) -> "FeatureMatrix":
        idx = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(list(names), self.rows[:, idx], self.labels.copy())

    def select_rows(self, mask_or_idx) -> "FeatureMatrix":
        return FeatureMatrix(
            list(self.feature_names), self.rows[mask_or_idx], self.labels[mask_or_idx]
        )


# ---------------------------------------------------------------------------
# loading


def load_recording(path) -> RawRecording:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise FormatError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
        times, rows, markers = [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise FormatError(f"{path}:{lineno}: expected 7 columns, got {len(parts)}")
            try:
                t = float(parts[0])
                amps = [float(p) for p in parts[1:6]]
                mk = int(parts[6])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if mk not in (MARKER_NONE, MARKER_START, MARKER_END):
                raise FormatError(f"{path}:{lineno}: marker must be 0, 1 or 2")
            if times and t <= times[-1]:
                raise IntegrityError(f"{path}:{lineno}: time column is not strictly increasing")
            times.append(t)
            rows.append(amps)
            if mk == MARKER_START:
                markers.append((len(rows) - 1, "start"))
            elif mk == MARKER_END:
                markers.append((len(rows) - 1, "end"))
    if len(times) < 2:
        raise FormatError(f"{path}: fewer than 2 samples")
    fs = 1.0 / (times[1] - times[0])
    rec = RawRecording(
        sample_rate_hz=round(fs, 3),
        channels=list(CHANNELS),
        samples=np.asarray(rows, dtype=float),
        markers=markers,
    )
    rec.marker_pairs()  # validate now: unpaired markers fail at load time
    return rec


def load_keystrokes(path) -> list[KeyEvent]:
    path = Path(path)
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            try:
                key, action, t_ms = obj["key"], obj["action"], float(obj["t_ms"])
            except (KeyError, TypeError, ValueError):
                raise FormatError(f"{path}:{lineno}: need key, action, t_ms fields") from None
            if action not in ("down", "up"):
                raise FormatError(f"{path}:{lineno}: action must be 'down' or 'up'")
            events.append(KeyEvent(key=str(key), action=action, t_ms=t_ms))
    events.sort(key=lambda e: e.t_ms)
    validate_key_pairing(events)
    return events


def validate_key_pairing(events: list[KeyEvent]) -> list[tuple[KeyEvent, KeyEvent]]:
    """Pair each down with the next up of the same key; raise on violations."""
    open_downs: dict[str, KeyEvent] = {}
    pairs = []
    for ev in events:
        if ev.action == "down":
            if ev.key in open_downs:
                raise IntegrityError(f"duplicate down for key {ev.key!r} at {ev.t_ms} ms")
            open_downs[ev.key] = ev
        else:
            if ev.key not in open_downs:
                raise IntegrityError(f"up without prior down for key {ev.key!r} at {ev.t_ms} ms")
            pairs.append((open_downs.pop(ev.key), ev))
    if open_downs:
        missing = sorted(open_downs)
        raise IntegrityError(f"down without matching up for keys: {missing}")
    pairs.sort(key=lambda p: p[0].t_ms)
    return pairs


# ---------------------------------------------------------------------------
# feature matrix round trip


def write_feature_matrix(m: FeatureMatrix, path) -> None:
    """CSV with repr-formatted floats: the round trip is exact."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("subject,session,trial," + ",".join(m.feature_names) + "\n")
        for lab, row in zip(m.labels, m.rows):
            cells = [str(int(lab[0])), str(int(lab[1])), str(int(lab[2]))]
            cells += [repr(float(v)) for v in row]
            fh.write(",".join(cells) + "\n")


def read_feature_matrix(path) -> FeatureMatrix:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:3] != ["subject", "session", "trial"]:
            raise FormatError(f"{path}: missing subject,session,trial label columns")
        names = header[3:]
        if len(set(names)) != len(names):
            raise FormatError(f"{path}: duplicate feature names in header")
        labels, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3 + len(names):
                raise FormatError(f"{path}:{lineno}: wrong column count")
            labels.append([int(parts[0]), int(parts[1]), int(parts[2])])
            rows.append([float(v) for v in parts[3:]])
    return FeatureMatrix(
        names,
        np.asarray(rows, dtype=float).reshape(-1, len(names)),
        np.asarray(labels, dtype=np.int64).reshape(-1, 3),
    )


# ---------------------------------------------------------------------------
# synthetic dataset generation


def _quantize_ms(t: float) -> float:
    return round(t / TIME_QUANTUM_MS) * TIME_QUANTUM_MS


def _subject_typing_profile(seed: int, subject: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([seed, subject, 101])
    holds = rng.uniform(*HOLD_MEAN_RANGE_MS, size=12)
    downdowns = rng.uniform(*DOWNDOWN_MEAN_RANGE_MS, size=11)
    return holds, downdowns


def _subject_band_profile(seed: int, subject: int) -> np.ndarray:
    """Per (channel, band) power profile, drawn once per subject."""
    rng = np.random.default_rng([seed, subject, 202])
    base = np.array([EEG_BASE_POWER[b] for b in EEG_BANDS_HZ])
    log_offsets = rng.normal(0.0, EEG_PROFILE_SPREAD, size=(len(CHANNELS), len(EEG_BANDS_HZ)))
    return base[None, :] * np.exp(log_offsets)


def _gen_key_events(
    mean_holds: np.ndarray,
    mean_downdowns: np.ndarray,
    drift_ms: float,
    keys: tuple[str, ...],
    rng: np.random.Generator,
) -> list[KeyEvent]:
    holds = np.maximum(20.0, rng.normal(mean_holds + drift_ms, TRIAL_NOISE_MS))
    downdowns = np.maximum(30.0, rng.normal(mean_downdowns + drift_ms, TRIAL_NOISE_MS))
    downs = _TYPING_START_MS + np.concatenate([[0.0], np.cumsum(downdowns)])
    ups = downs + holds
    # A repeated key (two 'e', two caps presses) must release before its next
    # press, or the down/up pairing would be ambiguous.
    for i, key in enumerate(keys):
        later = [j for j in range(i + 1, 12) if keys[j] == key]
        if later and ups[i] >= downs[later[0]]:
            ups[i] = downs[later[0]] - 1.0
    events = []
    for i, key in enumerate(keys):
        events.append(KeyEvent(key, "down", _quantize_ms(downs[i])))
        events.append(KeyEvent(key, "up", _quantize_ms(ups[i])))
    events.sort(key=lambda e: e.t_ms)
    return events


def _band_noise(n: int, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance Gaussian noise band-limited to [lo, hi) Hz."""
    freqs = np.fft.rfftfreq(n, d=1.0 / SAMPLE_RATE_HZ)
    spec = rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)
    mask = (freqs >= lo) & (freqs < hi)
    mask[0] = False  # always zero-mean
    x = np.fft.irfft(spec * mask, n=n)
    sd = x.std()
    return x / sd if sd > 0 else x


def _pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    freqs = np.fft.rfftfreq(n, d=1.0 / SAMPLE_RATE_HZ)
    spec = rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)
    scale = np.zeros_like(freqs)
    scale[1:] = 1.0 / np.sqrt(freqs[1:])
    x = np.fft.irfft(spec * scale, n=n)
    sd = x.std()
    return x / sd if sd > 0 else x


def _gen_eeg(
    n: int,
    band_profile: np.ndarray,
    session_gain: float,
    rng: np.random.Generator,
) -> np.ndarray:
    out = np.empty((n, len(CHANNELS)))
    for c in range(len(CHANNELS)):
        x = EEG_BACKGROUND_POWER ** 0.5 * _pink_noise(n, rng)
        for b, (lo, hi) in enumerate(EEG_BANDS_HZ.values()):
            power = band_profile[c, b] * session_gain
            x = x + power ** 0.5 * _band_noise(n, lo, hi, rng)
        out[:, c] = x / np.sqrt(1.0 + band_profile[c].sum())
    return out


def generate_trial(
    manifest: DatasetManifest, subject: int, session: int, trial: int
) -> tuple[RawRecording, list[KeyEvent]]:
    """One deterministic synthetic trial (pure function of manifest + indices)."""
    mean_holds, mean_downdowns = _subject_typing_profile(manifest.seed, subject)
    band_profile = _subject_band_profile(manifest.seed, subject)
    sess_rng = np.random.default_rng([manifest.seed, subject, session, 303])
    drift_ms = sess_rng.normal(0.0, SESSION_DRIFT_MS)
    session_gain = max(0.5, sess_rng.normal(1.0, SESSION_GAIN_STD))

    for attempt in range(100):
        rng = np.random.default_rng([manifest.seed, subject, session, trial, attempt])
        events = _gen_key_events(mean_holds, mean_downdowns, drift_ms, manifest.password_keys, rng)
        t_first = events[0].t_ms
        t_last = events[-1].t_ms
        start_sample = int(math.floor(t_first / 1000.0 * SAMPLE_RATE_HZ))
        end_sample = int(math.floor(t_last / 1000.0 * SAMPLE_RATE_HZ)) + 2
        if end_sample - start_sample < 10:
            continue  # degenerate typing burst: redraw, never emit
        n = end_sample + int(_POST_ROLL_S * SAMPLE_RATE_HZ)
        eeg = _gen_eeg(n, band_profile, session_gain, rng)
        markers = [(start_sample, "start"), (end_sample, "end")]
        rec = RawRecording(
            sample_rate_hz=SAMPLE_RATE_HZ,
            channels=list(CHANNELS),
            samples=eeg,
            markers=markers,
            key_events=events,
        )
        return rec, events
    raise IntegrityError("could not generate a non-degenerate trial in 100 attempts")


def write_recording(rec: RawRecording, path) -> None:
    marker_at = {idx: (1 if kind == "start" else 2) for idx, kind in rec.markers}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(rec.samples.shape[0]):
            t = i / rec.sample_rate_hz
            amps = ",".join(f"{v:.6f}" for v in rec.samples[i])
            fh.write(f"{t:.6f},{amps},{marker_at.get(i, 0)}\n")


def write_keystrokes(events: list[KeyEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps({"key": ev.key, "action": ev.action, "t_ms": ev.t_ms}) + "\n")


def synth_dataset(manifest: DatasetManifest, out_dir) -> Path:
    """Write the full synthetic dataset tree; bit-identical for a fixed manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    for subject in range(1, manifest.subjects + 1):
        for session in range(1, manifest.sessions + 1):
            sess_dir = out_dir / f"subject_{subject:02d}" / f"session_{session:02d}"
            sess_dir.mkdir(parents=True, exist_ok=True)
            for trial in range(1, manifest.trials_per_session + 1):
                rec, events = generate_trial(manifest, subject, session, trial)
                write_recording(rec, sess_dir / f"trial_{trial:03d}.csv")
                write_keystrokes(events, sess_dir / f"trial_{trial:03d}.jsonl")
    return out_dir


def iter_dataset(root) -> list[tuple[int, int, int, Path, Path]]:
    """(subject, session, trial, csv_path, jsonl_path) for every trial on disk."""
    root = Path(root)
    out = []
    for subj_dir in sorted(root.glob("subject_*")):
        subject = int(subj_dir.name.split("_")[1])
        for sess_dir in sorted(subj_dir.glob("session_*")):
            session = int(sess_dir.name.split("_")[1])
            for csv_path in sorted(sess_dir.glob("trial_*.csv")):
                trial = int(csv_path.stem.split("_")[1])
                out.append((subject, session, trial, csv_path, csv_path.with_suffix(".jsonl")))
    return out


def load_manifest(root) -> DatasetManifest:
    return DatasetManifest.from_json((Path(root) / "manifest.json").read_text(encoding="utf-8"))
