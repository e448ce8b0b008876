"""Glue from an on-disk dataset to row-aligned per-modality feature matrices."""

from __future__ import annotations

import numpy as np

from . import dataio, dsp
from .dataio import FeatureMatrix
from .errors import IntegrityError
from .features import eeg_feature_vector, keystroke_features, scheme_feature_names
from .learn import ModalityBundle


def extract_trial(rec: dataio.RawRecording, subject: int, session: int, trial: int) -> dsp.TrialSample:
    """Preprocess a single-trial recording into a TrialSample."""
    trials, seg = dsp.preprocess_recording(rec)
    if len(trials) != 1:
        raise IntegrityError(
            f"expected one trial per recording, found {len(trials)} "
            f"(dropped: {len(seg.dropped_spans)})"
        )
    span = trials[0]
    return dsp.TrialSample(span.eeg, span.key_events, subject, session, trial)


def load_bundle(root, scheme: str = "wpt18") -> ModalityBundle:
    """Load, preprocess and featurize every trial under a dataset directory."""
    entries = dataio.iter_dataset(root)
    if not entries:
        raise IntegrityError(f"no trials found under {root}")
    trials: list[dsp.TrialSample] = []
    eeg_rows, key_rows, labels = [], [], []
    eeg_names = scheme_feature_names(scheme)
    key_names = None
    for subject, session, trial, csv_path, jsonl_path in entries:
        rec = dataio.load_recording(csv_path)
        rec.key_events = dataio.load_keystrokes(jsonl_path)
        sample = extract_trial(rec, subject, session, trial)
        ev = eeg_feature_vector(sample.eeg, scheme)
        kv = keystroke_features(sample.key_events)
        if ev.names != eeg_names:
            raise IntegrityError("EEG feature naming drifted from the scheme contract")
        if key_names is None:
            key_names = kv.names
        trials.append(sample)
        eeg_rows.append(ev.values)
        key_rows.append(kv.values)
        labels.append((subject, session, trial))
    label_arr = np.asarray(labels, dtype=np.int64)
    eeg = FeatureMatrix(eeg_names, np.vstack(eeg_rows), label_arr)
    key = FeatureMatrix(key_names, np.vstack(key_rows), label_arr.copy())
    return ModalityBundle(eeg, key, trials=trials, scheme=scheme)


def bundle_from_manifest(manifest: dataio.DatasetManifest, scheme: str = "wpt18") -> ModalityBundle:
    """Generate trials in memory (no files) and featurize them."""
    trials: list[dsp.TrialSample] = []
    eeg_rows, key_rows, labels = [], [], []
    eeg_names = scheme_feature_names(scheme)
    key_names = None
    for subject in range(1, manifest.subjects + 1):
        for session in range(1, manifest.sessions + 1):
            for trial in range(1, manifest.trials_per_session + 1):
                rec, _ = dataio.generate_trial(manifest, subject, session, trial)
                sample = extract_trial(rec, subject, session, trial)
                ev = eeg_feature_vector(sample.eeg, scheme)
                kv = keystroke_features(sample.key_events)
                if key_names is None:
                    key_names = kv.names
                trials.append(sample)
                eeg_rows.append(ev.values)
                key_rows.append(kv.values)
                labels.append((subject, session, trial))
    label_arr = np.asarray(labels, dtype=np.int64)
    eeg = FeatureMatrix(eeg_names, np.vstack(eeg_rows), label_arr)
    key = FeatureMatrix(key_names, np.vstack(key_rows), label_arr.copy())
    return ModalityBundle(eeg, key, trials=trials, scheme=scheme)
