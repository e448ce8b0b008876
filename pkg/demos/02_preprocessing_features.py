"""Walk one trial through the preprocessing chain and feature extraction.

Preprocessing: degree-6 polynomial baseline removal, 0.5-63 Hz zero-phase
bandpass, marker segmentation, resampling to 1024 samples per channel.
Features: 13 time + 10 spectral + 18 wavelet band powers per channel plus
one cross-channel magnitude total (206), and 45 keystroke timings.
"""

import numpy as np

from biokey import dataio, dsp
from biokey.features import eeg_feature_vector, keystroke_features

manifest = dataio.DatasetManifest(subjects=2, sessions=1, trials_per_session=2, seed=11)
rec, events = dataio.generate_trial(manifest, subject=1, session=1, trial=1)

print(f"raw recording: {rec.samples.shape[0]} samples, "
      f"std per channel {np.round(rec.samples.std(axis=0), 3)}")

trials, seg = dsp.preprocess_recording(rec)
span = trials[0]
print(f"after preprocessing: {span.eeg.shape} (exactly 1024 per channel)")
print(f"dropped spans: {len(seg.dropped_spans)}, orphan events: {len(seg.orphan_key_events)}")

fv = eeg_feature_vector(span.eeg)
print(f"\nEEG feature vector: {len(fv.names)} features")
show = ["AF3_mean", "AF3_hjorth_mobility", "PZ_bp_alpha", "PZ_W5", "T8_spectral_entropy", "smat"]
for name in show:
    idx = fv.names.index(name)
    print(f"  {name:22s} = {fv.values[idx]: .4f}")

kv = keystroke_features(span.key_events)
print(f"\nkeystroke feature vector: {len(kv.names)} features")
d = kv.as_dict()
print("  holds (ms):     ", np.round(kv.values[:12], 1))
print("  down-down (ms): ", np.round(kv.values[12:23], 1))
print("  identity DD = UD + H holds exactly:",
      all(d[f"downdown_{i}"] == d[f"updown_{i}"] + d[f"hold_{i}"] for i in range(1, 12)))
