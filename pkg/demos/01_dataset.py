"""Generate a small synthetic dataset and inspect its on-disk layout.

The generator stands in for a lab acquisition: each trial is one typing of
the fixed 12-key password with a synchronized 5-channel EEG recording.
Typing profiles (per-key hold means, per-transition latencies) and EEG band
profiles are drawn once per subject, with session drift and trial noise on
top, so subjects are learnable but overlap realistically.
"""

import tempfile
from pathlib import Path

from biokey import dataio

workdir = Path(tempfile.mkdtemp(prefix="biokey-demo-"))
manifest = dataio.DatasetManifest(subjects=3, sessions=2, trials_per_session=5, seed=7)
root = dataio.synth_dataset(manifest, workdir / "dataset")

print(f"dataset at {root}")
for p in sorted(root.rglob("*"))[:8]:
    print("  ", p.relative_to(root))
print("   ...")

entries = dataio.iter_dataset(root)
print(f"\n{len(entries)} trials total")

subject, session, trial, csv_path, jsonl_path = entries[0]
rec = dataio.load_recording(csv_path)
events = dataio.load_keystrokes(jsonl_path)
start, end = rec.marker_pairs()[0]
print(f"\nfirst trial (subject {subject}, session {session}):")
print(f"  EEG: {rec.samples.shape[0]} samples x {len(rec.channels)} channels "
      f"at {rec.sample_rate_hz:.0f} Hz")
print(f"  typing window: samples {start}..{end} "
      f"({(end - start) / rec.sample_rate_hz:.2f} s)")
print(f"  key events: {len(events)} (12 presses + 12 releases)")
print("  first three:", [(e.key, e.action, round(e.t_ms, 1)) for e in events[:3]])

# determinism: the same manifest always produces byte-identical files
again = dataio.synth_dataset(manifest, workdir / "dataset2")
a = (root / "subject_01/session_01/trial_001.csv").read_bytes()
b = (again / "subject_01/session_01/trial_001.csv").read_bytes()
print(f"\nbyte-identical regeneration: {a == b}")
