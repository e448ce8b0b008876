"""Closed-set identification: classifiers per modality and score fusion.

Reproduces the headline qualitative result: summing the per-class
probability scores of the two single-modality classifiers beats either
modality alone (on the private acquisition: EEG 95.8%, keystroke 99.5%,
fused 99.9% for the forest).
"""

from biokey import dataio, learn, pipeline

print("building dataset (10 subjects x 2 sessions x 10 trials, seed 42)...")
manifest = dataio.DatasetManifest(subjects=10, sessions=2, trials_per_session=10, seed=42)
bundle = pipeline.bundle_from_manifest(manifest)
cv = learn.CVSpec(n_folds=5, seed=42)

print(f"\n{'model':8s} {'eeg':>8s} {'key':>8s} {'fused':>8s}")
for kind, trees in [("cart", 1), ("knn", 1), ("lda", 1), ("forest", 100)]:
    accs = []
    for modality in ("eeg", "key", "fused"):
        spec = learn.ModelSpec(kind=kind, n_trees=trees, seed=42)
        rep = learn.run_identification(bundle, modality, spec, cv)
        accs.append(rep.accuracy)
    print(f"{kind:8s} {accs[0]:8.4f} {accs[1]:8.4f} {accs[2]:8.4f}")

spec = learn.ModelSpec(kind="forest", n_trees=100, seed=42)
rep = learn.run_identification(bundle, "fused", spec, cv)
print(f"\nfused forest: accuracy {rep.accuracy:.4f}, macro F1 {rep.macro_f1:.4f}, "
      f"macro AUC {rep.macro_auc:.4f}")
print("per-fold accuracies:", [round(a, 4) for a in rep.fold_accuracies])
print("confusion matrix row sums:", rep.confusion.sum(axis=1).tolist())
