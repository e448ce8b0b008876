"""Classifiers, cross-validation and score-level fusion.

The decision tree and forest are grown here rather than wrapped from a
library: the impurity-ranking module needs every node's class counts, the
split rule (midpoint thresholds, lower-feature/lower-threshold tie-breaks)
is part of the reproducibility contract, and per-tree seeds are derived as
(seed, tree index) so training is schedule-independent.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import select as selection_mod
from .augment import AugmentSpec, augment_features, augment_trials
from .dataio import FeatureMatrix
from .errors import ConfigurationError, ParameterError, StateError
from .features import eeg_feature_vector, minmax_normalize

FOREST_TREES = 500
FOREST_MIN_SAMPLES_SPLIT = 2
KNN_NEIGHBORS = 5
LDA_RIDGE = 1e-6
VALIDATION_FRACTION = 0.2


# ---------------------------------------------------------------------------
# model specification

@dataclass(frozen=True)
class ModelSpec:
    kind: str                       # cart | forest | knn | lda
    n_trees: int = FOREST_TREES
    min_samples_split: int = FOREST_MIN_SAMPLES_SPLIT
    max_features: str | None = "sqrt"   # "sqrt" or None (all features)
    bootstrap: bool = True
    k: int = KNN_NEIGHBORS
    ridge: float = LDA_RIDGE
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("cart", "forest", "knn", "lda"):
            raise ParameterError(f"unknown model kind {self.kind!r}")


@dataclass(frozen=True)
class CVSpec:
    n_folds: int = 5
    validation_fraction: float = VALIDATION_FRACTION
    seed: int = 0
    stratified: bool = True


# ---------------------------------------------------------------------------
# decision trees

@dataclass
class Tree:
    """Flat array representation; node 0 is the root.

    feature[i] == -1 marks a leaf. counts[i] holds the training class counts
    seen at node i (the raw material for impurity ranking).
    """

    feature: np.ndarray      # int32 [n_nodes]
    threshold: np.ndarray    # float64 [n_nodes]
    left: np.ndarray         # int32
    right: np.ndarray       # int32
    counts: np.ndarray       # int64 [n_nodes x n_classes]

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def node_distribution(self, i: int) -> np.ndarray:
        c = self.counts[i].astype(float)
        return c / c.sum()

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.where(active)[0]
            f = self.feature[node[idx]]
            thr = self.threshold[node[idx]]
            go_left = X[idx, f] <= thr
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
            active = self.feature[node] >= 0
        dist = self.counts[node].astype(float)
        return dist / dist.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int32),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int32),
            np.asarray(d["right"], dtype=np.int32),
            np.asarray(d["counts"], dtype=np.int64),
        )


def _gini_from_counts(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _best_split(X, y, rows, n_classes, feature_ids):
    """Best (gain, feature, threshold) over candidate features.

    Thresholds sit at midpoints of consecutive distinct sorted values; ties
    resolve to the lower feature index, then the lower threshold. Returns
    None when no feature admits a two-sided split.
    """
    n = rows.size
    parent_counts = np.bincount(y[rows], minlength=n_classes)
    parent_gini = _gini_from_counts(parent_counts)
    best = None  # (neg_gain, feature, threshold, go_left_mask)
    yr = y[rows]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), yr] = 1.0
    for f in feature_ids:
        col = X[rows, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        boundaries = np.where(xs[1:] != xs[:-1])[0]
        if boundaries.size == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)
        n_left = boundaries + 1.0
        n_right = n - n_left
        cl = cum[boundaries]
        cr = parent_counts - cl
        gini_l = 1.0 - np.sum((cl / n_left[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((cr / n_right[:, None]) ** 2, axis=1)
        weighted = (n_left * gini_l + n_right * gini_r) / n
        pos = int(np.argmin(weighted))  # first minimum = lowest threshold
        gain = parent_gini - float(weighted[pos])
        thr = 0.5 * (xs[boundaries[pos]] + xs[boundaries[pos] + 1])
        key = (-gain, f, thr)
        if best is None or key < best[0]:
            best = (key, f, thr, order, boundaries[pos])
    if best is None:
        return None
    _, f, thr, _, _ = best
    return f, thr


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    rng: np.random.Generator | None,
    max_features: str | None,
    min_samples_split: int,
) -> Tree:
    """Grow to purity (or until no valid split); impure nodes split even at
    zero gain so that e.g. XOR is still separated."""
    d = X.shape[1]
    if max_features == "sqrt":
        n_sub = int(np.ceil(np.sqrt(d)))
    else:
        n_sub = d
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[rows], minlength=n_classes))
        return len(feature) - 1

    root_rows = np.arange(X.shape[0])
    stack = [(new_node(root_rows), root_rows)]
    while stack:
        node_id, rows = stack.pop()
        c = counts[node_id]
        if rows.size < min_samples_split or np.count_nonzero(c) <= 1:
            continue
        if n_sub < d:
            cand = np.sort(rng.choice(d, size=n_sub, replace=False))
        else:
            cand = np.arange(d)
        split = _best_split(X, y, rows, n_classes, cand)
        if split is None:
            continue
        f, thr = split
        mask = X[rows, f] <= thr
        left_rows, right_rows = rows[mask], rows[~mask]
        feature[node_id] = f
        threshold[node_id] = thr
        lid = new_node(left_rows)
        rid = new_node(right_rows)
        left[node_id] = lid
        right[node_id] = rid
        stack.append((rid, right_rows))
        stack.append((lid, left_rows))
    return Tree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(counts, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# models

class _BaseModel:
    classes_: np.ndarray
    degenerate: bool = False
    n_features_: int = 0

    def _check_width(self, X):
        if X.shape[1] != self.n_features_:
            raise ParameterError(
                f"feature width {X.shape[1]} does not match training width {self.n_features_}"
            )

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(np.asarray(X, dtype=float))
        return self.classes_[np.argmax(proba, axis=1)]


class DegenerateModel(_BaseModel):
    """Single-class training data: always predicts that class (flagged)."""

    degenerate = True

    def __init__(self, label, n_features):
        self.classes_ = np.asarray([label])
        self.n_features_ = n_features

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        self._check_width(X)
        return np.ones((X.shape[0], 1))


class CartModel(_BaseModel):
    def __init__(self, tree: Tree, classes: np.ndarray, n_features: int):
        self.tree = tree
        self.classes_ = classes
        self.n_features_ = n_features

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        self._check_width(X)
        return self.tree.predict_proba(X)


class ForestModel(_BaseModel):
    """Bagged trees with per-node class-count bookkeeping retained."""

    def __init__(self, trees, classes, n_features, feature_names=None, spec=None):
        self.trees: list[Tree] = trees
        self.classes_ = classes
        self.n_features_ = n_features
        self.feature_names = feature_names
        self.spec = spec

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        self._check_width(X)
        if not self.trees:
            raise StateError("forest has no trees")
        acc = np.zeros((X.shape[0], self.classes_.size))
        for t in self.trees:
            acc += t.predict_proba(X)
        return acc / len(self.trees)

    def predict_proba_one(self, x) -> np.ndarray:
        return self.predict_proba(np.asarray(x, dtype=float)[None, :])[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": "biokey-forest-v1",
                "classes": self.classes_.tolist(),
                "n_features": self.n_features_,
                "feature_names": self.feature_names,
                "trees": [t.to_dict() for t in self.trees],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        d = json.loads(text)
        if d.get("format") != "biokey-forest-v1":
            raise ParameterError("not a biokey forest file")
        return cls(
            [Tree.from_dict(t) for t in d["trees"]],
            np.asarray(d["classes"]),
            d["n_features"],
            d.get("feature_names"),
        )


class KnnModel(_BaseModel):
    def __init__(self, X, y_codes, classes, k):
        self.X = X
        self.y_codes = y_codes
        self.classes_ = classes
        self.k = min(k, X.shape[0])
        self.n_features_ = X.shape[1]

    def predict_proba(self, Xq):
        Xq = np.asarray(Xq, dtype=float)
        self._check_width(Xq)
        d2 = ((Xq[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        out = np.zeros((Xq.shape[0], self.classes_.size))
        for i in range(Xq.shape[0]):
            out[i] = np.bincount(self.y_codes[nearest[i]], minlength=self.classes_.size)
        return out / self.k


class LdaModel(_BaseModel):
    def __init__(self, means, weights, biases, classes, n_features):
        self.means = means
        self.weights = weights      # [C x d]: Sigma^-1 mu_c
        self.biases = biases        # [C]
        self.classes_ = classes
        self.n_features_ = n_features

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        self._check_width(X)
        scores = X @ self.weights.T + self.biases
        scores -= scores.max(axis=1, keepdims=True)
        e = np.exp(scores)
        return e / e.sum(axis=1, keepdims=True)


def fit(spec: ModelSpec, X, y) -> _BaseModel:
    """Train the requested classifier; single-class data yields a flagged
    degenerate model."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, y_codes = np.unique(y, return_inverse=True)
    if classes.size == 1:
        return DegenerateModel(classes[0], X.shape[1])
    if spec.kind == "cart":
        tree = _grow_tree(X, y_codes, classes.size, None, None, spec.min_samples_split)
        return CartModel(tree, classes, X.shape[1])
    if spec.kind == "forest":
        trees = []
        for t in range(spec.n_trees):
            rng = np.random.default_rng([spec.seed, t])
            rows = rng.integers(0, X.shape[0], X.shape[0]) if spec.bootstrap else np.arange(X.shape[0])
            trees.append(
                _grow_tree(
                    X[rows], y_codes[rows], classes.size, rng,
                    spec.max_features, spec.min_samples_split,
                )
            )
        return ForestModel(trees, classes, X.shape[1], spec=spec)
    if spec.kind == "knn":
        return KnnModel(X, y_codes, classes, spec.k)
    if spec.kind == "lda":
        d = X.shape[1]
        means = np.vstack([X[y_codes == c].mean(axis=0) for c in range(classes.size)])
        pooled = np.zeros((d, d))
        for c in range(classes.size):
            dev = X[y_codes == c] - means[c]
            pooled += dev.T @ dev
        pooled /= max(X.shape[0] - classes.size, 1)
        pooled += spec.ridge * np.eye(d)
        weights = np.linalg.solve(pooled, means.T).T
        priors = np.bincount(y_codes) / y_codes.size
        biases = -0.5 * np.sum(means * weights, axis=1) + np.log(priors)
        return LdaModel(means, weights, biases, classes, d)
    raise ParameterError(f"unknown model kind {spec.kind!r}")


def predict_proba(model: _BaseModel, X) -> np.ndarray:
    return model.predict_proba(np.asarray(X, dtype=float))


def fuse(p_eeg: np.ndarray, p_key: np.ndarray) -> tuple[np.ndarray, int]:
    """Sum the two modality scores; argmax with ties going to the lower index."""
    p_eeg = np.asarray(p_eeg, dtype=float)
    p_key = np.asarray(p_key, dtype=float)
    if p_eeg.shape != p_key.shape:
        raise ParameterError("fused modalities must score the same class set")
    s = p_eeg + p_key
    return s, int(np.argmax(s))


# ---------------------------------------------------------------------------
# cross-validation

@dataclass
class FoldAssignment:
    test_folds: list[np.ndarray]          # disjoint test index arrays
    validation: list[np.ndarray]          # per fold: validation subset of train

    def train_indices(self, fold: int, n: int) -> np.ndarray:
        mask = np.ones(n, dtype=bool)
        mask[self.test_folds[fold]] = False
        return np.where(mask)[0]


def stratified_folds(labels, spec: CVSpec) -> FoldAssignment:
    """Deterministic stratified folds plus a designated stratified validation
    subset (validation_fraction of the training split) per fold."""
    labels = np.asarray(labels)
    n = labels.size
    classes = np.unique(labels)
    per_class: dict = {}
    for ci, c in enumerate(classes):
        idx = np.where(labels == c)[0]
        if idx.size < spec.n_folds:
            raise ConfigurationError(
                f"class {c!r} has {idx.size} samples; need at least {spec.n_folds}"
            )
        rng = np.random.default_rng([spec.seed, 11, ci])
        per_class[c] = idx[rng.permutation(idx.size)]
    test_folds = []
    for f in range(spec.n_folds):
        parts = [per_class[c][f :: spec.n_folds] for c in classes]
        test_folds.append(np.sort(np.concatenate(parts)))
    validation = []
    for f in range(spec.n_folds):
        vparts = []
        for ci, c in enumerate(classes):
            train_c = np.concatenate(
                [per_class[c][g :: spec.n_folds] for g in range(spec.n_folds) if g != f]
            )
            rng = np.random.default_rng([spec.seed, 12, f, ci])
            perm = train_c[rng.permutation(train_c.size)]
            n_val = max(1, int(np.ceil(spec.validation_fraction * train_c.size)))
            vparts.append(perm[:n_val])
        validation.append(np.sort(np.concatenate(vparts)))
    return FoldAssignment(test_folds, validation)


# ---------------------------------------------------------------------------
# metrics

@dataclass
class EvalReport:
    classes: list
    accuracy: float
    fold_accuracies: list[float]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict
    confusion: np.ndarray                 # rows = truth, cols = prediction
    roc: dict                             # class -> {"fpr": [...], "tpr": [...], "auc": x}
    macro_auc: float
    excluded_classes: list
    fit_seconds: float = 0.0
    predict_seconds: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "classes": [_plain(c) for c in self.classes],
            "accuracy": self.accuracy,
            "fold_accuracies": self.fold_accuracies,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "confusion": self.confusion.tolist(),
            "roc": {str(k): v for k, v in self.roc.items()},
            "macro_auc": self.macro_auc,
            "excluded_classes": [_plain(c) for c in self.excluded_classes],
        }
        if include_timing:
            d["timing"] = {
                "fit_seconds": self.fit_seconds,
                "predict_seconds": self.predict_seconds,
            }
        return d

    def to_canonical_json(self) -> str:
        """Deterministic serialization: measured wall times are excluded."""
        return json.dumps(self.to_dict(include_timing=False), sort_keys=True)


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def roc_curve(scores: np.ndarray, positives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-vs-rest ROC points swept over all score thresholds."""
    order = np.argsort(-scores, kind="stable")
    pos = positives[order].astype(float)
    tp = np.cumsum(pos)
    fp = np.cumsum(1.0 - pos)
    n_pos, n_neg = tp[-1], fp[-1]
    distinct = np.where(np.diff(scores[order]) != 0)[0]
    take = np.concatenate([distinct, [scores.size - 1]])
    tpr = np.concatenate([[0.0], tp[take] / n_pos])
    fpr = np.concatenate([[0.0], fp[take] / n_neg])
    return fpr, tpr


def _auc(fpr: np.ndarray, tpr: np.ndarray) -> float:
    return float(np.trapezoid(tpr, fpr))


def evaluate(predictions, probabilities, truth, classes, fold_accuracies=None) -> EvalReport:
    """Accuracy, macro precision/recall/F1, confusion matrix, one-vs-rest ROC.

    Classes absent from the truth are excluded from the macro averages and
    listed in excluded_classes. A class with no predicted samples scores
    precision 0 by convention.
    """
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    probabilities = np.asarray(probabilities, dtype=float)
    if predictions.size == 0:
        raise ParameterError("cannot evaluate an empty prediction set")
    if not (predictions.size == truth.size == probabilities.shape[0]):
        raise ParameterError("predictions, probabilities and truth must align")
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, predictions):
        confusion[index[t], index[p]] += 1
    accuracy = float(np.trace(confusion) / confusion.sum())

    per_class = {}
    present, excluded = [], []
    for c in classes:
        i = index[c]
        support = int(confusion[i].sum())
        if support == 0:
            excluded.append(c)
            continue
        present.append(c)
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i].sum() - tp
        precision = float(tp / (tp + fp)) if tp + fp else 0.0
        recall = float(tp / (tp + fn))
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = {
            "precision": precision, "recall": recall, "f1": f1, "support": support,
        }

    roc = {}
    aucs = []
    for c in present:
        pos = (truth == c).astype(float)
        if pos.sum() == 0 or pos.sum() == pos.size:
            continue
        fpr, tpr = roc_curve(probabilities[:, index[c]], pos)
        a = _auc(fpr, tpr)
        roc[c] = {"fpr": fpr.tolist(), "tpr": tpr.tolist(), "auc": a}
        aucs.append(a)

    return EvalReport(
        classes=classes,
        accuracy=accuracy,
        fold_accuracies=list(fold_accuracies or []),
        macro_precision=float(np.mean([per_class[c]["precision"] for c in present])),
        macro_recall=float(np.mean([per_class[c]["recall"] for c in present])),
        macro_f1=float(np.mean([per_class[c]["f1"] for c in present])),
        per_class=per_class,
        confusion=confusion,
        roc=roc,
        macro_auc=float(np.mean(aucs)) if aucs else 0.0,
        excluded_classes=excluded,
    )


# ---------------------------------------------------------------------------
# pipeline runs

@dataclass
class ModalityBundle:
    """Row-aligned feature matrices for the two modalities, plus the
    preprocessed raw trials backing them (needed for raw-signal augmentation)."""

    eeg: FeatureMatrix
    key: FeatureMatrix
    trials: list = field(default_factory=list)   # TrialSample, row-aligned
    scheme: str = "wpt18"

    def __post_init__(self):
        if self.eeg.rows.shape[0] != self.key.rows.shape[0]:
            raise ParameterError("eeg and key matrices must be row-aligned")
        if not np.array_equal(self.eeg.labels, self.key.labels):
            raise ParameterError("eeg and key labels must match row for row")

    def matrix(self, modality: str) -> FeatureMatrix:
        if modality == "eeg":
            return self.eeg
        if modality == "key":
            return self.key
        raise ParameterError(f"unknown modality {modality!r}")


@dataclass(frozen=True)
class SelectionSpec:
    top_k: int
    prune_threshold: float = 0.95
    rank_trees: int = 100


def _prepare_fold_matrix(
    matrix: FeatureMatrix,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    y_train: np.ndarray,
    sel: SelectionSpec | None,
    seed: int,
):
    """Normalize on train, optionally prune + rank + slice to the top-k
    columns; everything derives from training rows only."""
    train = matrix.select_rows(train_idx)
    test = matrix.select_rows(test_idx)
    train_n, stats = minmax_normalize(train)
    test_n, _ = minmax_normalize(test, stats)
    chosen = list(matrix.feature_names)
    if sel is not None:
        pruned_m, _ = selection_mod.prune_correlated(train_n, sel.prune_threshold)
        rank_spec = ModelSpec(kind="forest", n_trees=sel.rank_trees, seed=seed)
        forest = fit(rank_spec, pruned_m.rows, y_train)
        forest.feature_names = list(pruned_m.feature_names)
        ranking = selection_mod.gini_importance(forest)
        k = min(sel.top_k, len(ranking.ranked))
        chosen = [name for name, _ in ranking.ranked[:k]]
        train_n = train_n.select_columns(chosen)
        test_n = test_n.select_columns(chosen)
    return train_n, test_n, chosen, stats


def run_identification(
    data: ModalityBundle,
    modality: str,
    model_spec: ModelSpec,
    cv: CVSpec,
    selection: SelectionSpec | None = None,
) -> EvalReport:
    """Closed-set subject identification with per-fold train-only fitting.

    modality "fused" trains one model per modality and sums their
    probability scores before the argmax.
    """
    y = data.eeg.subjects.copy()
    if np.unique(y).size < 2:
        raise ConfigurationError("identification needs at least 2 subjects")
    folds = stratified_folds(y, cv)
    modalities = ["eeg", "key"] if modality == "fused" else [modality]
    classes = np.unique(y)
    n = y.size
    all_proba = np.zeros((n, classes.size))
    all_pred = np.empty(n, dtype=y.dtype)
    fold_accs = []
    fit_s = predict_s = 0.0
    for f in range(cv.n_folds):
        test_idx = folds.test_folds[f]
        train_idx = folds.train_indices(f, n)
        y_train = y[train_idx]
        proba = np.zeros((test_idx.size, classes.size))
        for mi, m in enumerate(modalities):
            train_n, test_n, _, _ = _prepare_fold_matrix(
                data.matrix(m), train_idx, test_idx, y_train, selection,
                seed=_mix(model_spec.seed, f, mi, 1),
            )
            spec = _reseed(model_spec, _mix(model_spec.seed, f, mi, 2))
            t0 = time.perf_counter()
            model = fit(spec, train_n.rows, y_train)
            t1 = time.perf_counter()
            p = model.predict_proba(test_n.rows)
            t2 = time.perf_counter()
            fit_s += t1 - t0
            predict_s += t2 - t1
            # degenerate single-class models cannot occur here (>= 2 subjects
            # per training split is guaranteed by stratification)
            cols = np.searchsorted(classes, model.classes_)
            proba[:, cols] += p
        pred = classes[np.argmax(proba, axis=1)]
        all_proba[test_idx] = proba / len(modalities)
        all_pred[test_idx] = pred
        fold_accs.append(float(np.mean(pred == y[test_idx])))
    report = evaluate(all_pred, all_proba, y, list(classes), fold_accuracies=fold_accs)
    report.fit_seconds = fit_s
    report.predict_seconds = predict_s
    return report


GENUINE, IMPOSTER = 1, 0


def run_personalized(
    data: ModalityBundle,
    subject: int,
    model_spec: ModelSpec,
    cv: CVSpec,
    augment_spec: AugmentSpec | None = None,
    modality: str = "eeg",
) -> EvalReport:
    """Genuine-vs-imposter authentication for one subject.

    Augmentation (when requested) sees only training-fold genuine rows:
    feature-space methods run on the normalized training matrix, raw-signal
    methods synthesize trials before feature extraction. Reported metrics
    treat the genuine class as positive.
    """
    subjects = data.eeg.subjects
    if subject not in set(subjects.tolist()):
        raise ConfigurationError(f"subject {subject} not present in the dataset")
    if augment_spec is not None and augment_spec.is_raw_signal and modality != "eeg":
        raise ParameterError("raw-signal augmentation applies to the eeg modality only")
    y = np.where(subjects == subject, GENUINE, IMPOSTER)
    folds = stratified_folds(y, cv)
    modalities = ["eeg", "key"] if modality == "fused" else [modality]
    n = y.size
    all_proba = np.zeros((n, 2))
    all_pred = np.empty(n, dtype=int)
    fold_accs = []
    fit_s = predict_s = 0.0
    for f in range(cv.n_folds):
        test_idx = folds.test_folds[f]
        train_idx = folds.train_indices(f, n)
        y_train = y[train_idx]
        n_genuine = int((y_train == GENUINE).sum())
        n_imposter = int((y_train == IMPOSTER).sum())
        proba = np.zeros((test_idx.size, 2))
        for mi, m in enumerate(modalities):
            matrix = data.matrix(m)
            train = matrix.select_rows(train_idx)
            test = matrix.select_rows(test_idx)
            X_train, y_aug = train.rows, y_train
            if augment_spec is not None and augment_spec.is_raw_signal:
                target = augment_spec.target_count or n_imposter
                n_new = max(0, target - n_genuine)
                sources = [
                    data.trials[i].eeg for i in train_idx if y[i] == GENUINE
                ]
                synth_trials = augment_trials(augment_spec, sources, n_new)
                synth_rows = np.vstack(
                    [eeg_feature_vector(t, data.scheme).values for t in synth_trials]
                ) if n_new else np.empty((0, X_train.shape[1]))
                X_train = np.vstack([X_train, synth_rows])
                y_aug = np.concatenate([y_train, np.full(n_new, GENUINE)])
            train_m = FeatureMatrix(
                list(matrix.feature_names), X_train,
                np.zeros((X_train.shape[0], 3), dtype=np.int64),
            )
            train_n, stats = minmax_normalize(train_m)
            test_n, _ = minmax_normalize(test, stats)
            X_fit, y_fit = train_n.rows, y_aug
            if augment_spec is not None and not augment_spec.is_raw_signal:
                X_fit, y_fit = augment_features(
                    augment_spec, X_fit, y_fit, GENUINE, default_target=n_imposter
                )
            spec = _reseed(model_spec, _mix(model_spec.seed, subject, f, mi))
            t0 = time.perf_counter()
            model = fit(spec, X_fit, y_fit)
            t1 = time.perf_counter()
            p = model.predict_proba(test_n.rows)
            t2 = time.perf_counter()
            fit_s += t1 - t0
            predict_s += t2 - t1
            for ci, c in enumerate(model.classes_):
                proba[:, int(c)] += p[:, ci]
        pred = np.argmax(proba, axis=1)
        all_proba[test_idx] = proba / len(modalities)
        all_pred[test_idx] = pred
        fold_accs.append(float(np.mean(pred == y[test_idx])))
    report = evaluate(all_pred, all_proba, y, [IMPOSTER, GENUINE], fold_accuracies=fold_accs)
    report.fit_seconds = fit_s
    report.predict_seconds = predict_s
    return report


def _mix(*parts: int) -> int:
    acc = 0
    for p in parts:
        acc = (acc * 1000003 + int(p) + 1) % (2 ** 31)
    return acc


def _reseed(spec: ModelSpec, seed: int) -> ModelSpec:
    return ModelSpec(
        kind=spec.kind, n_trees=spec.n_trees, min_samples_split=spec.min_samples_split,
        max_features=spec.max_features, bootstrap=spec.bootstrap, k=spec.k,
        ridge=spec.ridge, seed=seed,
    )
