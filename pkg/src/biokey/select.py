"""Feature selection: correlation pruning, forest impurity ranking, and the
accuracy-vs-feature-count sweep.

Everything operates on training rows only; the caller is responsible for
never passing test rows in (the learn module's fold loops guarantee this).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataio import FeatureMatrix
from .errors import ParameterError, StateError

PRUNE_THRESHOLD = 0.95
SATURATION_MARGIN = 0.005  # half a percentage point


@dataclass
class FeatureRanking:
    ranked: list[tuple[str, float]]                 # (name, importance), descending
    pruned: list[tuple[str, str]] = field(default_factory=list)  # (dropped, partner)

    def names(self) -> list[str]:
        return [n for n, _ in self.ranked]


def correlation_matrix(rows: np.ndarray) -> np.ndarray:
    """Pearson correlations between columns; constant columns correlate 0."""
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.corrcoef(rows, rowvar=False)
    r = np.atleast_2d(r)
    r[~np.isfinite(r)] = 0.0
    np.fill_diagonal(r, 1.0)
    return r


def prune_correlated(
    m: FeatureMatrix, threshold: float = PRUNE_THRESHOLD
) -> tuple[FeatureMatrix, list[tuple[str, str]]]:
    """Drop one member of every feature pair with |r| above the threshold.

    Pairs are visited in descending |r|; within a pair the member with the
    larger mean |r| to the remaining features is dropped (tie: the later
    column). The surviving matrix has no pair above the threshold.
    """
    if m.rows.shape[0] < 2:
        raise ParameterError("correlation pruning needs at least 2 rows")
    d = len(m.feature_names)
    corr = np.abs(correlation_matrix(m.rows))
    iu, ju = np.triu_indices(d, k=1)
    over = corr[iu, ju] > threshold
    pairs = sorted(
        zip(corr[iu[over], ju[over]], iu[over], ju[over]),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    intact = np.ones(d, dtype=bool)
    pruned: list[tuple[str, str]] = []
    for _, i, j in pairs:
        if not (intact[i] and intact[j]):
            continue

        def mean_abs_corr(col: int) -> float:
            others = intact.copy()
            others[col] = False
            return float(corr[col, others].mean()) if others.any() else 0.0

        mi, mj = mean_abs_corr(i), mean_abs_corr(j)
        drop, keep = (j, i) if mj >= mi else (i, j)  # tie drops the later column
        intact[drop] = False
        pruned.append((m.feature_names[drop], m.feature_names[keep]))
    kept = [n for n, ok in zip(m.feature_names, intact) if ok]
    return m.select_columns(kept), pruned


def gini_importance(forest) -> FeatureRanking:
    """Mean-decrease-impurity ranking from a forest's stored node counts.

    Per node m splitting on feature k: contribution w_m * (i_m - sum_j w_j i_j)
    with w_m the node's sample count over the root's, and child weights
    relative to the node. Tree sums are averaged and normalized to 1.
    """
    trees = getattr(forest, "trees", None)
    if not trees:
        raise StateError("forest has no trained trees")
    names = forest.feature_names or [f"f{i}" for i in range(forest.n_features_)]
    totals = np.zeros(len(names))
    for tree in trees:
        n_root = tree.counts[0].sum()
        for node in range(tree.n_nodes):
            f = int(tree.feature[node])
            if f < 0:
                continue
            c = tree.counts[node]
            n_m = c.sum()
            i_m = _gini(c)
            acc = i_m
            for child in (int(tree.left[node]), int(tree.right[node])):
                cc = tree.counts[child]
                acc -= (cc.sum() / n_m) * _gini(cc)
            totals[f] += (n_m / n_root) * acc
    totals /= len(trees)
    if totals.sum() > 0:
        totals = totals / totals.sum()
    order = np.lexsort((np.arange(len(names)), -totals))
    return FeatureRanking([(names[i], float(totals[i])) for i in order])


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(np.sum(p * (1.0 - p)))


@dataclass
class SweepResult:
    accuracy_by_k: dict[int, float]
    k_star: int
    clipped: list[int] = field(default_factory=list)


def sweep_top_k(m: FeatureMatrix, labels, ranking: FeatureRanking, k_grid, cv_spec, model_spec) -> SweepResult:
    """Validation accuracy for each feature-count k; k* is the smallest k
    whose mean accuracy is within half a point of the grid maximum.

    Models train on the training split minus its designated validation
    subset and are scored on that subset, so the test folds stay untouched.
    """
    from . import learn  # deferred: learn imports this module

    labels = np.asarray(labels)
    d = len(ranking.ranked)
    clipped = [k for k in k_grid if k > d]
    ks = sorted({min(int(k), d) for k in k_grid if k >= 1})
    if not ks:
        raise ParameterError("empty k grid")
    folds = learn.stratified_folds(labels, cv_spec)
    n = labels.size
    ranked_names = ranking.names()
    acc_by_k = {k: [] for k in ks}
    for f in range(cv_spec.n_folds):
        val_idx = folds.validation[f]
        train_idx = np.setdiff1d(folds.train_indices(f, n), val_idx)
        from .features import minmax_normalize

        train_m = m.select_rows(train_idx)
        val_m = m.select_rows(val_idx)
        train_n, stats = minmax_normalize(train_m)
        val_n, _ = minmax_normalize(val_m, stats)
        for k in ks:
            cols = ranked_names[:k]
            sub_train = train_n.select_columns(cols)
            sub_val = val_n.select_columns(cols)
            model = learn.fit(model_spec, sub_train.rows, labels[train_idx])
            pred = model.predict(sub_val.rows)
            acc_by_k[k].append(float(np.mean(pred == labels[val_idx])))
    mean_acc = {k: float(np.mean(v)) for k, v in acc_by_k.items()}
    best = max(mean_acc.values())
    k_star = min(k for k, a in mean_acc.items() if a >= best - SATURATION_MARGIN)
    return SweepResult(mean_acc, k_star, clipped)


def ranking_to_json(ranking: FeatureRanking) -> str:
    import json

    return json.dumps(
        {
            "ranked": [{"name": n, "importance": v} for n, v in ranking.ranked],
            "pruned": [{"dropped": a, "partner": b} for a, b in ranking.pruned],
        },
        indent=2,
        sort_keys=True,
    )


def ranking_to_tsv(ranking: FeatureRanking) -> str:
    lines = ["rank\tname\timportance"]
    for i, (n, v) in enumerate(ranking.ranked, start=1):
        lines.append(f"{i}\t{n}\t{v!r}")
    return "\n".join(lines) + "\n"
