"""Command-line entry points.

    biokey synth     generate a seeded synthetic dataset
    biokey extract   preprocess + featurize a dataset into CSV matrices
    biokey rank      correlation-prune and impurity-rank features
    biokey train     train a forest on extracted features
    biokey eval      cross-validated identification / personalized reports
    biokey template  build a gallery and emit CMC + FAR/FRR curves
    biokey bench     template-vs-classifier latency comparison
    biokey serve     run the local enrollment/authentication service
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataio, learn, matcher, pipeline, select
from .augment import AugmentSpec
from .features import minmax_normalize


def _p(msg: str):
    print(msg, flush=True)


def _load_bundle(args) -> learn.ModalityBundle:
    return pipeline.load_bundle(args.data, scheme=args.scheme)


def _fused_matrix(bundle: learn.ModalityBundle) -> dataio.FeatureMatrix:
    rows = np.hstack([bundle.eeg.rows, bundle.key.rows])
    names = list(bundle.eeg.feature_names) + list(bundle.key.feature_names)
    return dataio.FeatureMatrix(names, rows, bundle.eeg.labels.copy())


def _matrix_for(bundle: learn.ModalityBundle, modality: str) -> dataio.FeatureMatrix:
    if modality == "fused":
        return _fused_matrix(bundle)
    return bundle.matrix(modality)


def cmd_synth(args):
    manifest = dataio.DatasetManifest(
        subjects=args.subjects,
        sessions=args.sessions,
        trials_per_session=args.trials,
        seed=args.seed,
    )
    out = dataio.synth_dataset(manifest, args.out)
    n = len(dataio.iter_dataset(out))
    _p(f"wrote {n} trials under {out}")


def cmd_extract(args):
    bundle = _load_bundle(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_feature_matrix(bundle.eeg, out / "eeg_features.csv")
    dataio.write_feature_matrix(bundle.key, out / "key_features.csv")
    _p(f"extracted {bundle.eeg.rows.shape[0]} trials "
       f"({bundle.eeg.rows.shape[1]} EEG + {bundle.key.rows.shape[1]} keystroke features)")


def cmd_rank(args):
    m = dataio.read_feature_matrix(args.features)
    norm, _ = minmax_normalize(m)
    pruned_m, pruned = select.prune_correlated(norm)
    spec = learn.ModelSpec(kind="forest", n_trees=args.trees, seed=args.seed)
    forest = learn.fit(spec, pruned_m.rows, pruned_m.subjects)
    forest.feature_names = list(pruned_m.feature_names)
    ranking = select.gini_importance(forest)
    ranking.pruned = pruned
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ranking.json").write_text(select.ranking_to_json(ranking), encoding="utf-8")
    (out / "ranking.tsv").write_text(select.ranking_to_tsv(ranking), encoding="utf-8")
    top = ", ".join(n for n, _ in ranking.ranked[:5])
    _p(f"pruned {len(pruned)} correlated features; top-5: {top}")


def cmd_train(args):
    bundle = _load_bundle(args)
    m = _matrix_for(bundle, args.modality)
    norm, stats = minmax_normalize(m)
    spec = learn.ModelSpec(kind="forest", n_trees=args.trees, seed=args.seed)
    model = learn.fit(spec, norm.rows, norm.subjects)
    model.feature_names = list(norm.feature_names)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = json.loads(model.to_json())
    payload["norm_stats"] = {"min": stats[0].tolist(), "max": stats[1].tolist()}
    out.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    _p(f"trained {args.modality} forest ({args.trees} trees) -> {out}")


def cmd_eval(args):
    bundle = _load_bundle(args)
    cv = learn.CVSpec(n_folds=args.folds, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.method == "template":
        _run_template_eval(bundle, args.modality, args.folds, args.seed, out)
        return
    if args.mode == "identify":
        spec = learn.ModelSpec(kind=args.model, n_trees=args.trees, seed=args.seed)
        report = learn.run_identification(bundle, args.modality, spec, cv)
        _p(f"identification[{args.modality}] accuracy={report.accuracy:.4f} "
           f"macro_f1={report.macro_f1:.4f}")
    else:
        spec = learn.ModelSpec(kind=args.model, n_trees=args.trees, seed=args.seed)
        aug = None if args.augment == "none" else AugmentSpec(method=args.augment, seed=args.seed)
        subjects = (
            sorted(set(bundle.eeg.subjects.tolist()))
            if args.subject == 0 else [args.subject]
        )
        reports = []
        for s in subjects:
            rep = learn.run_personalized(bundle, s, spec, cv, aug, modality=args.modality)
            reports.append(rep)
            _p(f"subject {s}: accuracy={rep.accuracy:.4f} "
               f"recall={rep.per_class[learn.GENUINE]['recall']:.4f}")
        report = reports[0] if len(reports) == 1 else _mean_personalized(reports)
        _p(f"personalized[{args.modality}, augment={args.augment}] "
           f"mean recall={report.macro_recall:.4f}")
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2), encoding="utf-8"
    )
    _write_confusion_tsv(report, out / "confusion.tsv")
    _write_roc_tsv(report, out / "roc.tsv")
    _p(f"report written to {out}")


def _mean_personalized(reports):
    # keep the first report's structure; swap in cross-subject mean metrics
    first = reports[0]
    first.accuracy = float(np.mean([r.accuracy for r in reports]))
    first.macro_precision = float(np.mean([r.macro_precision for r in reports]))
    first.macro_recall = float(np.mean([r.macro_recall for r in reports]))
    first.macro_f1 = float(np.mean([r.macro_f1 for r in reports]))
    return first


def _write_confusion_tsv(report, path: Path):
    lines = ["truth\\pred\t" + "\t".join(str(c) for c in report.classes)]
    for c, row in zip(report.classes, report.confusion):
        lines.append(str(c) + "\t" + "\t".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_roc_tsv(report, path: Path):
    lines = ["class\tfpr\ttpr"]
    for c, pts in report.roc.items():
        for fpr, tpr in zip(pts["fpr"], pts["tpr"]):
            lines.append(f"{c}\t{fpr!r}\t{tpr!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_template(args):
    bundle = _load_bundle(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _run_template_eval(bundle, args.modality, args.folds, args.seed, out)


def _run_template_eval(bundle, modality: str, n_folds: int, seed: int, out: Path):
    m = _matrix_for(bundle, modality)
    y = m.subjects
    folds = learn.stratified_folds(y, learn.CVSpec(n_folds=n_folds, seed=seed))
    test_idx = folds.test_folds[0]
    train_idx = folds.train_indices(0, y.size)
    train_n, stats = minmax_normalize(m.select_rows(train_idx))
    probe_n, _ = minmax_normalize(m.select_rows(test_idx), stats)
    gallery = matcher.build_gallery(train_n)
    (out / "gallery.json").write_text(gallery.to_json(), encoding="utf-8")
    mm = matcher.match_matrix(probe_n, gallery)
    curve, ranks = matcher.cmc(mm, probe_n.subjects)
    (out / "cmc.tsv").write_text(matcher.cmc_to_tsv(curve), encoding="utf-8")
    genuine, imposter = [], []
    per_subject: dict[int, tuple[list, list]] = {sid: ([], []) for sid in mm.subject_order}
    order = {sid: i for i, sid in enumerate(mm.subject_order)}
    for p, true_sid in enumerate(probe_n.subjects):
        for sid, col in order.items():
            d = mm.distances[p, col]
            (genuine if sid == true_sid else imposter).append(d)
            per_subject[sid][0 if sid == true_sid else 1].append(d)
    rates = matcher.far_frr_eer(genuine, imposter, bit_length=mm.bit_length)
    (out / "far_frr.tsv").write_text(matcher.error_rates_to_tsv(rates), encoding="utf-8")
    eer_per_subject = {
        str(sid): matcher.far_frr_eer(g, i, bit_length=mm.bit_length).eer
        for sid, (g, i) in per_subject.items()
        if g and i
    }
    summary = {
        "rank1": curve[0], "rank2": curve[1] if curve.size > 1 else 1.0,
        "rank3": curve[2] if curve.size > 2 else 1.0,
        "eer": rates.eer, "eer_threshold": rates.eer_threshold,
        "eer_per_subject": eer_per_subject,
        "mean_subject_eer": float(np.mean(list(eer_per_subject.values()))),
        "modality": modality, "gallery_size": int(train_idx.size),
        "probes": int(test_idx.size),
    }
    (out / "template_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
    )
    # report.json feeds the web UI's curve view when --out is a service
    # state directory
    (out / "report.json").write_text(
        json.dumps(
            {
                "kind": "template",
                "summary": summary,
                "cmc": curve.tolist(),
                "far_frr": {
                    "thresholds": rates.thresholds.tolist(),
                    "far": rates.far.tolist(),
                    "frr": rates.frr.tolist(),
                },
            },
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    _p(f"template[{modality}] rank1={curve[0]:.4f} EER={rates.eer:.4f} -> {out}")


def cmd_bench(args):
    bundle = _load_bundle(args)
    m = _matrix_for(bundle, args.modality)
    norm, _ = minmax_normalize(m)
    gallery = matcher.build_gallery(norm)
    spec = learn.ModelSpec(kind="forest", n_trees=args.trees, seed=args.seed)
    forest = learn.fit(spec, norm.rows, norm.subjects)
    report = matcher.benchmark(gallery, forest, norm, n_queries=args.queries)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    _p(f"template {report.template_mean_ms:.3f} ms vs classifier "
       f"{report.classifier_mean_ms:.3f} ms per query ({report.speedup:.1f}x) -> {out}")


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    ui_dir = args.ui_dir
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(candidate) if candidate.exists() else None
    app = create_app(args.state_dir, ui_dir=ui_dir)
    _p(f"serving on http://127.0.0.1:{args.port} (state: {args.state_dir})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biokey", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--seed", type=int, default=42)
        if data:
            p.add_argument("--data", required=True, help="dataset directory")
            p.add_argument("--scheme", choices=["wpt18", "dwt7"], default="wpt18")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--sessions", type=int, default=4)
    p.add_argument("--trials", type=int, default=15)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("extract", help="preprocess and featurize a dataset")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("rank", help="prune + rank features from a matrix CSV")
    p.add_argument("--features", required=True, help="feature matrix CSV (from extract)")
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("train", help="train a forest on a dataset")
    common(p)
    p.add_argument("--modality", choices=["eeg", "key", "fused"], default="fused")
    p.add_argument("--trees", type=int, default=learn.FOREST_TREES)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="cross-validated evaluation")
    common(p)
    p.add_argument("--modality", choices=["eeg", "key", "fused"], default="fused")
    p.add_argument("--method", choices=["classify", "template"], default="classify")
    p.add_argument("--mode", choices=["identify", "personalized"], default="identify")
    p.add_argument("--model", choices=["cart", "forest", "knn", "lda"], default="forest")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--trees", type=int, default=150)
    p.add_argument("--augment", choices=["none", "jitter", "timew", "smote", "adasyn"],
                   default="none")
    p.add_argument("--subject", type=int, default=0, help="0 = all subjects (personalized mode)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("template", help="binary-template gallery + CMC/EER curves")
    common(p)
    p.add_argument("--modality", choices=["eeg", "key", "fused"], default="fused")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_template)

    p = sub.add_parser("bench", help="template vs classifier latency")
    common(p)
    p.add_argument("--modality", choices=["eeg", "key", "fused"], default="fused")
    p.add_argument("--trees", type=int, default=learn.FOREST_TREES)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--port", type=int, default=8714)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except Exception as exc:  # surface as a clean CLI error
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
