"""Command-line interface wiring the pipeline together.

Subcommands: preprocess (text normalization), featurize (baseline feature
archive), train, eval, predict, and compare (all four topologies on a
shared config).  Exit codes: 0 success, 1 user or configuration error,
2 internal invariant violation.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fusion, imbalance, metrics
from .archive import ArchiveError, read_archive, write_archive
from .dataset import (
    DatasetError,
    binarize,
    class_weights,
    default_vocabulary,
    load_dataset,
    split_stats,
)
from .features import build_bundle, fit_idf
from .fusion import CheckpointError, Rng, read_checkpoint, write_checkpoint
from .images import ImageFormatError, read_netpbm, resize_image
from .textnorm import (
    ContractionDict,
    PreprocessConfig,
    SegmentLexicon,
    default_contractions,
    default_lexicon,
    preprocess,
)

IMAGE_SIZE = 224


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_preprocess(args):
    vocab = default_vocabulary()
    cdict = ContractionDict.from_file(args.dict) if args.dict else default_contractions()
    lexicon = SegmentLexicon.from_file(args.lexicon) if args.lexicon else default_lexicon()
    records = load_dataset(args.dataset, vocab)
    pconfig = PreprocessConfig()
    out = []
    for rec in records:
        out.append(
            {
                "id": rec.id,
                "text": rec.text,
                "image": rec.image_ref,
                "labels": [vocab.names[c] for c in sorted(rec.labels)],
                "clean_text": preprocess(rec.text, pconfig, cdict, lexicon),
            }
        )
    _write_json(args.out, out)
    print(f"preprocessed {len(out)} records -> {args.out}")
    return 0


def cmd_featurize(args):
    cfg = cfgmod.load_config(args.config)
    fcfg = cfgmod.features_config(cfg)
    vocab = default_vocabulary()
    records = load_dataset(args.dataset, vocab)
    for rec in records:
        if rec.clean_text is None:
            raise CliError(
                f"record {rec.id}: missing clean_text (run the preprocess command first)"
            )
    idf = None
    if fcfg.weighting == "tfidf":
        idf = fit_idf((rec.clean_text for rec in records), fcfg)

    images_dir = Path(args.images_dir)
    bundles = {}
    for rec in records:
        img_path = images_dir / rec.image_ref
        if not img_path.is_file():
            raise CliError(f"record {rec.id}: image file not found: {img_path}")
        img = resize_image(read_netpbm(img_path), IMAGE_SIZE, IMAGE_SIZE)
        bundles[rec.id] = build_bundle(rec.clean_text, img, fcfg, idf=idf)

    provenance = {
        "producer": "baseline-featurizer",
        "features": {
            "dim": fcfg.dim,
            "hash_seed": fcfg.hash_seed,
            "n_min": fcfg.n_min,
            "n_max": fcfg.n_max,
            "weighting": fcfg.weighting,
        },
        "image_size": IMAGE_SIZE,
    }
    write_archive(bundles, args.out_archive, provenance=provenance)
    if bundles:
        dims = next(iter(bundles.values())).dims()
        print(f"featurized {len(bundles)} records, dims {dims} -> {args.out_archive}")
    else:
        print(f"featurized 0 records -> {args.out_archive}")
    return 0


def _load_pairs(dataset_path, archive_path, vocab):
    records = load_dataset(dataset_path, vocab)
    stored = read_archive(archive_path)
    bundles, labels = {}, {}
    for rec in records:
        if rec.id not in stored:
            raise CliError(f"record {rec.id}: no bundle in archive {archive_path}")
        bundles[rec.id] = stored[rec.id]
        labels[rec.id] = binarize(rec)
    return records, bundles, labels


def _apply_imbalance(bundles, labels, method, rcfg):
    """Resample the training pairs; synthetic entries get generated ids."""
    if method in ("none", "class_weights"):
        return bundles, labels
    ids = sorted(bundles)
    data = [(bundles[i], labels[i]) for i in ids]
    if method in ("tomek", "nearmiss"):
        if method == "tomek":
            kept = [i for i in range(len(ids)) if i not in set(imbalance.tomek_links(data, rcfg))]
        else:
            kept = imbalance.near_miss(data, rcfg)
        return (
            {ids[i]: data[i][0] for i in kept},
            {ids[i]: data[i][1] for i in kept},
        )
    resampled = imbalance.apply_resample(data, rcfg)
    out_bundles, out_labels = {}, {}
    for idx, (bundle, lv) in enumerate(resampled):
        rid = ids[idx] if idx < len(ids) else f"{method}-{idx:06d}"
        out_bundles[rid] = bundle
        out_labels[rid] = lv
    return out_bundles, out_labels


def _train_one(topology_tag, cfg, bundles, labels, dev_bundles, dev_labels, records):
    if not bundles:
        raise CliError("training dataset is empty")
    method, rcfg = cfgmod.imbalance_config(cfg)
    weight_override = None
    if method == "class_weights":
        weight_override = class_weights(split_stats(records))
    tconfig = cfgmod.train_config(cfg, class_weight_override=weight_override)
    bundles, labels = _apply_imbalance(bundles, labels, method, rcfg)
    dims = next(iter(bundles.values())).dims()
    model = fusion.build(topology_tag, dims, Rng(tconfig.seed), **cfgmod.model_kwargs(cfg))
    return fusion.train(model, bundles, labels, tconfig, dev_bundles, dev_labels)


def _load_split(cfg, prefix, vocab, required=False):
    ds = cfgmod.get_path(cfg, f"{prefix}_dataset", required=required)
    ar = cfgmod.get_path(cfg, f"{prefix}_archive", required=required)
    if ds is None and ar is None:
        return None, None, None
    if ds is None or ar is None:
        raise CliError(f"paths.{prefix}_dataset and paths.{prefix}_archive must be given together")
    return _load_pairs(ds, ar, vocab)


def cmd_train(args):
    cfg = cfgmod.load_config(args.config)
    topology_tag = cfgmod.topology(cfg)
    out_dir = Path(cfgmod.get_path(cfg, "out_dir", required=True))
    vocab = default_vocabulary()
    records, bundles, labels = _load_split(cfg, "train", vocab, required=True)
    _, dev_bundles, dev_labels = _load_split(cfg, "dev", vocab)

    model, history = _train_one(
        topology_tag, cfg, bundles, labels, dev_bundles, dev_labels, records
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / "checkpoint.mfnet"
    write_checkpoint(model, ckpt)
    _write_json(out_dir / "history.json", history)
    last = history[-1] if history else {}
    print(
        f"trained {topology_tag} for {len(history)} epochs "
        f"(final train loss {last.get('train_loss', float('nan')):.6f}) -> {ckpt}"
    )
    return 0


def _evaluate(model, records, bundles, threshold):
    preds = [fusion.predict(model, bundles[rec.id], threshold) for rec in records]
    golds = [binarize(rec) for rec in records]
    return metrics.micro_prf(preds, golds)


def _check_dims(model, bundles, archive_path):
    dims = next(iter(bundles.values())).dims() if bundles else None
    if dims is not None and tuple(model.dims) != tuple(dims):
        raise CliError(
            f"checkpoint dims {tuple(model.dims)} != archive dims {tuple(dims)} "
            f"({archive_path})"
        )


def _report_payload(rep, vocab, threshold):
    per_class = [
        {"technique": vocab.names[c], "tp": tp, "fp": fp, "fn": fn}
        for c, (tp, fp, fn) in enumerate(rep.per_class)
    ]
    return {
        "threshold": threshold,
        "n_examples": rep.n_examples,
        "micro": {
            "precision": round(rep.micro_precision, 4),
            "recall": round(rep.micro_recall, 4),
            "f1": round(rep.micro_f1, 4),
        },
        "macro": {
            "precision": round(rep.macro_precision, 4),
            "recall": round(rep.macro_recall, 4),
            "f1": round(rep.macro_f1, 4),
        },
        "per_class": per_class,
    }


def cmd_eval(args):
    model = read_checkpoint(args.checkpoint)
    bundles = read_archive(args.archive)
    _check_dims(model, bundles, args.archive)
    vocab = default_vocabulary()
    records = load_dataset(args.dataset, vocab)
    for rec in records:
        if rec.id not in bundles:
            raise CliError(f"record {rec.id}: no bundle in archive {args.archive}")
    rep = _evaluate(model, records, bundles, args.threshold)
    print(f"threshold {args.threshold}  examples {rep.n_examples}")
    print(
        f"micro  precision {rep.micro_precision:.4f}  recall {rep.micro_recall:.4f}  "
        f"f1 {rep.micro_f1:.4f}"
    )
    print(
        f"macro  precision {rep.macro_precision:.4f}  recall {rep.macro_recall:.4f}  "
        f"f1 {rep.macro_f1:.4f}"
    )
    print(f"{'technique':<28} {'tp':>4} {'fp':>4} {'fn':>4}")
    for c, (tp, fp, fn) in enumerate(rep.per_class):
        print(f"{vocab.names[c]:<28} {tp:>4} {fp:>4} {fn:>4}")
    if args.out:
        _write_json(args.out, _report_payload(rep, vocab, args.threshold))
        print(f"report -> {args.out}")
    return 0


def cmd_predict(args):
    model = read_checkpoint(args.checkpoint)
    bundles = read_archive(args.archive)
    _check_dims(model, bundles, args.archive)
    vocab = default_vocabulary()
    out = {}
    for rid in sorted(bundles):
        bits = fusion.predict(model, bundles[rid], args.threshold)
        out[rid] = {
            "bits": [int(b) for b in bits],
            "techniques": [vocab.names[c] for c in np.flatnonzero(bits)],
        }
    if args.out:
        _write_json(args.out, out)
        print(f"predictions for {len(out)} records -> {args.out}")
    else:
        json.dump(out, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def cmd_compare(args):
    cfg = cfgmod.load_config(args.config)
    tags = [fusion.canonical_topology(t) for t in args.topologies.split(",") if t]
    if not tags:
        raise CliError("no topologies given")
    vocab = default_vocabulary()
    records, bundles, labels = _load_split(cfg, "train", vocab, required=True)
    _, dev_bundles, dev_labels = _load_split(cfg, "dev", vocab)
    test_records, test_bundles, _ = _load_split(cfg, "test", vocab, required=True)
    threshold = float(cfg.get("threshold", 0.5))

    results = {}
    for tag in tags:
        model, _ = _train_one(tag, cfg, bundles, labels, dev_bundles, dev_labels, records)
        results[tag] = _evaluate(model, test_records, test_bundles, threshold)
    text, payload = metrics.comparison_report(results)
    print(text)
    out_dir = cfgmod.get_path(cfg, "out_dir")
    if out_dir:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "comparison.json", payload)
        (out_dir / "comparison.txt").write_text(text + "\n", encoding="utf-8")
        print(f"report -> {out_dir / 'comparison.json'}")
    return 0


def build_parser():
    parser = _Parser(prog="memefuse", description=__doc__)
    sub = parser.add_subparsers(dest="cmd")

    p = sub.add_parser("preprocess", help="normalize record text into clean_text")
    p.add_argument("--dataset", required=True)
    p.add_argument("--dict", help="contraction table (token<TAB>expansion); packaged default")
    p.add_argument("--lexicon", help="hashtag-segmentation wordlist; packaged default")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("featurize", help="write a baseline feature archive")
    p.add_argument("--dataset", required=True, help="preprocessed dataset JSON")
    p.add_argument("--images-dir", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-archive", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train one topology from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against gold labels")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="emit label predictions for an archive")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("compare", help="train and evaluate several topologies")
    p.add_argument("--config", required=True)
    p.add_argument("--topologies", default="concat,early,late,mfas")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_help(sys.stderr)
            return 1
        return args.func(args)
    except (
        CliError,
        cfgmod.ConfigError,
        DatasetError,
        ArchiveError,
        CheckpointError,
        ImageFormatError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
