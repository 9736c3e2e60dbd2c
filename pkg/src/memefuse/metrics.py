"""Multi-label evaluation: micro-averaged precision/recall/F1 with
per-class counts, macro diagnostics, and the four-topology comparison
table."""

from dataclasses import dataclass

import numpy as np

N_CLASSES = 22

TOPOLOGY_ORDER = ("Concat", "Early", "Late", "MFAS")

# micro-F1 previously reported on SemEval-2021 Task 6 test data for these
# topologies over pretrained text/image embeddings; shown in reports as a
# non-binding reference column
REFERENCE_MICRO_F1 = {
    "Concat": 0.4983,
    "Early": 0.5058,
    "Late": 0.5407,
    "MFAS": 0.5698,
}


@dataclass(frozen=True)
class MetricsReport:
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: tuple
    n_examples: int


def _prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def micro_prf(preds, golds):
    """MetricsReport over aligned prediction/gold label-vector lists.

    TP/FP/FN are summed over every (example, class) cell; all 0-denominator
    ratios are defined as 0.
    """
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions vs {len(golds)} golds")
    if len(preds) == 0:
        zeros = tuple((0, 0, 0) for _ in range(N_CLASSES))
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, zeros, 0)
    p = np.asarray(preds, dtype=np.uint8)
    g = np.asarray(golds, dtype=np.uint8)
    if p.shape[1] != N_CLASSES or g.shape[1] != N_CLASSES:
        raise ValueError(f"label vectors must have length {N_CLASSES}")
    tp = ((p == 1) & (g == 1)).sum(axis=0)
    fp = ((p == 1) & (g == 0)).sum(axis=0)
    fn = ((p == 0) & (g == 1)).sum(axis=0)
    micro = _prf(int(tp.sum()), int(fp.sum()), int(fn.sum()))
    per_class = [_prf(int(tp[c]), int(fp[c]), int(fn[c])) for c in range(N_CLASSES)]
    macro = tuple(float(np.mean([pc[j] for pc in per_class])) for j in range(3))
    counts = tuple((int(tp[c]), int(fp[c]), int(fn[c])) for c in range(N_CLASSES))
    return MetricsReport(
        micro_precision=float(micro[0]),
        micro_recall=float(micro[1]),
        micro_f1=float(micro[2]),
        macro_precision=macro[0],
        macro_recall=macro[1],
        macro_f1=macro[2],
        per_class=counts,
        n_examples=len(preds),
    )


def comparison_report(results):
    """Plain-text table plus a JSON-ready payload, one row per topology.

    Rows follow the fixed order Concat, Early, Late, MFAS (present entries
    only); metrics print at 4 decimal places; the reference column repeats
    previously reported micro-F1 for orientation, not as a target.
    """
    if not results:
        raise ValueError("comparison_report requires at least one entry")
    known = {k: v for k, v in results.items()}
    for tag in known:
        if tag not in TOPOLOGY_ORDER:
            raise ValueError(f"unknown topology {tag!r}")
    rows = [tag for tag in TOPOLOGY_ORDER if tag in known]
    header = f"{'topology':<10} {'precision':>9} {'recall':>9} {'f1':>9} {'reference_f1':>12}"
    lines = [header]
    payload = {}
    for tag in rows:
        rep = known[tag]
        ref = REFERENCE_MICRO_F1[tag]
        lines.append(
            f"{tag:<10} {rep.micro_precision:>9.4f} {rep.micro_recall:>9.4f} "
            f"{rep.micro_f1:>9.4f} {ref:>12.4f}"
        )
        payload[tag] = {
            "precision": round(rep.micro_precision, 4),
            "recall": round(rep.micro_recall, 4),
            "f1": round(rep.micro_f1, 4),
            "macro_f1": round(rep.macro_f1, 4),
            "reference_f1": ref,
            "per_class": [list(counts) for counts in rep.per_class],
            "n_examples": rep.n_examples,
        }
    lines.append("reference_f1: micro-F1 previously reported on SemEval-2021 Task 6 (not a target)")
    return "\n".join(lines), payload
