"""Dataset-level class-imbalance remedies over (FeatureBundle, LabelVector)
pairs: random oversampling, SMOTE, Tomek-link cleaning, and NearMiss-1.

The underlying algorithms are single-label; they are adapted to the
multi-label setting by projecting to has-label/lacks-label per target
label.  Synthetic and duplicated examples copy the seed example's full
label vector; cleaning methods never drop an example that carries any
target label.  All methods are deterministic under a fixed seed (ties
break toward the smaller index).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .archive import make_bundle
from .kernels import pairwise_sqdist
from .nn import Rng

N_CLASSES = 22
METHODS = ("oversample", "smote", "tomek", "nearmiss")


@dataclass(frozen=True)
class ResampleConfig:
    method: str
    k: int = 5
    target_labels: tuple | None = None
    count_threshold: int = 20
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; valid: {', '.join(METHODS)}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.target_labels is not None:
            labels = tuple(int(c) for c in self.target_labels)
            if len(set(labels)) != len(labels):
                raise ValueError("duplicate target labels")
            if any(not 0 <= c < N_CLASSES for c in labels):
                raise ValueError(f"target labels must be in 0..{N_CLASSES - 1}")
            object.__setattr__(self, "target_labels", labels)


def _label_matrix(data):
    y = np.stack([np.asarray(lv, dtype=np.uint8) for _, lv in data])
    if y.shape[1] != N_CLASSES:
        raise ValueError(f"label vectors must have length {N_CLASSES}")
    return y


def _feature_matrix(data, standardize):
    m = np.stack([b.concat().astype(np.float64) for b, _ in data])
    if not standardize:
        return m
    mean = m.mean(axis=0)
    std = m.std(axis=0)
    std[std == 0] = 1.0
    return (m - mean) / std


def _resolve_targets(data, config, need_carriers):
    """Explicit target labels, or every label with 1..threshold-1 carriers.

    need_carriers distinguishes the oversampling methods (each explicit
    target must have at least one carrier) from the cleaning methods
    (labels with an empty side contribute nothing).
    """
    counts = _label_matrix(data).sum(axis=0)
    if config.target_labels is not None:
        if need_carriers:
            for c in config.target_labels:
                if counts[c] == 0:
                    raise ValueError(f"target label {c} has zero carriers")
        return list(config.target_labels)
    return [
        int(c)
        for c in range(N_CLASSES)
        if 1 <= counts[c] < config.count_threshold
    ]


def _median_target(counts):
    return int(math.ceil(float(np.median(counts))))


def _split_vector(vec, template):
    d_t, d_h, d_i = template.dims()
    t = vec[:d_t].astype(np.float32)
    h = vec[d_t : d_t + d_h].astype(np.float32)
    i = vec[d_t + d_h :].astype(np.float32)
    return make_bundle(t, h, i)


def random_oversample(data, config):
    """Duplicate carriers of each target label until its count reaches the
    median of the original per-class counts (counts are re-taken after each
    label so duplicates carrying several labels are not over-added)."""
    data = list(data)
    y = _label_matrix(data)
    target = _median_target(y.sum(axis=0))
    targets = _resolve_targets(data, config, need_carriers=True)
    rng = Rng(config.seed)
    out = list(data)
    out_labels = [np.asarray(lv, dtype=np.uint8) for _, lv in data]
    for c in sorted(targets):
        carriers = [idx for idx, (_, lv) in enumerate(data) if np.asarray(lv)[c] == 1]
        count = sum(int(lv[c]) for lv in out_labels)
        while count < target:
            pick = carriers[int(rng.integers(len(carriers)))]
            bundle, lv = data[pick]
            lv = np.asarray(lv, dtype=np.uint8).copy()
            out.append((bundle, lv))
            out_labels.append(lv)
            count += 1
    return out


def smote(data, config):
    """Synthesize carriers of each target label on segments between a random
    carrier and one of its k nearest carrier-neighbors (Euclidean distance
    over the concatenated bundle) until the median count is reached."""
    data = list(data)
    y = _label_matrix(data)
    target = _median_target(y.sum(axis=0))
    targets = _resolve_targets(data, config, need_carriers=True)
    rng = Rng(config.seed)
    feats = np.stack([b.concat().astype(np.float64) for b, _ in data])
    dist_feats = _feature_matrix(data, config.standardize)
    template = data[0][0]

    out = list(data)
    out_labels = [np.asarray(lv, dtype=np.uint8) for _, lv in data]
    for c in sorted(targets):
        carriers = [idx for idx, (_, lv) in enumerate(data) if np.asarray(lv)[c] == 1]
        if len(carriers) < 2:
            raise ValueError(f"target label {c} has fewer than 2 carriers")
        k = config.k
        if k > len(carriers) - 1:
            k = len(carriers) - 1
            warnings.warn(
                f"label {c}: k clipped to {k} (only {len(carriers)} carriers)",
                stacklevel=2,
            )
        d = pairwise_sqdist(dist_feats[carriers], dist_feats[carriers])
        np.fill_diagonal(d, np.inf)
        neighbors = np.argsort(d, axis=1, kind="stable")[:, :k]
        count = sum(int(lv[c]) for lv in out_labels)
        while count < target:
            a = int(rng.integers(len(carriers)))
            b = int(neighbors[a][int(rng.integers(k))])
            u = float(rng.random())
            vec = feats[carriers[a]] + u * (feats[carriers[b]] - feats[carriers[a]])
            lv = np.asarray(data[carriers[a]][1], dtype=np.uint8).copy()
            out.append((_split_vector(vec, template), lv))
            out_labels.append(lv)
            count += 1
    return out


def tomek_links(data, config):
    """Indices to remove: for each target label's binary projection, the
    lacks-label member of every mutual-nearest-neighbor pair that straddles
    the projection; examples carrying any target label are never listed."""
    data = list(data)
    if len(data) < 2:
        return []
    y = _label_matrix(data)
    targets = _resolve_targets(data, config, need_carriers=False)
    if not targets:
        return []
    feats = _feature_matrix(data, config.standardize)
    d = pairwise_sqdist(feats, feats)
    np.fill_diagonal(d, np.inf)
    nn = np.argmin(d, axis=1)
    protected = y[:, sorted(targets)].any(axis=1)
    remove = set()
    for c in sorted(targets):
        has = y[:, c] == 1
        for i_ex in range(len(data)):
            j_ex = int(nn[i_ex])
            if nn[j_ex] != i_ex or has[i_ex] == has[j_ex]:
                continue
            loser = j_ex if has[i_ex] else i_ex
            if not protected[loser]:
                remove.add(loser)
    return sorted(remove)


def near_miss(data, config):
    """NearMiss-1 kept indices: per target label, keep every carrier plus
    the non-carriers with the smallest mean Euclidean distance to their 3
    nearest carriers (as many as there are carriers); an example survives
    if any projection keeps it."""
    data = list(data)
    y = _label_matrix(data)
    targets = _resolve_targets(data, config, need_carriers=False)
    feats = _feature_matrix(data, config.standardize)
    kept = set()
    active = False
    for c in sorted(targets):
        minority = np.flatnonzero(y[:, c] == 1)
        majority = np.flatnonzero(y[:, c] == 0)
        if len(minority) == 0 or len(majority) == 0:
            if config.target_labels is not None:
                raise ValueError(f"target label {c}: one side of the projection is empty")
            continue
        active = True
        kept.update(int(i) for i in minority)
        d = np.sqrt(pairwise_sqdist(feats[majority], feats[minority]))
        pool = min(3, len(minority))
        nearest = np.sort(d, axis=1)[:, :pool]
        means = nearest.mean(axis=1)
        order = np.argsort(means, kind="stable")[: len(minority)]
        kept.update(int(majority[i]) for i in order)
    if not active:
        return list(range(len(data)))
    return sorted(kept)


def apply_resample(data, config):
    """Run the configured method and return the resulting dataset."""
    if config.method == "oversample":
        return random_oversample(data, config)
    if config.method == "smote":
        return smote(data, config)
    if config.method == "tomek":
        drop = set(tomek_links(data, config))
        return [pair for idx, pair in enumerate(data) if idx not in drop]
    keep = set(near_miss(data, config))
    return [pair for idx, pair in enumerate(data) if idx in keep]
