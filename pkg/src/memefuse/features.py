"""Deterministic baseline featurizers for text and images.

These produce the (T, H, I) triples at desk scale: a seeded hashed
n-gram vectorizer for T, spatially-resolved grid histograms for H, and
global intensity statistics for I.  Full-fidelity embeddings from
pretrained encoders arrive through the same archive format and are
interchangeable downstream.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .archive import make_bundle
from .kernels import cell_histograms

H_GRID = 2
H_BINS = 32
I_BINS = 16


@dataclass(frozen=True)
class HashedNgramConfig:
    n_min: int = 1
    n_max: int = 2
    dim: int = 2048
    hash_seed: int = 0
    weighting: str = "tf"

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("hashed n-gram dim must be >= 2")
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError("n-gram range must be nondecreasing and >= 1")
        if self.weighting not in ("tf", "tfidf"):
            raise ValueError(f"unknown weighting {self.weighting!r}")


def hash_ngram(ngram, seed):
    """Seeded 64-bit hash of an n-gram string (blake2b, 8-byte digest,
    seed as little-endian key); little-endian integer of the digest."""
    key = int(seed).to_bytes(8, "little", signed=False)
    digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def _iter_ngrams(text, n_min, n_max):
    tokens = text.split()
    for n in range(n_min, n_max + 1):
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


def _signed_counts(text, config):
    vec = np.zeros(config.dim, dtype=np.float64)
    touched = set()
    for ngram in _iter_ngrams(text, config.n_min, config.n_max):
        h = hash_ngram(ngram, config.hash_seed)
        bucket = h % config.dim
        # sign from the parity (xor) of all 64 hash bits, so it stays
        # decorrelated from the low bits that pick the bucket
        sign = 1.0 if bin(h).count("1") % 2 == 0 else -1.0
        vec[bucket] += sign
        touched.add(bucket)
    return vec, touched


def fit_idf(texts, config):
    """Per-bucket inverse document frequencies over a corpus.

    df counts documents in which any n-gram hashed into the bucket;
    idf = ln((1 + n_docs) / (1 + df)) + 1 (smoothed, never zero).
    """
    df = np.zeros(config.dim, dtype=np.float64)
    n_docs = 0
    for text in texts:
        n_docs += 1
        _, touched = _signed_counts(text, config)
        for b in touched:
            df[b] += 1.0
    return np.log((1.0 + n_docs) / (1.0 + df)) + 1.0


def hashed_text_features(text, config, idf=None):
    """Signed hashed n-gram vector, L2-normalized unless all-zero.

    tf weighting accumulates +-1 per n-gram occurrence; tfidf multiplies
    the accumulated buckets by a fitted idf table (see fit_idf).
    """
    vec, _ = _signed_counts(text, config)
    if config.weighting == "tfidf":
        if idf is None:
            raise ValueError("tfidf weighting requires a fitted idf table")
        if idf.shape != (config.dim,):
            raise ValueError(f"idf table shape {idf.shape} != ({config.dim},)")
        vec = vec * idf
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec = vec / norm
    return vec.astype(np.float32)


def baseline_image_features(img):
    """Two-tap stand-in features for a resized image.

    H: 32-bin per-channel histograms over a 2x2 spatial grid, each cell's
    concatenated histogram normalized to sum 1 (spatially-resolved,
    "intermediate" role).  I: per-channel mean and variance of the [0, 1]
    scaled intensities plus a 16-bin global histogram normalized to sum 1
    (global, "prediction-level" role).
    """
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3:
        raise ValueError(f"expected (h, w, c) image, got shape {img.shape}")
    h_counts = cell_histograms(img, H_GRID, H_GRID, H_BINS)
    cell_totals = h_counts.sum(axis=(2, 3), keepdims=True)
    h_vec = (h_counts / cell_totals).ravel()

    scaled = img.astype(np.float64) / 255.0
    means = scaled.mean(axis=(0, 1))
    variances = scaled.var(axis=(0, 1))
    g_counts = cell_histograms(img, 1, 1, I_BINS)[0, 0]
    g_hist = g_counts / g_counts.sum(axis=1, keepdims=True)
    per_channel = [
        np.concatenate(([means[c], variances[c]], g_hist[c]))
        for c in range(img.shape[2])
    ]
    i_vec = np.concatenate(per_channel)
    return h_vec.astype(np.float32), i_vec.astype(np.float32)


def text_bundle_dim(config):
    return config.dim


def image_bundle_dims(channels):
    return H_BINS * H_GRID * H_GRID * channels, channels * (2 + I_BINS)


def build_bundle(clean_text, img, config, idf=None):
    """Assemble one validated FeatureBundle from preprocessed text and a
    resized image."""
    t = hashed_text_features(clean_text, config, idf=idf)
    h, i = baseline_image_features(img)
    return make_bundle(t, h, i)
