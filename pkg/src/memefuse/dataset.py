"""Multi-label meme dataset: loading, validation, label statistics.

The on-disk form is a JSON array of objects with fields ``id`` (string),
``text`` (string), ``image`` (relative path string) and ``labels`` (array
of technique-name strings).  Technique names resolve against a 22-entry
vocabulary manifest whose line order fixes label-vector positions; names
match case-sensitively after trimming surrounding whitespace.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

N_CLASSES = 22


class DatasetError(ValueError):
    pass


class LabelVocabulary:
    """Ordered 22-technique vocabulary; position = label-vector index."""

    def __init__(self, names):
        names = tuple(n.strip() for n in names)
        if len(names) != N_CLASSES:
            raise DatasetError(f"vocabulary needs {N_CLASSES} names, got {len(names)}")
        if len(set(names)) != len(names):
            raise DatasetError("vocabulary names must be distinct")
        if any(not n for n in names):
            raise DatasetError("vocabulary names must be non-empty")
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.names)

    def __getitem__(self, i):
        return self.names[i]

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls([line for line in fh.read().splitlines() if line.strip()])


def default_vocabulary():
    """The packaged 22-technique manifest."""
    path = resources.files("memefuse.data").joinpath("techniques.txt")
    return LabelVocabulary.from_file(str(path))


@dataclass(frozen=True)
class MemeRecord:
    id: str
    text: str
    image_ref: str
    labels: frozenset
    clean_text: str | None = None


@dataclass(frozen=True)
class SplitStats:
    per_class_counts: tuple
    n_examples: int


def _require(element, key, idx):
    if key not in element:
        eid = element.get("id", f"element #{idx}")
        raise DatasetError(f"record {eid}: missing field {key!r}")
    return element[key]


def load_dataset(path, vocab):
    """Load a JSON-array dataset file into MemeRecords, order preserved.

    Raises DatasetError for malformed JSON, missing fields, duplicate ids,
    and unknown technique names (reported with the offending id).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise DatasetError(f"dataset file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(raw, list):
        raise DatasetError(f"{path}: expected a JSON array of records")

    records = []
    seen = set()
    for idx, element in enumerate(raw):
        if not isinstance(element, dict):
            raise DatasetError(f"{path}: element #{idx} is not an object")
        rid = _require(element, "id", idx)
        if not isinstance(rid, str) or not rid:
            raise DatasetError(f"element #{idx}: id must be a non-empty string")
        if rid in seen:
            raise DatasetError(f"duplicate id {rid!r}")
        seen.add(rid)
        text = _require(element, "text", idx)
        image = _require(element, "image", idx)
        names = _require(element, "labels", idx)
        if not isinstance(names, list):
            raise DatasetError(f"record {rid}: labels must be an array of strings")
        labels = set()
        for name in names:
            key = str(name).strip()
            if key not in vocab.index:
                raise DatasetError(f"record {rid}: unknown technique name {name!r}")
            labels.add(vocab.index[key])
        clean = element.get("clean_text")
        records.append(
            MemeRecord(
                id=rid,
                text=str(text),
                image_ref=str(image),
                labels=frozenset(labels),
                clean_text=None if clean is None else str(clean),
            )
        )
    return records


def binarize(record):
    """Indicator vector over the 22 classes: bits[c] = 1 iff c in labels."""
    bits = np.zeros(N_CLASSES, dtype=np.uint8)
    for c in record.labels:
        if not 0 <= c < N_CLASSES:
            raise DatasetError(f"record {record.id}: label index {c} out of range")
        bits[c] = 1
    return bits


def labels_from_vector(bits):
    """Inverse of binarize: the set of set-bit positions."""
    bits = np.asarray(bits)
    return frozenset(int(c) for c in np.flatnonzero(bits))


def split_stats(records):
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for rec in records:
        for c in rec.labels:
            counts[c] += 1
    return SplitStats(per_class_counts=tuple(int(c) for c in counts), n_examples=len(records))


def class_weights(stats, scheme="balanced"):
    """Per-class weights for the loss.  balanced: n / (22 * max(count, 1));
    zero-count classes use the count floor of 1 rather than blowing up."""
    if scheme != "balanced":
        raise DatasetError(f"unknown class-weight scheme {scheme!r}")
    counts = np.asarray(stats.per_class_counts, dtype=np.float64)
    if counts.sum() == 0:
        raise DatasetError("cannot compute class weights: all class counts are zero")
    return stats.n_examples / (N_CLASSES * np.maximum(counts, 1.0))
