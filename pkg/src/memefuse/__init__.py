"""Multimodal fusion classifier for persuasion techniques in memes.

Pipeline: dataset loading and label binarization, text normalization,
baseline text/image featurizers, a feature-archive interchange format,
four fusion topologies over a from-scratch dense-network engine, class
imbalance remedies, micro-F1 evaluation, and a CLI tying them together.
"""

__version__ = "0.1.0"

from .archive import FeatureBundle, make_bundle, read_archive, write_archive
from .dataset import (
    LabelVocabulary,
    MemeRecord,
    N_CLASSES,
    binarize,
    default_vocabulary,
    load_dataset,
)
from .fusion import FusionModel, build, predict, read_checkpoint, train, write_checkpoint
from .metrics import MetricsReport, comparison_report, micro_prf

__all__ = [
    "FeatureBundle",
    "FusionModel",
    "LabelVocabulary",
    "MemeRecord",
    "MetricsReport",
    "N_CLASSES",
    "binarize",
    "build",
    "comparison_report",
    "default_vocabulary",
    "load_dataset",
    "make_bundle",
    "micro_prf",
    "predict",
    "read_archive",
    "read_checkpoint",
    "train",
    "write_archive",
    "write_checkpoint",
]
