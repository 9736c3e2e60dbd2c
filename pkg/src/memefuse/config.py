"""Versioned JSON run configuration with strict key checking.

Unknown keys are errors at every level so hyper-parameter typos fail fast
instead of silently falling back to defaults.
"""

import json

import numpy as np

from .features import HashedNgramConfig
from .fusion import TrainConfig, canonical_topology
from .imbalance import ResampleConfig
from .nn import LossSpec

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


_TOP_KEYS = {
    "version", "topology", "loss", "lr", "batch_size", "epochs", "seed",
    "threshold", "patience", "dims", "imbalance", "features", "paths",
}
_SECTION_KEYS = {
    "loss": {"kind", "alpha", "gamma", "weights"},
    "dims": {"head_hidden", "fusion_dim", "mfas_hidden", "branch_hidden", "dropout_p"},
    "imbalance": {"method", "k", "target_labels", "count_threshold", "seed", "standardize"},
    "features": {"dim", "hash_seed", "n_min", "n_max", "weighting"},
    "paths": {
        "train_dataset", "train_archive", "dev_dataset", "dev_archive",
        "test_dataset", "test_archive", "out_dir",
    },
}

IMBALANCE_METHODS = ("none", "oversample", "smote", "tomek", "nearmiss", "class_weights")


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def validate_config(obj):
    _check_keys(obj, _TOP_KEYS, "config")
    if "version" not in obj:
        raise ConfigError('config is missing the "version" field')
    if obj["version"] != CONFIG_VERSION:
        raise ConfigError(
            f"unsupported config version {obj['version']!r} (expected {CONFIG_VERSION})"
        )
    for section, allowed in _SECTION_KEYS.items():
        if section in obj:
            _check_keys(obj[section], allowed, section)
    method = obj.get("imbalance", {}).get("method", "none")
    if method not in IMBALANCE_METHODS:
        raise ConfigError(
            f"unknown imbalance method {method!r}; valid: {', '.join(IMBALANCE_METHODS)}"
        )
    return obj


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    return validate_config(obj)


def _wrap(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def features_config(cfg):
    f = cfg.get("features", {})
    return _wrap(
        HashedNgramConfig,
        n_min=int(f.get("n_min", 1)),
        n_max=int(f.get("n_max", 2)),
        dim=int(f.get("dim", 2048)),
        hash_seed=int(f.get("hash_seed", 0)),
        weighting=f.get("weighting", "tf"),
    )


def loss_spec(cfg, class_weight_override=None):
    sec = cfg.get("loss", {})
    kind = sec.get("kind", "bce")
    weights = sec.get("weights")
    if class_weight_override is not None:
        if kind != "bce" or weights is not None:
            raise ConfigError(
                'imbalance method "class_weights" requires loss kind "bce" '
                "with no explicit weights"
            )
        kind = "weighted_bce"
        weights = class_weight_override
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
    return _wrap(
        LossSpec,
        kind=kind,
        weights=weights,
        alpha=float(sec.get("alpha", 0.25)),
        gamma=float(sec.get("gamma", 2.0)),
    )


def train_config(cfg, class_weight_override=None):
    return _wrap(
        TrainConfig,
        loss=loss_spec(cfg, class_weight_override),
        lr=float(cfg.get("lr", 1e-3)),
        batch_size=int(cfg.get("batch_size", 16)),
        epochs=int(cfg.get("epochs", 30)),
        seed=int(cfg.get("seed", 0)),
        threshold=float(cfg.get("threshold", 0.5)),
        patience=int(cfg.get("patience", 5)),
    )


def model_kwargs(cfg):
    d = cfg.get("dims", {})
    return {
        "head_hidden": tuple(int(x) for x in d.get("head_hidden", (768, 384))),
        "fusion_dim": int(d.get("fusion_dim", 512)),
        "mfas_hidden": int(d.get("mfas_hidden", 512)),
        "branch_hidden": int(d.get("branch_hidden", 256)),
        "dropout_p": float(d.get("dropout_p", 0.2)),
    }


def topology(cfg):
    if "topology" not in cfg:
        raise ConfigError('config is missing the "topology" field')
    return _wrap(canonical_topology, cfg["topology"])


def imbalance_config(cfg):
    """(method, ResampleConfig | None); method "class_weights" carries no
    resample config and is applied at the loss instead."""
    sec = cfg.get("imbalance", {})
    method = sec.get("method", "none")
    if method in ("none", "class_weights"):
        return method, None
    targets = sec.get("target_labels")
    return method, _wrap(
        ResampleConfig,
        method=method,
        k=int(sec.get("k", 5)),
        target_labels=None if targets is None else tuple(int(c) for c in targets),
        count_threshold=int(sec.get("count_threshold", 20)),
        seed=int(sec.get("seed", 0)),
        standardize=bool(sec.get("standardize", False)),
    )


def get_path(cfg, name, required=False):
    value = cfg.get("paths", {}).get(name)
    if value is None and required:
        raise ConfigError(f'config is missing paths.{name}')
    return value
