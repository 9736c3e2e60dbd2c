"""Text and image encoders with deterministic offline stand-ins.

The real encoders load pretrained weights from the local cache only, so a
machine without the weights fails fast instead of hitting the network and
falls back to hash-seeded stand-ins that keep the exact output dimensions
of the requested models. Setting MEMEFUSE_EXPORTER_OFFLINE=1 skips the
pretrained path entirely.
"""

import hashlib
import os
import struct

import numpy as np


class EncoderUnavailable(Exception):
    pass


def _offline_forced():
    return os.environ.get("MEMEFUSE_EXPORTER_OFFLINE", "").strip() == "1"


def _seeded_rng(label, seed):
    digest = hashlib.blake2b(
        label.encode("utf-8"), digest_size=16, key=struct.pack("<q", seed)
    ).digest()
    return np.random.default_rng(
        np.random.SeedSequence(int.from_bytes(digest, "little"))
    )


def _seeded_vector(label, dim, seed):
    return _seeded_rng(label, seed).standard_normal(dim).astype(np.float32)


# ---------------------------------------------------------------------------
# fallback encoders


class FallbackTextEncoder:
    """Per-text pseudo-states from keyed hashes, pooled like the real model.

    first_token pooling maps the whole text to one vector (the lead token
    of a transformer attends to the full sentence); mean pooling averages
    per-token vectors, so word overlap shows up as vector similarity.
    """

    is_fallback = True

    def __init__(self, spec):
        self.dim = spec.text_dim
        self.pooling = spec.text_pooling
        self.seed = spec.seed

    def encode(self, texts):
        out = np.empty((len(texts), self.dim), dtype=np.float32)
        for k, text in enumerate(texts):
            if self.pooling == "first_token":
                out[k] = _seeded_vector(f"text:{text}", self.dim, self.seed)
            else:
                tokens = text.split() or ["<empty>"]
                acc = np.zeros(self.dim, dtype=np.float64)
                for tok in tokens:
                    acc += _seeded_vector(f"tok:{tok}", self.dim, self.seed)
                out[k] = (acc / len(tokens)).astype(np.float32)
        return out


class FallbackImageEncoder:
    """Content-dependent stand-in with the requested channel counts.

    H: the image is cut into a 7x7 region grid; per-region channel
    mean/std stats are projected through a fixed seeded matrix and tanh,
    then pooled over regions with the requested pooling. I: a softmax
    over a fixed seeded projection of global channel statistics.
    """

    is_fallback = True

    GRID = 7

    def __init__(self, spec):
        self.spec = spec
        self.hidden_dim = spec.hidden_dim
        self.pred_dim = spec.prediction_dim
        rng = _seeded_rng(f"image-proj:{spec.image_model}:{spec.image_layer}", spec.seed)
        self._proj_h = rng.standard_normal((self.hidden_dim, 6)).astype(np.float64)
        self._proj_i = rng.standard_normal((self.pred_dim, 102)).astype(np.float64)

    def encode(self, images):
        hs = np.empty((len(images), self.hidden_dim), dtype=np.float32)
        preds = np.empty((len(images), self.pred_dim), dtype=np.float32)
        for k, arr in enumerate(images):
            hs[k], preds[k] = self._encode_one(arr)
        return hs, preds

    def _encode_one(self, arr):
        # arr is (size, size, 3) float32 in [0, 1]
        size = arr.shape[0]
        step = size // self.GRID
        regions = np.empty((self.GRID * self.GRID, self.hidden_dim))
        for gy in range(self.GRID):
            for gx in range(self.GRID):
                cell = arr[gy * step:(gy + 1) * step, gx * step:(gx + 1) * step]
                stats = np.concatenate([cell.mean(axis=(0, 1)), cell.std(axis=(0, 1))])
                regions[gy * self.GRID + gx] = np.tanh(self._proj_h @ stats)
        if self.spec.image_pooling == "mean":
            h = regions.mean(axis=0)
        else:
            h = regions.max(axis=0)
        hist = np.stack(
            [np.histogram(arr[:, :, c], bins=32, range=(0.0, 1.0))[0] for c in range(3)]
        ).astype(np.float64)
        hist /= max(arr.shape[0] * arr.shape[1], 1)
        stats = np.concatenate(
            [hist.ravel(), arr.mean(axis=(0, 1)), arr.std(axis=(0, 1))]
        )
        logits = self._proj_i @ stats
        logits -= logits.max()
        probs = np.exp(logits)
        probs /= probs.sum()
        return h.astype(np.float32), probs.astype(np.float32)


# ---------------------------------------------------------------------------
# pretrained encoders

# index one past each VGG-19 conv block's pool in torchvision's features
VGG19_BLOCK_END = {"block1": 5, "block2": 10, "block3": 19, "block4": 28, "block5": 37}


class TorchTextEncoder:
    is_fallback = False

    def __init__(self, spec):
        if _offline_forced():
            raise EncoderUnavailable("offline mode forced")
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer

            torch.set_num_threads(1)
            torch.manual_seed(spec.seed)
            self._torch = torch
            self._tokenizer = AutoTokenizer.from_pretrained(
                spec.text_model, local_files_only=True
            )
            self._model = AutoModel.from_pretrained(
                spec.text_model, local_files_only=True
            ).eval()
        except Exception as exc:
            raise EncoderUnavailable(f"text model {spec.text_model}: {exc}") from exc
        self.dim = int(self._model.config.hidden_size)
        if self.dim != spec.text_dim:
            raise EncoderUnavailable(
                f"{spec.text_model} hidden size {self.dim} != expected {spec.text_dim}"
            )
        self.pooling = spec.text_pooling

    def encode(self, texts):
        torch = self._torch
        with torch.no_grad():
            batch = self._tokenizer(
                list(texts), padding=True, truncation=True, return_tensors="pt"
            )
            states = self._model(**batch).last_hidden_state
            if self.pooling == "first_token":
                pooled = states[:, 0]
            else:
                mask = batch["attention_mask"].unsqueeze(-1).to(states.dtype)
                pooled = (states * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
        return pooled.cpu().numpy().astype(np.float32)


class TorchImageEncoder:
    is_fallback = False

    IMAGENET_MEAN = (0.485, 0.456, 0.406)
    IMAGENET_STD = (0.229, 0.224, 0.225)

    def __init__(self, spec):
        if _offline_forced():
            raise EncoderUnavailable("offline mode forced")
        try:
            import torch
            from torchvision import models

            torch.set_num_threads(1)
            torch.manual_seed(spec.seed)
            weights = models.VGG19_Weights.IMAGENET1K_V1
            self._require_cached(torch, weights.url)
            self._torch = torch
            self._model = models.vgg19(weights=weights).eval()
        except EncoderUnavailable:
            raise
        except Exception as exc:
            raise EncoderUnavailable(f"image model {spec.image_model}: {exc}") from exc
        self._tap = VGG19_BLOCK_END[spec.image_layer]
        self.spec = spec
        self.hidden_dim = spec.hidden_dim
        self.pred_dim = spec.prediction_dim

    @staticmethod
    def _require_cached(torch, url):
        import os.path

        name = url.rsplit("/", 1)[-1]
        cached = os.path.join(torch.hub.get_dir(), "checkpoints", name)
        if not os.path.isfile(cached):
            raise EncoderUnavailable(f"weights not in local cache: {name}")

    def encode(self, images):
        torch = self._torch
        mean = torch.tensor(self.IMAGENET_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(self.IMAGENET_STD).view(1, 3, 1, 1)
        batch = torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2)
        batch = (batch - mean) / std
        with torch.no_grad():
            taps = self._model.features[: self._tap](batch)
            if self.spec.image_pooling == "mean":
                h = taps.mean(dim=(2, 3))
            else:
                h = taps.amax(dim=(2, 3))
            logits = self._model(batch)
        return (
            h.cpu().numpy().astype(np.float32),
            logits.cpu().numpy().astype(np.float32),
        )


def make_text_encoder(spec):
    try:
        return TorchTextEncoder(spec)
    except EncoderUnavailable:
        return FallbackTextEncoder(spec)


def make_image_encoder(spec):
    try:
        return TorchImageEncoder(spec)
    except EncoderUnavailable:
        return FallbackImageEncoder(spec)
