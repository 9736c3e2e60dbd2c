"""Export driver: dataset records plus images to a feature archive."""

from pathlib import Path

import numpy as np
from PIL import Image

from .archive import write_archive
from .encoders import make_image_encoder, make_text_encoder
from .spec import ExportSpec


class ExportError(ValueError):
    pass


def load_records(path):
    """Read the dataset JSON array; each record needs id, text, and image.

    clean_text is preferred over text when present, matching what the
    trainer's featurizer consumes.
    """
    import json

    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ExportError(f"dataset file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ExportError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(data, list):
        raise ExportError(f"{path}: expected a JSON array of records")
    records = []
    seen = set()
    for idx, element in enumerate(data):
        if not isinstance(element, dict):
            raise ExportError(f"record #{idx}: expected a JSON object")
        for field in ("id", "text", "image"):
            if field not in element:
                rid = element.get("id", f"#{idx}")
                raise ExportError(f"record {rid}: missing field {field!r}")
        rid = str(element["id"])
        if not rid:
            raise ExportError(f"record #{idx}: empty id")
        if rid in seen:
            raise ExportError(f"duplicate id {rid!r}")
        seen.add(rid)
        text = element.get("clean_text")
        if text is None:
            text = element["text"]
        records.append({"id": rid, "text": str(text), "image": str(element["image"])})
    return records


def _load_image(path, rid, size):
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB").resize((size, size), Image.BILINEAR)
    except FileNotFoundError:
        raise ExportError(f"record {rid}: image file not found: {path}") from None
    except Exception as exc:
        raise ExportError(f"record {rid}: cannot decode image {path}: {exc}") from None
    return np.asarray(rgb, dtype=np.float32) / 255.0


def run_export(dataset_path, images_dir, spec, out_path):
    """Encode every record and write the archive; returns (dims, count)."""
    if spec is None:
        spec = ExportSpec()
    records = load_records(dataset_path)
    if not records:
        raise ExportError("dataset is empty; an archive needs at least one record")
    text_encoder = make_text_encoder(spec)
    image_encoder = make_image_encoder(spec)

    images_dir = Path(images_dir)
    triples = {}
    for start in range(0, len(records), spec.batch_size):
        batch = records[start : start + spec.batch_size]
        texts = [rec["text"] for rec in batch]
        images = [
            _load_image(images_dir / rec["image"], rec["id"], spec.image_size)
            for rec in batch
        ]
        t_block = text_encoder.encode(texts)
        h_block, i_block = image_encoder.encode(images)
        for k, rec in enumerate(batch):
            triples[rec["id"]] = (t_block[k], h_block[k], i_block[k])

    provenance = {
        "producer": "embed-exporter",
        "spec": spec.fingerprint(),
        "text_pooling": spec.text_pooling,
        "image_pooling": spec.image_pooling,
        "fallback": {
            "text": bool(text_encoder.is_fallback),
            "image": bool(image_encoder.is_fallback),
        },
    }
    write_archive(triples, out_path, provenance=provenance)
    dims = (spec.text_dim, spec.hidden_dim, spec.prediction_dim)
    return dims, len(triples)
