"""Shared fixtures; tests force the offline encoder path for speed and
determinism regardless of what weights the machine has cached."""

import os

os.environ.setdefault("MEMEFUSE_EXPORTER_OFFLINE", "1")

import json

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def rng():
    return np.random.default_rng(20210605)


@pytest.fixture
def dataset(tmp_path, rng):
    """Five records with mixed-mode images (RGB, grayscale, RGBA, JPEG)."""
    images = tmp_path / "images"
    images.mkdir()
    specs = [
        ("m0", "RGB", "png"),
        ("m1", "L", "png"),
        ("m2", "RGBA", "png"),
        ("m3", "RGB", "jpeg"),
        ("m4", "RGB", "png"),
    ]
    records = []
    for rid, mode, fmt in specs:
        channels = {"RGB": 3, "L": 1, "RGBA": 4}[mode]
        arr = rng.integers(0, 256, (48, 64, channels)).astype(np.uint8)
        img = Image.fromarray(arr.squeeze(), mode=mode)
        name = f"{rid}.{fmt}"
        img.save(images / name, format=fmt.upper())
        records.append(
            {
                "id": rid,
                "text": f"sample text for {rid} with shared words",
                "image": name,
                "labels": [],
            }
        )
    records[4]["clean_text"] = "normalized text for m4"
    path = tmp_path / "dataset.json"
    path.write_text(json.dumps(records))
    return {
        "path": str(path),
        "images": str(images),
        "ids": [rid for rid, _, _ in specs],
        "tmp": tmp_path,
    }
