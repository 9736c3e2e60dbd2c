"""Export specification: encoder names, tap point, pooling, and sizes."""

import json
from dataclasses import asdict, dataclass

TEXT_HIDDEN_SIZES = {
    "roberta-base": 768,
    "roberta-large": 1024,
    "bert-base-uncased": 768,
    "distilroberta-base": 768,
}

# channels coming out of each VGG-19 conv block (after its pool)
IMAGE_LAYER_CHANNELS = {
    "vgg19": {"block1": 64, "block2": 128, "block3": 256, "block4": 512, "block5": 512},
}
IMAGE_PREDICTION_DIMS = {"vgg19": 1000}

TEXT_POOLINGS = ("first_token", "mean")
IMAGE_POOLINGS = ("mean", "max")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExportSpec:
    text_model: str = "roberta-base"
    image_model: str = "vgg19"
    image_layer: str = "block2"
    text_pooling: str = "first_token"
    image_pooling: str = "mean"
    image_size: int = 224
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.text_model not in TEXT_HIDDEN_SIZES:
            known = ", ".join(sorted(TEXT_HIDDEN_SIZES))
            raise SpecError(f"unknown text model {self.text_model!r}; known: {known}")
        if self.image_model not in IMAGE_LAYER_CHANNELS:
            known = ", ".join(sorted(IMAGE_LAYER_CHANNELS))
            raise SpecError(f"unknown image model {self.image_model!r}; known: {known}")
        layers = IMAGE_LAYER_CHANNELS[self.image_model]
        if self.image_layer not in layers:
            raise SpecError(
                f"unknown layer {self.image_layer!r} for {self.image_model}; "
                f"known: {', '.join(layers)}"
            )
        if self.text_pooling not in TEXT_POOLINGS:
            raise SpecError(
                f"unknown text pooling {self.text_pooling!r}; "
                f"valid: {', '.join(TEXT_POOLINGS)}"
            )
        if self.image_pooling not in IMAGE_POOLINGS:
            raise SpecError(
                f"unknown image pooling {self.image_pooling!r}; "
                f"valid: {', '.join(IMAGE_POOLINGS)}"
            )
        if self.image_size < 32:
            raise SpecError(f"image_size must be >= 32, got {self.image_size}")
        if self.batch_size < 1:
            raise SpecError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.seed < 0:
            raise SpecError(f"seed must be >= 0, got {self.seed}")

    @property
    def text_dim(self):
        return TEXT_HIDDEN_SIZES[self.text_model]

    @property
    def hidden_dim(self):
        return IMAGE_LAYER_CHANNELS[self.image_model][self.image_layer]

    @property
    def prediction_dim(self):
        return IMAGE_PREDICTION_DIMS[self.image_model]

    def fingerprint(self):
        """Plain dict form of this ExportSpec, stored in archive provenance."""
        return asdict(self)


def load_spec(path):
    """Read an ExportSpec from a JSON object file; unknown keys are errors."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: spec must be a JSON object")
    allowed = set(ExportSpec.__dataclass_fields__)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SpecError(f"unknown spec key(s): {', '.join(unknown)}")
    return ExportSpec(**obj)
