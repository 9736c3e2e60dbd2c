"""ExportSpec defaults, derived dimensions, and strict JSON loading."""

import json

import pytest

from memefuse_exporter.spec import ExportSpec, SpecError, load_spec


class TestDefaults:
    def test_default_values(self):
        spec = ExportSpec()
        assert spec.text_model == "roberta-base"
        assert spec.image_model == "vgg19"
        assert spec.image_layer == "block2"
        assert spec.text_pooling == "first_token"
        assert spec.image_pooling == "mean"
        assert (spec.image_size, spec.batch_size, spec.seed) == (224, 8, 0)

    def test_derived_dimensions(self):
        spec = ExportSpec()
        assert spec.text_dim == 768
        assert spec.hidden_dim == 128
        assert spec.prediction_dim == 1000

    def test_other_taps_and_models(self):
        assert ExportSpec(image_layer="block3").hidden_dim == 256
        assert ExportSpec(image_layer="block5").hidden_dim == 512
        assert ExportSpec(text_model="roberta-large").text_dim == 1024

    def test_fingerprint_rebuilds_spec(self):
        spec = ExportSpec(text_pooling="mean", image_layer="block4", seed=3)
        assert ExportSpec(**spec.fingerprint()) == spec


class TestValidation:
    def test_unknown_text_model_lists_known(self):
        with pytest.raises(SpecError, match="roberta-base"):
            ExportSpec(text_model="gpt-17")

    def test_unknown_image_model(self):
        with pytest.raises(SpecError, match="vgg19"):
            ExportSpec(image_model="resnet50")

    def test_unknown_layer_for_model(self):
        with pytest.raises(SpecError, match="block2"):
            ExportSpec(image_layer="block9")

    def test_bad_poolings(self):
        with pytest.raises(SpecError, match="first_token"):
            ExportSpec(text_pooling="cls")
        with pytest.raises(SpecError, match="mean"):
            ExportSpec(image_pooling="sum")

    def test_bad_numbers(self):
        with pytest.raises(SpecError, match="image_size"):
            ExportSpec(image_size=16)
        with pytest.raises(SpecError, match="batch_size"):
            ExportSpec(batch_size=0)
        with pytest.raises(SpecError, match="seed"):
            ExportSpec(seed=-1)


class TestLoadSpec:
    def test_loads_valid_file(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"text_pooling": "mean", "seed": 7}))
        spec = load_spec(path)
        assert spec.text_pooling == "mean"
        assert spec.seed == 7

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"temperature": 2}))
        with pytest.raises(SpecError, match="temperature"):
            load_spec(path)

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(SpecError, match="absent.json"):
            load_spec(tmp_path / "absent.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        with pytest.raises(SpecError, match="malformed"):
            load_spec(path)

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2]")
        with pytest.raises(SpecError, match="object"):
            load_spec(path)
