"""End-to-end command-line flows over a small synthetic dataset."""

import json
import subprocess
import sys

import numpy as np
import pytest

from memefuse.archive import read_archive
from memefuse.cli import main
from memefuse.dataset import default_vocabulary
from memefuse.fusion import read_checkpoint
from memefuse.images import write_netpbm

DIM = 64


def write_json(path, obj):
    path.write_text(json.dumps(obj, indent=1))
    return str(path)


def base_config(**extra):
    obj = {
        "version": 1,
        "topology": "mfas",
        "lr": 0.01,
        "batch_size": 4,
        "epochs": 2,
        "seed": 1,
        "dims": {
            "head_hidden": [8, 6],
            "fusion_dim": 6,
            "mfas_hidden": 5,
            "branch_hidden": 5,
            "dropout_p": 0.0,
        },
        "features": {"dim": DIM},
    }
    obj.update(extra)
    return obj


@pytest.fixture(scope="module")
def flow(tmp_path_factory):
    """Run preprocess -> featurize -> train -> eval -> predict -> compare
    once and expose every artifact path, with key steps run twice so tests
    can assert reruns are byte-identical."""
    root = tmp_path_factory.mktemp("flow")
    names = default_vocabulary().names
    images = root / "images"
    images.mkdir()
    rng = np.random.default_rng(42)
    texts = [
        "Nooooo!!! YOLO memegenerator.net",
        "They did it AGAIN on 12/31/2020...",
        "#fakenews strikes at 9:15 pm",
        "over 1,000,000 sheep can't be wrong",
        "just a cat picture",
        "suuuppperrr subtle, right?",
    ]
    labels = [
        [names[10]],
        [names[18]],
        [names[12], names[0]],
        [names[3]],
        [],
        [names[21]],
    ]
    records = []
    for k in range(6):
        img = rng.integers(0, 256, (8, 6, 3)).astype(np.uint8)
        write_netpbm(img, images / f"m{k}.ppm")
        records.append(
            {"id": f"m{k}", "text": texts[k], "image": f"m{k}.ppm", "labels": labels[k]}
        )
    paths = {
        "root": root,
        "images": images,
        "raw": write_json(root / "raw.json", records),
        "clean": str(root / "clean.json"),
        "archive": str(root / "feats.mfarch"),
        "archive_again": str(root / "feats2.mfarch"),
        "archive_small": str(root / "feats32.mfarch"),
    }
    codes = {}
    codes["preprocess"] = main(
        ["preprocess", "--dataset", paths["raw"], "--out", paths["clean"]]
    )

    feat_cfg = write_json(root / "feat.json", base_config())
    for out in (paths["archive"], paths["archive_again"]):
        codes["featurize"] = main(
            [
                "featurize",
                "--dataset", paths["clean"],
                "--images-dir", str(images),
                "--config", feat_cfg,
                "--out-archive", out,
            ]
        )
    small_cfg = write_json(
        root / "feat32.json",
        base_config(features={"dim": 32, "weighting": "tfidf"}),
    )
    main(
        [
            "featurize",
            "--dataset", paths["clean"],
            "--images-dir", str(images),
            "--config", small_cfg,
            "--out-archive", paths["archive_small"],
        ]
    )

    train_paths = {
        "train_dataset": paths["clean"],
        "train_archive": paths["archive"],
        "dev_dataset": paths["clean"],
        "dev_archive": paths["archive"],
    }
    for run in ("run1", "run2"):
        cfg = write_json(
            root / f"train_{run}.json",
            base_config(paths=dict(train_paths, out_dir=str(root / run))),
        )
        codes["train"] = main(["train", "--config", cfg])
    paths["checkpoint"] = str(root / "run1" / "checkpoint.mfnet")
    paths["history"] = str(root / "run1" / "history.json")
    paths["history_again"] = str(root / "run2" / "history.json")

    paths["eval_report"] = str(root / "eval.json")
    codes["eval"] = main(
        [
            "eval",
            "--checkpoint", paths["checkpoint"],
            "--archive", paths["archive"],
            "--dataset", paths["clean"],
            "--out", paths["eval_report"],
        ]
    )
    paths["predictions"] = str(root / "pred.json")
    codes["predict"] = main(
        [
            "predict",
            "--checkpoint", paths["checkpoint"],
            "--archive", paths["archive"],
            "--out", paths["predictions"],
        ]
    )

    for run in ("cmp1", "cmp2"):
        cfg = write_json(
            root / f"compare_{run}.json",
            base_config(
                paths=dict(
                    train_paths,
                    test_dataset=paths["clean"],
                    test_archive=paths["archive"],
                    out_dir=str(root / run),
                )
            ),
        )
        codes["compare"] = main(["compare", "--config", cfg])
    paths["comparison"] = str(root / "cmp1" / "comparison.json")
    paths["comparison_txt"] = str(root / "cmp1" / "comparison.txt")
    paths["comparison_again"] = str(root / "cmp2" / "comparison.json")
    paths["codes"] = codes
    return paths


def read(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class TestPreprocess:
    def test_exit_code(self, flow):
        assert flow["codes"]["preprocess"] == 0

    def test_clean_text_added(self, flow):
        out = read(flow["clean"])
        assert len(out) == 6
        assert out[0]["clean_text"] == "No you only live once"

    def test_original_fields_preserved(self, flow):
        out = read(flow["clean"])
        raw = read(flow["raw"])
        for before, after in zip(raw, out):
            assert after["id"] == before["id"]
            assert after["image"] == before["image"]
            assert sorted(after["labels"]) == sorted(before["labels"])

    def test_missing_dict_file_is_user_error(self, flow, capsys):
        code = main(
            [
                "preprocess",
                "--dataset", flow["raw"],
                "--dict", str(flow["root"] / "ghost.tsv"),
                "--out", str(flow["root"] / "never.json"),
            ]
        )
        assert code == 1
        assert "ghost.tsv" in capsys.readouterr().err


class TestFeaturize:
    def test_exit_code_and_contents(self, flow):
        assert flow["codes"]["featurize"] == 0
        bundles = read_archive(flow["archive"])
        assert sorted(bundles) == [f"m{k}" for k in range(6)]
        assert bundles["m0"].dims() == (DIM, 384, 54)

    def test_rerun_byte_identical(self, flow):
        a = open(flow["archive"], "rb").read()
        b = open(flow["archive_again"], "rb").read()
        assert a == b

    def test_missing_clean_text_is_user_error(self, flow, capsys):
        cfg = write_json(flow["root"] / "f_noclean.json", base_config())
        code = main(
            [
                "featurize",
                "--dataset", flow["raw"],
                "--images-dir", str(flow["images"]),
                "--config", cfg,
                "--out-archive", str(flow["root"] / "never.mfarch"),
            ]
        )
        assert code == 1
        assert "clean_text" in capsys.readouterr().err

    def test_missing_image_names_record(self, flow, capsys):
        ds = write_json(
            flow["root"] / "ghost_img.json",
            [{"id": "x1", "text": "hi", "image": "ghost.ppm", "labels": [],
              "clean_text": "hi"}],
        )
        cfg = write_json(flow["root"] / "f_ghost.json", base_config())
        code = main(
            [
                "featurize",
                "--dataset", ds,
                "--images-dir", str(flow["images"]),
                "--config", cfg,
                "--out-archive", str(flow["root"] / "never.mfarch"),
            ]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "x1" in err and "ghost.ppm" in err

    def test_unknown_config_key_is_user_error(self, flow, capsys):
        cfg = write_json(flow["root"] / "bad_key.json", base_config(optimizer="sgd"))
        code = main(
            [
                "featurize",
                "--dataset", flow["clean"],
                "--images-dir", str(flow["images"]),
                "--config", cfg,
                "--out-archive", str(flow["root"] / "never.mfarch"),
            ]
        )
        assert code == 1
        assert "optimizer" in capsys.readouterr().err

    def test_empty_dataset_is_user_error(self, flow, capsys):
        # the archive format requires at least one record
        ds = write_json(flow["root"] / "empty.json", [])
        cfg = write_json(flow["root"] / "f_empty.json", base_config())
        code = main(
            [
                "featurize",
                "--dataset", ds,
                "--images-dir", str(flow["images"]),
                "--config", cfg,
                "--out-archive", str(flow["root"] / "empty.mfarch"),
            ]
        )
        assert code == 1
        assert "empty" in capsys.readouterr().err


class TestTrain:
    def test_checkpoint_written(self, flow):
        assert flow["codes"]["train"] == 0
        model = read_checkpoint(flow["checkpoint"])
        assert model.topology == "MFAS"
        assert tuple(model.dims) == (DIM, 384, 54)

    def test_history_shape(self, flow):
        history = read(flow["history"])
        assert len(history) == 2
        assert [entry["epoch"] for entry in history] == [0, 1]
        for entry in history:
            assert isinstance(entry["train_loss"], float)
            assert 0.0 <= entry["dev_micro_f1"] <= 1.0

    def test_rerun_byte_identical(self, flow):
        a = open(flow["history"], "rb").read()
        b = open(flow["history_again"], "rb").read()
        assert a == b

    def test_unknown_topology_lists_valid(self, flow, capsys):
        cfg = write_json(
            flow["root"] / "bad_topo.json",
            base_config(
                topology="hybrid",
                paths={
                    "train_dataset": flow["clean"],
                    "train_archive": flow["archive"],
                    "out_dir": str(flow["root"] / "never"),
                },
            ),
        )
        assert main(["train", "--config", cfg]) == 1
        err = capsys.readouterr().err
        for tag in ("Concat", "Early", "Late", "MFAS"):
            assert tag in err

    def test_empty_training_set_is_user_error(self, flow, capsys):
        ds = write_json(flow["root"] / "empty2.json", [])
        cfg = write_json(
            flow["root"] / "train_empty.json",
            base_config(
                paths={
                    "train_dataset": ds,
                    "train_archive": flow["archive"],
                    "out_dir": str(flow["root"] / "never"),
                }
            ),
        )
        assert main(["train", "--config", cfg]) == 1
        assert "empty" in capsys.readouterr().err


class TestEval:
    def test_report_structure(self, flow):
        assert flow["codes"]["eval"] == 0
        rep = read(flow["eval_report"])
        assert rep["threshold"] == 0.5
        assert rep["n_examples"] == 6
        for scope in ("micro", "macro"):
            for key in ("precision", "recall", "f1"):
                assert 0.0 <= rep[scope][key] <= 1.0
        assert len(rep["per_class"]) == 22
        names = default_vocabulary().names
        assert [row["technique"] for row in rep["per_class"]] == list(names)

    def test_stdout_summary(self, flow, capsys):
        code = main(
            [
                "eval",
                "--checkpoint", flow["checkpoint"],
                "--archive", flow["archive"],
                "--dataset", flow["clean"],
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "micro" in out and "macro" in out
        assert "Loaded Language" in out

    def test_dim_mismatch_names_both_shapes(self, flow, capsys):
        code = main(
            [
                "eval",
                "--checkpoint", flow["checkpoint"],
                "--archive", flow["archive_small"],
                "--dataset", flow["clean"],
            ]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert f"({DIM}, 384, 54)" in err
        assert "(32, 384, 54)" in err


class TestPredict:
    def test_prediction_structure(self, flow):
        assert flow["codes"]["predict"] == 0
        preds = read(flow["predictions"])
        names = default_vocabulary().names
        assert sorted(preds) == [f"m{k}" for k in range(6)]
        for entry in preds.values():
            assert len(entry["bits"]) == 22
            assert set(entry["bits"]) <= {0, 1}
            expect = [names[c] for c, b in enumerate(entry["bits"]) if b]
            assert entry["techniques"] == expect


class TestCompare:
    def test_four_row_report(self, flow):
        assert flow["codes"]["compare"] == 0
        payload = read(flow["comparison"])
        assert list(payload) == ["Concat", "Early", "Late", "MFAS"]
        for row in payload.values():
            for key in ("precision", "recall", "f1"):
                assert 0.0 <= row[key] <= 1.0
        text = open(flow["comparison_txt"], encoding="utf-8").read()
        lines = text.strip().splitlines()
        assert [line.split()[0] for line in lines[1:5]] == [
            "Concat", "Early", "Late", "MFAS",
        ]
        assert "not a target" in lines[-1]

    def test_rerun_byte_identical(self, flow):
        a = open(flow["comparison"], "rb").read()
        b = open(flow["comparison_again"], "rb").read()
        assert a == b


class TestMain:
    def test_no_arguments_prints_help(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_required_argument(self, capsys):
        assert main(["featurize", "--dataset", "x.json"]) == 1

    def test_internal_error_exits_2(self, flow, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("wires crossed")

        monkeypatch.setattr("memefuse.fusion.predict", boom)
        code = main(
            [
                "predict",
                "--checkpoint", flow["checkpoint"],
                "--archive", flow["archive"],
            ]
        )
        assert code == 2
        assert "internal error" in capsys.readouterr().err

    def test_module_entrypoint_subprocess(self, flow, tmp_path):
        out = tmp_path / "clean.json"
        proc = subprocess.run(
            [
                sys.executable, "-m", "memefuse.cli",
                "preprocess", "--dataset", flow["raw"], "--out", str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert out.is_file()
        assert "preprocessed 6 records" in proc.stdout
