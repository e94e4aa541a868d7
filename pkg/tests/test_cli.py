import json

import pandas as pd
import pytest

from stencilnet.cli import build_parser, load_config, main
from stencilnet.config import EXIT_CONFIG_ERROR, EXIT_OK
from stencilnet.storage import read_json, read_trajectory

SMALL_HEAT = {
    "recipe": "heat",
    "overrides": {"T": 0.5, "T_train": 0.5},
    "train": {"q": 1, "m": 1, "hidden": [8], "epochs": 2, "batch_size": 512},
}


def _write_config(directory, payload=SMALL_HEAT):
    path = directory / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


def _run(verb, config, out, *extra):
    return main([verb, "--config", config, "--out", str(out), "--seed", "3", *extra])


def test_load_config_merges_flags(tmp_path):
    args = build_parser().parse_args(
        ["train", "--config", _write_config(tmp_path), "--seed", "9", "--epochs", "5", "--out", str(tmp_path)]
    )
    config = load_config(args)
    assert config.recipe == "heat"
    assert config.seed == 9
    assert config.train.seed == 9
    assert config.train.epochs == 5
    assert config.train.hidden == [8]
    assert config.paths.out_dir == str(tmp_path)
    assert config.resolve_recipe().T == 0.5


def test_generate_train_predict_evaluate(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "runs"
    assert _run("generate", config, out) == EXIT_OK
    assert (out / "heat_C1.json").is_file()
    assert (out / "heat_fine.stn1").is_file()

    assert _run("train", config, out) == EXIT_OK
    assert (out / "heat_C1.stnm").is_file()
    summary = read_json(out / "heat_C1_train.json")
    assert summary["best_epoch"] in (0, 1)
    assert summary["final_loss"] <= summary["initial_loss"]

    assert _run("predict", config, out, "--steps", "4") == EXIT_OK
    pred = read_trajectory(out / "heat_C1_pred.stn1")
    assert pred.shape == (5, 64)

    assert _run("evaluate", config, out) == EXIT_OK
    report = read_json(out / "heat_C1_eval.json")
    assert report["mse"] >= 0
    assert (out / "heat_C1_mse.csv").is_file()
    assert (out / "heat_C1_spectrum.csv").is_file()


def test_pipeline_is_deterministic(tmp_path):
    config = _write_config(tmp_path)
    for name in ("a", "b"):
        out = tmp_path / name
        assert _run("generate", config, out) == EXIT_OK
        assert _run("train", config, out) == EXIT_OK
    for name in ("heat_C1.stn1", "heat_fine.stn1", "heat_C1.stnm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bad_config_exits_with_config_error(tmp_path):
    assert main(["generate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["generate", "--config", str(tmp_path / "broken.json"), "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR
    invalid = _write_config(tmp_path, {"recipe": "heat", "overrides": {"D": -1.0}})
    assert main(["generate", "--config", invalid, "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR
    bad_train = _write_config(tmp_path, {"recipe": "heat", "train": {"q": 0}})
    assert main(["train", "--config", bad_train, "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR


def test_missing_dataset_exits_with_config_error(tmp_path):
    config = _write_config(tmp_path)
    assert _run("train", config, tmp_path / "empty") == EXIT_CONFIG_ERROR


def test_resolution_mismatch_exits_with_config_error(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "runs"
    assert _run("generate", config, out) == EXIT_OK
    assert _run("train", config, out) == EXIT_OK
    assert _run("generate", config, out, "--coarse", "2") == EXIT_OK
    code = _run("predict", config, out, "--dataset", str(out / "heat_C2.json"),
                "--checkpoint", str(out / "heat_C1.stnm"))
    assert code == EXIT_CONFIG_ERROR
    assert not (out / "heat_C1_pred.stn1").exists()


def test_bench_without_checkpoint(tmp_path):
    config = _write_config(tmp_path)
    assert _run("bench", config, tmp_path, "--grid", "256", "--repetitions", "10") == EXIT_OK
    table = pd.read_csv(tmp_path / "heat_bench.csv")
    assert table["n_points"].tolist() == [256]
    assert (table["kappa"] > 0).all()


@pytest.mark.parametrize("verb", ["generate", "train", "predict", "denoise", "evaluate", "bench"])
def test_every_verb_has_help(verb, capsys):
    with pytest.raises(SystemExit) as info:
        main([verb, "--help"])
    assert info.value.code == 0
    assert verb in capsys.readouterr().out


def test_noise_learning_and_denoise(tmp_path):
    payload = dict(SMALL_HEAT, overrides={"T": 0.5, "T_train": 0.5, "sigma": 0.1})
    config = _write_config(tmp_path, payload)
    out = tmp_path / "runs"
    assert _run("generate", config, out) == EXIT_OK
    assert (out / "heat_C1_noise.stn1").is_file()
    assert _run("denoise", config, out) == EXIT_CONFIG_ERROR

    assert _run("train", config, out, "--noise", "learn") == EXIT_OK
    assert (out / "heat_C1_noise_estimate.stn1").is_file()
    assert _run("denoise", config, out) == EXIT_OK
    summary = read_json(out / "heat_C1_denoise_summary.json")
    assert -1.0 <= summary["correlation"] <= 1.0
    histogram = pd.read_csv(out / "heat_C1_denoise_histogram.csv")
    assert list(histogram.columns) == ["bin_center", "estimate_count", "truth_count"]
