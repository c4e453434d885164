import json

import numpy as np
import pytest
import yaml

from liftrom.cli import main
from liftrom.dmd import SnapshotEnsemble, write_ensemble_csv

SMALL = {
    "n_train": 15,
    "n_test": 20,
    "eval_times": [10.0, 30.0],
    "fom": {"window": [12.0, 20.0], "dt": 0.05},
    "sweeps": {"dt_values": [0.05, 0.2], "train_sizes": [1, 15]},
}


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL))
    return str(path)


def test_pipeline_and_sweeps(cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out), "--quiet", "pipeline"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["frozen_parameters"] == ["c1", "c5", "d1", "d5"]
    assert (out / "report.json").exists()
    # global flags are accepted after the subcommand too
    assert main(["sweeps", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    assert (out / "sweep_gpr.csv").exists()


def test_stepwise_commands(cfg, tmp_path, capsys):
    out = str(tmp_path / "o")
    common = ["--config", cfg, "--out", out, "--quiet"]
    assert main(common + ["sample", "--n", "6", "--strategy", "latin-hypercube"]) == 0
    assert main(common + ["fom-run", "--samples", f"{out}/samples.csv", "--dt", "0.1"]) == 0
    assert main(common + ["dmd-fit", "--ensemble", f"{out}/ensemble.csv", "--rank", "6"]) == 0
    assert main(common + ["dmd-forecast", "--model", f"{out}/dmd_model.json", "--times", "25,30",
                          "--ensemble", f"{out}/ensemble.csv"]) == 0
    lines = (tmp_path / "o" / "forecast.csv").read_text().splitlines()
    assert len(lines) == 3 and len(lines[0].split(",")) == 7
    assert main(common + ["dyas"]) == 0
    assert json.loads(capsys.readouterr().out)["frozen_indices"] == [1, 5, 6, 10]
    assert main(common + ["gpr-compare", "--times", "30"]) == 0
    assert main(common + ["deform", "--mu-file", f"{out}/samples.csv", "--row", "2"]) == 0
    assert (tmp_path / "o" / "mesh_morphed.csv").exists()


def test_seed_changes_samples(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out", str(a), "--seed", "1", "--quiet", "sample", "--n", "4"]) == 0
    assert main(["--out", str(b), "--seed", "2", "--quiet", "sample", "--n", "4"]) == 0
    assert (a / "samples.csv").read_text() != (b / "samples.csv").read_text()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("bogus: 1\n")
    assert main(["--config", str(bad), "pipeline"]) == 2
    assert "bogus" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.yaml"), "pipeline"]) == 2
    assert main(["--out", str(tmp_path), "deform", "--mu", "0.5,0,0,0,0,0,0,0,0,0"]) == 2


def test_numerical_failure_exit_3(tmp_path):
    ens = SnapshotEnsemble.from_grid(np.zeros((3, 5)), np.arange(5.0))
    path = tmp_path / "zeros.csv"
    write_ensemble_csv(ens, path)
    assert main(["--out", str(tmp_path), "--quiet", "dmd-fit", "--ensemble", str(path)]) == 3


def test_freeze_everything_is_a_config_error(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({**SMALL, "dyas": {"freeze_threshold": 1.0}}))
    assert main(["--config", str(path), "--out", str(tmp_path / "o"), "--quiet", "pipeline"]) == 2
    assert (tmp_path / "o" / "FAILED.json").exists()


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2
