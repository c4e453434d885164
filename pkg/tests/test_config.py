import pytest

from liftrom.config import PipelineConfig, config_from_dict, dump_config, load_config
from liftrom.errors import ConfigError


def test_defaults_validate():
    config = PipelineConfig().validate()
    assert (config.t_a, config.t_b) == (12.0, 20.0)
    assert config.n_train == 70 and config.n_test == 100
    assert config.eval_times[-1] == 30.0
    assert config.surrogate.build().frozen_indices == (0, 4, 5, 9)


@pytest.mark.parametrize("data, match", [
    ({"bogus": 1}, "bogus"),
    ({"dmd": {"rnak": 3}}, "dmd"),
    ({"geometry": {"naca": "4412", "colour": "red"}}, "colour"),
])
def test_unknown_keys_rejected(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(data)


@pytest.mark.parametrize("data", [
    {"n_train": "70"},
    {"n_train": True},
    {"gpr": {"optimize": "yes"}},
    {"fom": {"window": 12}},
    {"dmd": 3},
])
def test_wrong_types_rejected(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


@pytest.mark.parametrize("data", [
    {"fom": {"window": [20, 12]}},
    {"fom": {"dt": 0.0}},
    {"n_test": 0},
    {"sampling": "sobol"},
    {"eval_times": []},
    {"dyas": {"gradient_provider": "adjoint"}},
    {"dmd": {"rank_mode": "energy", "energy": 1.5}},
    {"surrogate": {"frozen_indices": [1, 2]}},
    {"domain": {"dimension": 6}},
    {"geometry": {"r_inner": 8.0}},
])
def test_invalid_values_rejected(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_yaml_round_trip(tmp_path):
    config = config_from_dict({"seed": 5, "n_train": 30, "dmd": {"rank": 6}, "gpr": {"optimize": True}})
    path = tmp_path / "c.yaml"
    dump_config(config, path)
    assert load_config(path) == config


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("seed: [1,\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_config(empty) == PipelineConfig()


def test_shipped_example_config_loads():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"
    assert load_config(path) == PipelineConfig()
