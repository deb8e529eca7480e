import pytest

from vibfuzz.harness.config import ConfigError, PipelineConfig, load_config


def test_defaults():
    config = load_config(environ={})
    assert config == PipelineConfig()
    assert config.kind == "trapezoidal"
    assert config.sigma_divisor == 6.0
    assert config.grid_points == 1201


def test_environment_then_file_then_overrides(tmp_path):
    env = {"VIBFUZZ_KIND": "gaussian", "VIBFUZZ_GRID_POINTS": "801", "VIBFUZZ_SEED": "3"}
    config_file = tmp_path / "vibfuzz.conf"
    config_file.write_text("kind=triangular\nVIBFUZZ_PROBE_OFFSET=0.02\n")

    assert load_config(environ=env).kind == "gaussian"
    config = load_config(config_file, overrides={"seed": 9, "sigma_divisor": None}, environ=env)
    assert config.kind == "triangular"
    assert config.grid_points == 801
    assert config.probe_offset == 0.02
    assert config.seed == 9
    assert config.sigma_divisor == 6.0


@pytest.mark.parametrize(
    "overrides",
    [
        {"kind": "bell"},
        {"shoulder_fraction": 0.5},
        {"sigma_divisor": 0},
        {"grid_points": 2},
        {"gauss_floor": 1.0},
        {"colour": "blue"},
    ],
)
def test_invalid_values_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides, environ={})


def test_unparseable_environment_value():
    with pytest.raises(ConfigError, match="grid_points"):
        load_config(environ={"VIBFUZZ_GRID_POINTS": "lots"})


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.conf", environ={})


def test_replace_revalidates():
    config = PipelineConfig()
    assert config.replace(kind="gaussian").kind == "gaussian"
    with pytest.raises(ConfigError):
        config.replace(probe_offset=0.7)
