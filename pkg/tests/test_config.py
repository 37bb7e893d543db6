from os.path import exists

import pytest
import tomli

from graperun.core import ConfigError, GrapeRunConfig, ResourceURIError


def test_missing_config_copies_template(tmp_path):
    path = tmp_path / "project" / "config.toml"

    with pytest.raises(FileNotFoundError):
        GrapeRunConfig.from_config_file(str(path))

    assert exists(path)
    # the copied template is a valid config
    config = GrapeRunConfig.from_config_file(str(path))
    assert config.get_run_config()["mode"] == "both"


def test_broken_toml(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text("[run\nmode = 'base'\n")

    with pytest.raises(ConfigError):
        GrapeRunConfig.from_config_file(str(path))


def test_paths_resolve_against_config_dir(tmp_path, config_file):
    config = GrapeRunConfig.from_config_file(config_file())

    assert config.get_output_path() == f"{tmp_path}/runs"
    assert config.get_cache_path() == f"{tmp_path}/work/cache"


def test_user_values_merge_into_template(config_file):
    config = GrapeRunConfig.from_config_file(config_file(backend={"planner": {"model_name": "gpt-4o-mini"}}))

    planner = config.get_backend_config("planner")
    assert planner["model_name"] == "gpt-4o-mini"
    assert planner["kind"] == "simworld"
    assert config.get_run_config()["jobs"] == 2
    assert config.get_run_config()["max_edit_steps"] == 8
    assert config.get_simworld_config() == {"error_rate": 0.5, "noise_drop_rate": 0.0, "noise_corrupt_rate": 0.0}


@pytest.mark.parametrize(
    "run, simworld, backend",
    [
        ({"mode": "fast"}, None, None),
        ({"planner_mode": "chatty"}, None, None),
        ({"qa_aggregation": "majority"}, None, None),
        ({"jobs": 0}, None, None),
        ({"max_edit_steps": -1}, None, None),
        ({"seeds": []}, None, None),
        (None, {"error_rate": 1.5}, None),
        (None, {"noise_drop_rate": -0.1}, None),
        (None, None, {"editor": {"kind": "grpc"}}),
    ],
)
def test_invalid_values(config_file, run, simworld, backend):
    with pytest.raises(ConfigError):
        GrapeRunConfig.from_config_file(config_file(run, simworld, backend))


def test_unknown_backend_role(config_file):
    config = GrapeRunConfig.from_config_file(config_file())

    with pytest.raises(ConfigError):
        config.get_backend_config("critic")


def test_update_run_config(config_file):
    config = GrapeRunConfig.from_config_file(config_file())

    config.update_run_config({"mode": "base", "jobs": None, "seeds": [1, 2]})
    run_config = config.get_run_config()
    assert run_config["mode"] == "base"
    assert run_config["jobs"] == 2
    assert run_config["seeds"] == [1, 2]

    with pytest.raises(KeyError):
        config.update_run_config({"speed": "fast"})

    with pytest.raises(ConfigError):
        config.update_run_config({"jobs": 0})


def test_returned_sections_are_copies(config_file):
    config = GrapeRunConfig.from_config_file(config_file())

    config.get_run_config()["mode"] = "base"
    assert config.get_run_config()["mode"] == "both"


def test_save_snapshot(tmp_path, config_file):
    config = GrapeRunConfig.from_config_file(config_file(run={"label": "snap"}))

    config.save_graperun_config(str(tmp_path / "out" / "config.snapshot"))

    with open(tmp_path / "out" / "config.snapshot", "rb") as f:
        snapshot = tomli.load(f)
    assert snapshot["run"] == config.get_run_config()
    assert snapshot["backend"]["vqa"]["kind"] == "simworld"


def test_resource_uris(tmp_path):
    config = GrapeRunConfig(str(tmp_path))
    config.register_resource_uri(":GRAPERUN_EXAMPLES_PATH:", ":GRAPERUN_HOME_PATH:/examples")

    assert config.parse_resource_uri(":GRAPERUN_EXAMPLES_PATH:/a.scene") == f"{tmp_path}/examples/a.scene"
    assert config.parse_resource_uri("/plain/path") == "/plain/path"

    with pytest.raises(ResourceURIError):
        config.register_resource_uri(":GRAPERUN_EXAMPLES_PATH:", "/elsewhere")
    config.register_resource_uri(":GRAPERUN_EXAMPLES_PATH:", "/elsewhere", replace=True)
    assert config.parse_resource_uri(":GRAPERUN_EXAMPLES_PATH:") == "/elsewhere"

    with pytest.raises(ResourceURIError):
        config.register_resource_uri("GRAPERUN_BAD", "/bad")
    with pytest.raises(ResourceURIError):
        config.parse_resource_uri(":GRAPERUN_UNKNOWN:/x")

    config.register_resource_uri(":GRAPERUN_LOOP:", ":GRAPERUN_LOOP:/again")
    with pytest.raises(ResourceURIError):
        config.parse_resource_uri(":GRAPERUN_LOOP:")
