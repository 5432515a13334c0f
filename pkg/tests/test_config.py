import json
from pathlib import Path

import pytest

from spinbus import settings
from spinbus.config import (
    build_schema,
    config_hash,
    load_config,
    load_config_file,
    read_config_file,
    resolve_threads,
)
from spinbus.exceptions.errors import ConfigError
from spinbus.schema import Schema


class TestSchema:
    """Field rules of a config section"""

    def test_defaults_filled(self):
        data = build_schema().validate({"experiment": "spectrum"})
        assert data["seed"] == 0
        assert data["fixture"] == "paper-chain-homogeneous"
        assert data["sweep"]["points"] == settings.SWEEP_POINTS
        assert data["hierarchy"]["group_sizes"] == [1, 2, 3, 2, 1]
        assert data["chain"] is None

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="Unknown key"):
            build_schema().validate({"experimnet": "spectrum"})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="sweep"):
            build_schema().validate({"sweep": {"ratio": [0.5]}})

    def test_wrong_type(self):
        with pytest.raises(ConfigError):
            build_schema().validate({"seed": "seven"})

    def test_bool_is_not_an_int(self):
        with pytest.raises(ConfigError):
            build_schema().validate({"seed": True})

    def test_list_items_checked(self):
        with pytest.raises(ConfigError):
            build_schema().validate({"sweep": {"ratios": [0.5, "x"]}})

    def test_ints_accepted_as_floats(self):
        data = build_schema().validate({"sweep": {"ratios": [1, 2], "delta_c": 5}})
        assert data["sweep"]["ratios"] == [1.0, 2.0]
        assert isinstance(data["sweep"]["delta_c"], float)

    def test_choices(self):
        with pytest.raises(ConfigError, match="must be one of"):
            build_schema().validate({"solver": {"method": "qr"}})

    def test_minimum(self):
        with pytest.raises(ConfigError, match=">="):
            build_schema().validate({"sweep": {"points": 11}})

    def test_required_field(self):
        schema = Schema("section").add_field("name", str, required=True)
        with pytest.raises(ConfigError, match="Missing required field"):
            schema.validate({})

    def test_section_must_be_mapping(self):
        with pytest.raises(ConfigError, match="mapping"):
            build_schema().validate({"noise": [1, 2]})


class TestLoadConfig:
    """Config loading, hashing and per-invocation options"""

    def test_experiment_filled_in(self):
        config = load_config("noise")
        assert config.experiment == "noise"
        assert config.data["experiment"] == "noise"

    def test_experiment_mismatch(self):
        with pytest.raises(ConfigError, match="subcommand"):
            load_config("noise", {"experiment": "spectrum"})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            load_config("plot")

    def test_unsupported_schema_version(self):
        with pytest.raises(ConfigError, match="schema_version"):
            load_config("spectrum", {"schema_version": settings.SCHEMA_VERSION + 1})

    def test_seed_flag_overrides_config(self):
        config = load_config("noise", {"seed": 3}, seed=11)
        assert config.seed == 11

    def test_hash_ignores_key_order(self):
        a = load_config("noise", {"seed": 1, "noise": {"amplitude": 2.0, "alpha": 1.0}})
        b = load_config("noise", {"noise": {"alpha": 1.0, "amplitude": 2.0}, "seed": 1})
        assert a.config_hash == b.config_hash

    def test_hash_ignores_invocation_options(self):
        a = load_config("noise", out_dir="one", threads=1)
        b = load_config("noise", out_dir="two", threads=4)
        assert a.config_hash == b.config_hash

    def test_hash_tracks_semantic_fields(self):
        a = load_config("noise", {"noise": {"amplitude": 2.0}})
        b = load_config("noise", {"noise": {"amplitude": 2.5}})
        assert a.config_hash != b.config_hash
        assert len(a.config_hash) == 64

    def test_hash_of_defaults_is_explicit(self):
        explicit = load_config("spectrum", {"seed": 0, "fixture": "paper-chain-homogeneous"})
        assert explicit.config_hash == load_config("spectrum").config_hash
        assert config_hash(explicit.data) == explicit.config_hash

    def test_raw_dict_untouched(self):
        raw = {"sweep": {"ratios": [0.5]}}
        load_config("susceptibility", raw, seed=4)
        assert raw == {"sweep": {"ratios": [0.5]}}

    def test_tuples_read_as_lists(self):
        """A dict built in Python hashes like the same YAML file"""
        from_tuple = load_config("susceptibility", {"sweep": {"ratios": (0.5, 1.0)}})
        from_list = load_config("susceptibility", {"sweep": {"ratios": [0.5, 1.0]}})
        assert from_tuple.data["sweep"]["ratios"] == [0.5, 1.0]
        assert from_tuple.config_hash == from_list.config_hash


class TestConfigFiles:
    """YAML and JSON config files"""

    def test_yaml_and_json_agree(self, tmp_path):
        raw = {"experiment": "susceptibility", "sweep": {"ratios": [0.2, 1.0], "points": 21}}
        json_path = tmp_path / "run.json"
        json_path.write_text(json.dumps(raw))
        yaml_path = tmp_path / "run.yaml"
        yaml_path.write_text(
            "experiment: susceptibility\n"
            "sweep:\n"
            "  ratios: [0.2, 1.0]\n"
            "  points: 21\n"
        )
        a = load_config_file("susceptibility", str(json_path))
        b = load_config_file("susceptibility", str(yaml_path))
        assert a.data == b.data
        assert a.config_hash == b.config_hash

    def test_empty_file_uses_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config_file("spectrum", str(path)).data == load_config("spectrum").data

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            read_config_file(str(tmp_path / "absent.yaml"))

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("sweep: [unclosed\n")
        with pytest.raises(ConfigError, match="Cannot parse"):
            read_config_file(str(path))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"seed\": }")
        with pytest.raises(ConfigError):
            read_config_file(str(path))


class TestThreads:
    """--threads flag and environment fallback"""

    def test_default(self, monkeypatch):
        monkeypatch.delenv(settings.THREADS_ENV, raising=False)
        assert resolve_threads() == 1

    def test_environment(self, monkeypatch):
        monkeypatch.setenv(settings.THREADS_ENV, "3")
        assert resolve_threads() == 3

    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv(settings.THREADS_ENV, "3")
        assert resolve_threads(5) == 5

    def test_invalid_environment(self, monkeypatch):
        monkeypatch.setenv(settings.THREADS_ENV, "many")
        with pytest.raises(ConfigError):
            resolve_threads()

    def test_must_be_positive(self):
        with pytest.raises(ConfigError):
            resolve_threads(0)


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.yaml")), ids=lambda p: p.stem)
def test_example_configs_validate(path):
    """Every shipped example config passes the schema for its own subcommand"""
    raw = read_config_file(str(path))
    config = load_config(raw["experiment"], raw)
    assert config.experiment == raw["experiment"]
