import json

import pytest

from app import config
from app.errors import ConfigError


def test_get_app_settings_reads_env(monkeypatch):
    monkeypatch.setenv("PARTY_LOG_LEVEL", "debug")
    monkeypatch.setenv("PARTY_THREADS", "4")
    monkeypatch.setenv("PARTY_DEFAULT_SEED", "42")

    settings = config.get_app_settings()
    assert settings.LOG_LEVEL == "DEBUG"
    assert settings.THREADS == 4
    assert settings.DEFAULT_SEED == 42
    assert config.get_app_settings() is settings

    # mutate env to confirm caching behaviour
    monkeypatch.setenv("PARTY_THREADS", "8")
    assert config.get_app_settings().THREADS == 4


def test_app_settings_defaults(monkeypatch):
    for key in ("PARTY_LOG_LEVEL", "PARTY_THREADS", "PARTY_DEFAULT_SEED"):
        monkeypatch.delenv(key, raising=False)
    settings = config.AppSettings(_env_file=None)
    assert settings.LOG_LEVEL == "INFO"
    assert settings.THREADS == 1
    assert settings.DEFAULT_SEED is None


@pytest.mark.parametrize("field,value", [("LOG_LEVEL", "LOUD"), ("THREADS", 0)])
def test_app_settings_validation(field, value):
    with pytest.raises(ValueError):
        config.AppSettings(_env_file=None, **{field: value})


def test_run_config_defaults_match_stage_defaults():
    run = config.RunConfig()
    assert run.propagation.iterations == 2
    assert run.propagation.alpha == 0.5
    assert run.gcn.hidden_dim == 100
    assert run.gcn.epochs == 1000
    assert run.gcn.learning_rate == 1e-3
    assert run.experiment.test_fraction == 0.4
    assert run.experiment.repetitions == 10
    assert run.rate_table.get("tweets").total_per_window == 180000


def test_run_config_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "master_seed": 3,
                "propagation": {"iterations": 5},
                "rate_overrides": {
                    "tweets": {"items_per_request": 100, "requests_per_window": 10}
                },
            }
        )
    )
    run = config.RunConfig.from_json_file(path)
    assert run.master_seed == 3
    assert run.propagation.iterations == 5
    assert run.propagation.alpha == 0.5
    assert run.rate_table.get("tweets").total_per_window == 1000


@pytest.mark.parametrize(
    "payload,field",
    [
        ({"propagation": {"iterations": 0}}, "propagation.iterations"),
        ({"gcn": {"layers": 3}}, "gcn.layers"),
        ({"surprise": 1}, "surprise"),
    ],
)
def test_run_config_names_bad_field(tmp_path, payload, field):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ConfigError, match=field):
        config.RunConfig.from_json_file(path)


def test_run_config_malformed_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed JSON"):
        config.RunConfig.from_json_file(path)


def test_run_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        config.RunConfig.from_json_file(tmp_path / "nope.json")


def test_write_schema(tmp_path):
    path = tmp_path / "docs" / "schema.json"
    config.write_schema(path)
    schema = json.loads(path.read_text())
    assert {"propagation", "gcn", "forest", "sbm"} <= set(schema["properties"])
