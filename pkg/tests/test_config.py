import json

import pytest

from app import config
from app.errors import ConfigError
from app.services.replay import MockBackend, ReplayBackend


def _write(tmp_path, data):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_overrides_layer_on_top_of_file(tmp_path):
    path = _write(tmp_path, {
        "dataset": "data/test.jsonl",
        "condition": "baseline",
        "frames": 8,
        "answer_backend": {"kind": "mock", "model_id": "m1"},
    })
    cfg = config.load_config(path, {"frames": 32, "temperature": None,
                                    "answer_backend": {"model_id": "m2", "endpoint": None}})
    assert cfg.frames == 32
    assert cfg.temperature == 0.3
    assert cfg.answer_backend.kind == "mock"
    assert cfg.answer_backend.model_id == "m2"


def test_replay_dir_feeds_backends_and_router_model_default(tmp_path):
    cfg = config.load_config(None, {
        "dataset": "d.jsonl",
        "condition": "route_llm",
        "replay_dir": str(tmp_path),
        "answer_backend": {"kind": "replay"},
        "router_backend": {"kind": "replay"},
    })
    assert cfg.answer_backend.fixtures == tmp_path
    assert cfg.router_backend.fixtures == tmp_path
    assert cfg.router_backend.model_id == config.ROUTER_MODEL
    assert isinstance(config.build_backend(cfg.answer_backend), ReplayBackend)


def test_route_llm_needs_a_router():
    with pytest.raises(ConfigError, match="router_backend"):
        config.load_config(None, {"dataset": "d.jsonl", "condition": "route_llm",
                                  "answer_backend": {"kind": "mock"}})


@pytest.mark.parametrize("override", [
    {"condition": "zero_shot"},
    {"frames": 0},
    {"temperature": 3.0},
    {"concurrency_limit": 0},
    {"answer_backend": {"kind": "replay"}},
])
def test_invalid_values_are_config_errors(override):
    base = {"dataset": "d.jsonl", "condition": "baseline", "answer_backend": {"kind": "mock"}}
    with pytest.raises(ConfigError):
        config.load_config(None, {**base, **override})


def test_unreadable_config_file(tmp_path):
    bad = tmp_path / "run.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="cannot read"):
        config.load_config(bad, {})
    with pytest.raises(ConfigError):
        config.load_config(tmp_path / "missing.json", {})


def test_resolved_names_the_key_env_var_only(tmp_path, monkeypatch):
    monkeypatch.setenv("SQAROUTE_API_KEY", "sk-secret")
    cfg = config.load_config(None, {"dataset": "d.jsonl", "condition": "cot",
                                    "answer_backend": {"kind": "live", "endpoint": "http://localhost:8000/v1"}})
    text = json.dumps(cfg.resolved())
    assert "sk-secret" not in text
    assert cfg.resolved()["answer_backend"]["api_key_env"] == "SQAROUTE_API_KEY"


def test_mock_backend_reply():
    backend = config.build_backend(config.backend_spec(kind="mock", mock_reply="yes", endpoint=None))
    assert isinstance(backend, MockBackend)
    with pytest.raises(ConfigError):
        config.backend_spec(kind="replay")
