# app/config.py
import json
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.errors import ConfigError
from app.logic.scoring import Condition
from app.services.chat import Backend
from app.services.replay import FixtureStore, MockBackend, RecordingBackend, ReplayBackend
from app.services.vlm_client import LiveBackend

load_dotenv()

ENDPOINT = os.getenv("SQAROUTE_ENDPOINT")
MODEL = os.getenv("SQAROUTE_MODEL", "Qwen/Qwen2-VL-2B-Instruct")
ROUTER_MODEL = os.getenv("SQAROUTE_ROUTER_MODEL", "Qwen/Qwen2.5-1.5B-Instruct")
TIMEOUT_S = float(os.getenv("SQAROUTE_TIMEOUT_S", "120"))
MAX_INFLIGHT = int(os.getenv("SQAROUTE_MAX_INFLIGHT", "4"))
LOG_LEVEL = os.getenv("SQAROUTE_LOG_LEVEL", "INFO")

BackendKind = Literal["live", "replay", "record", "mock"]


class BackendSpec(BaseModel):
    kind: BackendKind = "live"
    endpoint: Optional[str] = None
    model_id: str = MODEL
    api_key_env: str = "SQAROUTE_API_KEY"
    fixtures: Optional[Path] = None
    media_mode: Literal["base64", "url"] = "base64"
    media_url_base: Optional[str] = None
    timeout_s: float = Field(TIMEOUT_S, gt=0)
    max_inflight: int = Field(MAX_INFLIGHT, ge=1)
    # only for kind=mock: fixed reply, handy for plumbing dry runs
    mock_reply: str = "unknown"

    @model_validator(mode="after")
    def needs_what_it_uses(self) -> "BackendSpec":
        if self.kind in ("live", "record") and not (self.endpoint or ENDPOINT):
            raise ValueError(f"{self.kind} backend needs an endpoint (or SQAROUTE_ENDPOINT)")
        if self.kind in ("replay", "record") and self.fixtures is None:
            raise ValueError(f"{self.kind} backend needs a fixtures directory")
        return self


class RunConfig(BaseModel):
    dataset: Path
    manifest: Optional[Path] = None
    condition: Condition
    answer_backend: BackendSpec
    router_backend: Optional[BackendSpec] = None
    demos_path: Optional[Path] = None
    frames: int = Field(16, ge=1)
    temperature: float = Field(0.3, ge=0.0, le=2.0)
    concurrency_limit: int = Field(4, ge=1)
    output: Path = Path("runs")
    replay_dir: Optional[Path] = None
    resume: bool = False

    @model_validator(mode="before")
    @classmethod
    def fill_fixture_dirs(cls, data: Any) -> Any:
        # a run-level replay_dir feeds any replay/record backend that has no fixtures of its own
        if not isinstance(data, dict):
            return data
        router = data.get("router_backend")
        if isinstance(router, dict) and not router.get("model_id"):
            data["router_backend"] = {**router, "model_id": ROUTER_MODEL}
        if data.get("replay_dir"):
            for key in ("answer_backend", "router_backend"):
                spec = data.get(key)
                if isinstance(spec, dict) and spec.get("kind") in ("replay", "record") and not spec.get("fixtures"):
                    data[key] = {**spec, "fixtures": str(data["replay_dir"])}
        return data

    @model_validator(mode="after")
    def condition_inputs(self) -> "RunConfig":
        if self.condition == "route_llm" and self.router_backend is None:
            raise ValueError("condition route_llm needs a router_backend")
        return self

    def resolved(self) -> Dict[str, Any]:
        """What gets written next to the outputs; keys are referenced by env var name only."""
        return json.loads(self.model_dump_json())


def load_config(path: Optional[Path], overrides: Dict[str, Any]) -> RunConfig:
    """JSON config file (optional) with CLI overrides layered on top; None overrides are ignored."""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            merged = dict(data.get(key) or {})
            merged.update({k: v for k, v in value.items() if v is not None})
            if merged:
                data[key] = merged
        else:
            data[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


def backend_spec(**fields: Any) -> BackendSpec:
    """BackendSpec from loose keyword input (None means default); bad input is a ConfigError."""
    try:
        return BackendSpec(**{k: v for k, v in fields.items() if v is not None})
    except ValidationError as e:
        raise ConfigError(f"invalid backend: {e}") from e


def build_backend(spec: BackendSpec) -> Backend:
    if spec.kind == "mock":
        reply = spec.mock_reply
        return MockBackend(lambda _req: reply, model_id=spec.model_id)
    if spec.kind == "replay":
        return ReplayBackend(FixtureStore(spec.fixtures), model_id=spec.model_id)

    live = LiveBackend(
        endpoint=spec.endpoint or ENDPOINT,
        model_id=spec.model_id,
        api_key=os.getenv(spec.api_key_env),
        timeout_s=spec.timeout_s,
        max_inflight=spec.max_inflight,
        media_mode=spec.media_mode,
        media_url_base=spec.media_url_base,
    )
    if spec.kind == "record":
        return RecordingBackend(live, FixtureStore(spec.fixtures))
    return live
