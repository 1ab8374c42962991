# app/services/replay.py
import json
import logging
import threading
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

from app.errors import DatasetError, ReplayMissError
from app.services.chat import Backend, ChatRequest, ChatResponse, MediaRef, canonical_key

log = logging.getLogger(__name__)


class FixtureStore:
    """
    Directory of JSON records {key, response_text, ...}. One record per
    `<key>.json` file; a file may also hold a list of records.
    Read-only once loaded, except through `put` (record mode).
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self._records: Dict[str, str] = {}
        self._lock = threading.Lock()
        if self.root.is_dir():
            for path in sorted(self.root.glob("*.json")):
                self._load_file(path)
        log.debug("loaded %d replay records from %s", len(self._records), self.root)

    def _load_file(self, path: Path) -> None:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DatasetError(f"corrupt replay fixture: {e.msg}", path=str(path), line=e.lineno) from e
        for i, rec in enumerate(data if isinstance(data, list) else [data]):
            try:
                self._records[rec["key"]] = rec["response_text"]
            except (KeyError, TypeError) as e:
                raise DatasetError(f"replay fixture record {i} lacks key/response_text", path=str(path)) from e

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: str) -> bool:
        return key in self._records

    def get(self, key: str) -> Optional[str]:
        return self._records.get(key)

    def put(self, key: str, response_text: str, request: ChatRequest) -> None:
        rec = {
            "key": key,
            "response_text": response_text,
            "model_id": request.model_id,
            "request_text": request.user_text(),
            "media": [Path(p.frame_path).name for p in request.media_parts()],
        }
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / f"{key}.json").write_text(
                json.dumps(rec, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            self._records[key] = response_text


class _LoggingBackend:
    def __init__(self, model_id: str):
        self.model_id = model_id
        self.calls: List[ChatRequest] = []
        self._calls_lock = threading.Lock()

    def _prepare(self, request: ChatRequest, media: Optional[MediaRef]) -> ChatRequest:
        request = request.for_model(self.model_id).with_media(media)
        with self._calls_lock:
            self.calls.append(request)
        return request


class ReplayBackend(_LoggingBackend):
    """Answers from recorded fixtures. Never retries, never touches the network."""

    def __init__(self, store: Union[FixtureStore, str, Path], model_id: str):
        super().__init__(model_id)
        self.store = store if isinstance(store, FixtureStore) else FixtureStore(store)

    def complete(self, request: ChatRequest, media: Optional[MediaRef] = None) -> ChatResponse:
        request = self._prepare(request, media)
        key = canonical_key(request)
        text = self.store.get(key)
        if text is None:
            log.warning("replay miss for model %s key %s", request.model_id, key)
            raise ReplayMissError(key)
        return ChatResponse(text=text, latency_ms=0)


class RecordingBackend(_LoggingBackend):
    """Replays what it has; on a miss asks the wrapped backend and records the answer."""

    def __init__(self, inner: Backend, store: Union[FixtureStore, str, Path]):
        super().__init__(inner.model_id)
        self.inner = inner
        self.store = store if isinstance(store, FixtureStore) else FixtureStore(store)

    def complete(self, request: ChatRequest, media: Optional[MediaRef] = None) -> ChatResponse:
        request = self._prepare(request, media)
        key = canonical_key(request)
        text = self.store.get(key)
        if text is not None:
            return ChatResponse(text=text, latency_ms=0)
        # media is already attached; the inner backend gets the full request
        resp = self.inner.complete(request)
        self.store.put(key, resp.text, request)
        log.info("recorded fixture %s", key)
        return resp


class MockBackend(_LoggingBackend):
    """Scripted backend for tests: `script(request) -> text`. An exception from the script is raised as-is."""

    def __init__(self, script: Callable[[ChatRequest], str], model_id: str = "mock"):
        super().__init__(model_id)
        self.script = script

    def complete(self, request: ChatRequest, media: Optional[MediaRef] = None) -> ChatResponse:
        request = self._prepare(request, media)
        return ChatResponse(text=self.script(request), latency_ms=0)
