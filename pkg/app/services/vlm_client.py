# app/services/vlm_client.py
import logging
import os
import threading
import time
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import requests

from app.errors import BackendError, BackendHTTPError, BackendTransportError
from app.services.chat import ChatRequest, ChatResponse, MediaPart, MediaRef, TextPart
from app.services.frames import image_data_url

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = float(os.getenv("SQAROUTE_TIMEOUT_S", "120"))
DEFAULT_MAX_INFLIGHT = int(os.getenv("SQAROUTE_MAX_INFLIGHT", "4"))

MediaMode = Literal["base64", "url"]


def to_wire(request: ChatRequest, media_mode: MediaMode = "base64",
            media_url_base: Optional[str] = None) -> Dict[str, Any]:
    """Chat-completions JSON body. Text-only messages go out as a plain string."""
    messages = []
    for m in request.messages:
        if not any(isinstance(p, MediaPart) for p in m.parts):
            messages.append({"role": m.role, "content": m.text})
            continue
        content = []
        for p in m.parts:
            if isinstance(p, TextPart):
                content.append({"type": "text", "text": p.text})
            else:
                content.append({"type": "image_url", "image_url": {"url": _media_url(p.frame_path, media_mode, media_url_base)}})
        messages.append({"role": m.role, "content": content})
    return {
        "model": request.model_id,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_output,
    }


def _media_url(frame_path: str, mode: MediaMode, base: Optional[str]) -> str:
    if mode == "base64":
        return image_data_url(frame_path)
    path = Path(frame_path)
    if base:
        # scene dir + file name, relative to the server's media root
        return f"{base.rstrip('/')}/{path.parent.name}/{path.name}"
    return path.resolve().as_uri()


class LiveBackend:
    """Any OpenAI-compatible /chat/completions endpoint (vLLM, llama.cpp, hosted APIs)."""

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: Optional[str] = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        max_inflight: int = DEFAULT_MAX_INFLIGHT,
        media_mode: MediaMode = "base64",
        media_url_base: Optional[str] = None,
        retry_backoff_s: float = 2.0,
    ):
        if not endpoint:
            raise BackendError("no endpoint configured; set SQAROUTE_ENDPOINT or pass --endpoint")
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.media_mode = media_mode
        self.media_url_base = media_url_base
        self.retry_backoff_s = retry_backoff_s
        self.calls: List[ChatRequest] = []
        self._slots = threading.BoundedSemaphore(max_inflight)
        self._lock = threading.Lock()

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    # one retry on transport errors only; an HTTP error is raised with its payload
    def _request(self, url: str, payload: Dict[str, Any], max_retries: int = 1) -> Dict[str, Any]:
        for attempt in range(max_retries + 1):
            try:
                r = requests.request("POST", url, headers=self._headers(), json=payload, timeout=self.timeout_s)
            except (requests.ConnectionError, requests.Timeout) as e:
                if attempt < max_retries:
                    log.warning("transport error talking to %s (%s); retrying in %.1fs", url, e, self.retry_backoff_s)
                    time.sleep(self.retry_backoff_s)
                    continue
                raise BackendTransportError(f"{type(e).__name__}: {e}") from e

            ct = r.headers.get("content-type", "")
            body: Dict[str, Any] = {}
            try:
                if "json" in ct:
                    body = r.json()
            except ValueError:
                body = {"raw": r.text[:300]}

            if 200 <= r.status_code < 300:
                return body

            raise BackendHTTPError(r.status_code, body or {"raw": r.text[:300]})

        raise BackendTransportError("retry_exhausted")

    def complete(self, request: ChatRequest, media: Optional[MediaRef] = None) -> ChatResponse:
        if media is not None and media.missing():
            raise BackendError(f"frames missing at dispatch time: {media.missing()[:3]}")
        request = request.for_model(self.model_id).with_media(media)
        with self._lock:
            self.calls.append(request)

        payload = to_wire(request, self.media_mode, self.media_url_base)
        with self._slots:
            t0 = time.monotonic()
            body = self._request(f"{self.endpoint}/chat/completions", payload)
            latency_ms = int((time.monotonic() - t0) * 1000)

        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise BackendError(f"malformed completion body: {str(body)[:300]}") from e
        if text is None:
            raise BackendError("completion has no text content")

        usage = body.get("usage") or None
        if usage:
            usage = {k: int(v) for k, v in usage.items() if isinstance(v, (int, float))}
        return ChatResponse(text=text, usage=usage, latency_ms=latency_ms)
