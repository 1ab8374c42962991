# app/services/chat.py
"""
Backend-neutral chat contract shared by the answering VLM and the router LLM.

Replay key (stable across platforms):

    text  = "\n".join(f"{role}:{text_part}" for every text part, in message order)
            with CRLF/CR normalized to LF
    media = [basename(frame_path) for every media part, in message order]
    key   = sha256(json.dumps({"media": media, "model_id": model_id, "text": text},
                              sort_keys=True, ensure_ascii=False,
                              separators=(",", ":")).encode("utf-8")).hexdigest()

Temperature and max_output are not part of the key.
"""
import hashlib
import json
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Protocol, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_TEMPERATURE = 0.3
DEFAULT_MAX_OUTPUT = 512

Role = Literal["system", "user", "assistant"]


class TextPart(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["text"] = "text"
    text: str


class MediaPart(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["media"] = "media"
    frame_path: str


Part = Annotated[Union[TextPart, MediaPart], Field(discriminator="type")]


class ChatMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: Role
    parts: List[Part]

    @property
    def text(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))


class MediaRef(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame_paths: List[str] = Field(..., min_length=1)

    def missing(self) -> List[str]:
        return [p for p in self.frame_paths if not Path(p).is_file()]


class ChatRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    messages: List[ChatMessage] = Field(..., min_length=1)
    temperature: float = Field(DEFAULT_TEMPERATURE, ge=0.0, le=2.0)
    max_output: int = Field(DEFAULT_MAX_OUTPUT, gt=0)
    model_id: str = ""

    @field_validator("messages")
    @classmethod
    def needs_user(cls, v: List[ChatMessage]) -> List[ChatMessage]:
        if not any(m.role == "user" for m in v):
            raise ValueError("a chat request needs at least one user message")
        return v

    @classmethod
    def from_user_text(cls, text: str, system: Optional[str] = None, **kwargs) -> "ChatRequest":
        messages = []
        if system:
            messages.append(ChatMessage(role="system", parts=[TextPart(text=system)]))
        messages.append(ChatMessage(role="user", parts=[TextPart(text=text)]))
        return cls(messages=messages, **kwargs)

    def media_parts(self) -> List[MediaPart]:
        return [p for m in self.messages for p in m.parts if isinstance(p, MediaPart)]

    def user_text(self) -> str:
        return "\n".join(m.text for m in self.messages if m.role == "user")

    def with_media(self, media: Optional[MediaRef]) -> "ChatRequest":
        """Put the frames in front of the text of the last user message."""
        if media is None:
            return self
        idx = max(i for i, m in enumerate(self.messages) if m.role == "user")
        target = self.messages[idx]
        frames = [MediaPart(frame_path=p) for p in media.frame_paths]
        messages = list(self.messages)
        messages[idx] = ChatMessage(role=target.role, parts=[*frames, *target.parts])
        return self.model_copy(update={"messages": messages})

    def for_model(self, model_id: str) -> "ChatRequest":
        if self.model_id:
            return self
        return self.model_copy(update={"model_id": model_id})


class ChatResponse(BaseModel):
    text: str
    usage: Optional[Dict[str, int]] = None
    latency_ms: int = Field(0, ge=0)


class Backend(Protocol):
    model_id: str
    calls: List[ChatRequest]

    def complete(self, request: ChatRequest, media: Optional[MediaRef] = None) -> ChatResponse:
        ...


def normalize_text(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def canonical_key(request: ChatRequest) -> str:
    text = "\n".join(
        f"{m.role}:{p.text}" for m in request.messages for p in m.parts if isinstance(p, TextPart)
    )
    media = [Path(p.frame_path).name for p in request.media_parts()]
    payload = json.dumps(
        {"media": media, "model_id": request.model_id, "text": normalize_text(text)},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def complete(backend: Backend, request: ChatRequest, media: Optional[MediaRef] = None) -> ChatResponse:
    """Send one request; frames in `media` go in front of the last user message."""
    return backend.complete(request, media)
