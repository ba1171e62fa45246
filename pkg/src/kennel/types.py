"""Core domain types shared across the framework."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, ClassVar

from kennel.errors import InvalidInputError

MAX_SESSION_ID_LENGTH = 256


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


def _utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class Message:
    """One turn of a conversation. Content may be empty only for system messages."""

    role: Role
    content: str
    created_at: datetime = field(default_factory=_utcnow)

    def __post_init__(self):
        if not isinstance(self.role, Role):
            try:
                object.__setattr__(self, "role", Role(self.role))
            except ValueError:
                raise InvalidInputError(f"unknown role: {self.role!r}") from None
        if not self.content and self.role is not Role.SYSTEM:
            raise InvalidInputError(f"{self.role.value} message content must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {
            "role": self.role.value,
            "content": self.content,
            "created_at": self.created_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Message":
        created = datetime.strptime(data["created_at"], "%Y-%m-%dT%H:%M:%SZ")
        return cls(
            role=Role(data["role"]),
            content=data["content"],
            created_at=created.replace(tzinfo=timezone.utc),
        )


def validate_session_id(session_id: str) -> str:
    """Session ids are non-empty text of at most 256 characters."""
    if not isinstance(session_id, str) or not session_id:
        raise InvalidInputError("session id must be non-empty")
    if len(session_id) > MAX_SESSION_ID_LENGTH:
        raise InvalidInputError(f"session id exceeds {MAX_SESSION_ID_LENGTH} characters")
    return session_id


@dataclass(frozen=True)
class PromptParameters:
    """Model selection and sampling controls for one call.

    `extra` is passed through to the provider wire format at top level and
    must not collide with the named fields' wire keys.
    """

    model: str = ""
    temperature: float | None = None
    max_tokens: int | None = None
    top_p: float | None = None
    system_prompt: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.temperature is not None and not 0.0 <= self.temperature <= 2.0:
            raise InvalidInputError("temperature must be within [0, 2]")
        if self.top_p is not None and not 0.0 < self.top_p <= 1.0:
            raise InvalidInputError("top_p must be within (0, 1]")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise InvalidInputError("max_tokens must be >= 1")


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int

    def to_dict(self) -> dict[str, int]:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens}


@dataclass(frozen=True)
class FinishReason:
    """Why generation stopped. `detail` carries the original wire value
    for reasons outside the known set."""

    kind: str
    detail: str = ""

    STOP: ClassVar["FinishReason"]
    LENGTH: ClassVar["FinishReason"]
    FILTERED: ClassVar["FinishReason"]

    @classmethod
    def other(cls, detail: str) -> "FinishReason":
        return cls("other", detail)

    @classmethod
    def from_wire(cls, value: Any) -> "FinishReason":
        mapping = {"stop": cls.STOP, "length": cls.LENGTH, "content_filter": cls.FILTERED}
        if isinstance(value, str) and value in mapping:
            return mapping[value]
        return cls.other("" if value is None else str(value))

    def __str__(self) -> str:
        return self.detail if self.kind == "other" and self.detail else self.kind


FinishReason.STOP = FinishReason("stop")
FinishReason.LENGTH = FinishReason("length")
FinishReason.FILTERED = FinishReason("filtered")


@dataclass(frozen=True)
class ChatResponse:
    """Normalized provider output. `raw` is the payload as received."""

    text: str
    finish_reason: FinishReason
    model: str
    usage: Usage | None = None
    raw: Any = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "finish_reason": {"kind": self.finish_reason.kind, "detail": self.finish_reason.detail},
            "model": self.model,
            "usage": self.usage.to_dict() if self.usage else None,
            "raw": self.raw,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ChatResponse":
        fr = data["finish_reason"]
        usage = data.get("usage")
        return cls(
            text=data["text"],
            finish_reason=FinishReason(fr["kind"], fr.get("detail", "")),
            model=data.get("model", ""),
            usage=Usage(usage["prompt_tokens"], usage["completion_tokens"]) if usage else None,
            raw=data.get("raw"),
        )
