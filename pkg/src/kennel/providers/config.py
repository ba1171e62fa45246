"""Provider selection and connection settings."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from kennel.errors import InvalidInputError


class ProviderKind(str, Enum):
    OPENAI_COMPATIBLE = "openai"
    OLLAMA = "ollama"
    ROUTER = "router"
    MOCK = "mock"


# Router speaks the OpenAI-compatible protocol; only its default endpoint
# (and any attribution headers the caller adds) differs.
DEFAULT_BASE_URLS = {
    ProviderKind.OLLAMA: "http://localhost:11434",
    ProviderKind.ROUTER: "https://openrouter.ai/api/v1",
}


def resolve_base_url(kind: ProviderKind, base_url: str) -> str:
    url = base_url or DEFAULT_BASE_URLS.get(kind, "")
    if kind is ProviderKind.MOCK:
        return url
    if not url:
        raise InvalidInputError(f"{kind.value} provider requires a base_url")
    return url


@dataclass(frozen=True)
class ProviderConfig:
    """How to reach one model server.

    `extra_headers` ride on every request (router attribution headers go
    here). `retry_backoff` is the pause in seconds before the single retry
    of a retryable failure; tests shrink it to keep the suite fast.
    """

    base_url: str = ""
    api_key: str | None = None
    default_model: str = ""
    timeout: float = 60.0
    retry_backoff: float = 1.0
    extra_headers: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.base_url:
            if not self.base_url.startswith(("http://", "https://")):
                raise InvalidInputError(f"base_url must be http(s), got {self.base_url!r}")
            object.__setattr__(self, "base_url", self.base_url.rstrip("/"))
        if self.timeout <= 0:
            raise InvalidInputError("timeout must be positive")
        if self.retry_backoff < 0:
            raise InvalidInputError("retry_backoff must be >= 0")

    def __repr__(self) -> str:  # keep secrets out of logs and tracebacks
        key = "***" if self.api_key else None
        return (
            f"ProviderConfig(base_url={self.base_url!r}, api_key={key!r}, "
            f"default_model={self.default_model!r}, timeout={self.timeout!r})"
        )
