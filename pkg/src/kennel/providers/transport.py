"""HTTP transport for the wire protocols, plus the offline mock backend."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import replace
from typing import Protocol, runtime_checkable

import httpx

from kennel.errors import (
    BarkError,
    InvalidInputError,
    NetworkError,
    ProviderError,
    SerializationError,
)
from kennel.providers.config import ProviderConfig, ProviderKind, resolve_base_url
from kennel.providers.wire import (
    build_ollama_request,
    build_openai_request,
    encode_json,
    parse_ollama_response,
    parse_openai_response,
)
from kennel.types import ChatResponse, FinishReason, Message, PromptParameters, Role


@runtime_checkable
class Provider(Protocol):
    """Anything that can turn an assembled message list into a reply."""

    def complete(
        self, messages: list[Message], params: PromptParameters
    ) -> ChatResponse: ...


def endpoint_path(kind: ProviderKind) -> str:
    if kind is ProviderKind.OLLAMA:
        return "/api/chat"
    return "/chat/completions"


def _redact(text: str, api_key: str | None) -> str:
    if api_key:
        return text.replace(api_key, "***")
    return text


def _post_once(
    config: ProviderConfig, kind: ProviderKind, body: bytes
) -> ChatResponse:
    url = resolve_base_url(kind, config.base_url).rstrip("/") + endpoint_path(kind)
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    headers.update(config.extra_headers)
    try:
        resp = httpx.post(url, content=body, headers=headers, timeout=config.timeout)
    except httpx.HTTPError as e:
        raise NetworkError(_redact(f"{type(e).__name__}: {e}", config.api_key)) from e
    if not 200 <= resp.status_code < 300:
        raise ProviderError(resp.status_code, _redact(resp.text, config.api_key))
    try:
        doc = json.loads(resp.content)
    except ValueError as e:
        raise SerializationError(
            _redact(f"provider returned invalid JSON: {e}", config.api_key)
        ) from e
    if kind is ProviderKind.OLLAMA:
        return parse_ollama_response(doc)
    return parse_openai_response(doc)


def send(
    config: ProviderConfig,
    kind: ProviderKind,
    messages: list[Message],
    params: PromptParameters,
) -> ChatResponse:
    """POST one chat turn and return the parsed reply.

    Retryable failures (network trouble, 408/429/5xx) get exactly one retry
    after `config.retry_backoff` seconds; the second failure surfaces.
    """
    if kind is ProviderKind.MOCK:
        return MockProvider().complete(messages, params)
    if not params.model and config.default_model:
        params = replace(params, model=config.default_model)
    if kind is ProviderKind.OLLAMA:
        body = encode_json(build_ollama_request(messages, params))
    else:
        body = encode_json(build_openai_request(messages, params))
    try:
        return _post_once(config, kind, body)
    except BarkError as first:
        if not first.retryable:
            raise
        time.sleep(config.retry_backoff)
        return _post_once(config, kind, body)


class HttpProvider:
    """Binds one (kind, config) pair to the `Provider` calling shape."""

    def __init__(self, kind: ProviderKind, config: ProviderConfig):
        if kind is ProviderKind.MOCK:
            raise InvalidInputError("use MockProvider for the mock kind")
        resolve_base_url(kind, config.base_url)  # fail fast on a missing URL
        self.kind = kind
        self.config = config

    def complete(
        self, messages: list[Message], params: PromptParameters
    ) -> ChatResponse:
        return send(self.config, self.kind, messages, params)


class MockProvider:
    """Canned backend: no sockets, deterministic replies, observable calls.

    Without a script every call echoes the last user message. A script is
    consumed in order and its last entry repeats once exhausted.
    """

    def __init__(self, script: list[str] | None = None, model: str = "mock"):
        script = list(script or [])
        for entry in script:
            if not isinstance(entry, str) or not entry:
                raise InvalidInputError("mock script entries must be non-empty text")
        self._script = script
        self._model = model
        self._lock = threading.Lock()
        self._calls = 0
        self.last_messages: list[Message] | None = None
        self.last_params: PromptParameters | None = None

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def complete(
        self, messages: list[Message], params: PromptParameters
    ) -> ChatResponse:
        with self._lock:
            cursor = self._calls
            self._calls += 1
            self.last_messages = list(messages)
            self.last_params = params
        if self._script:
            text = self._script[min(cursor, len(self._script) - 1)]
        else:
            last_user = next(
                (m.content for m in reversed(messages) if m.role is Role.USER), ""
            )
            text = f"echo: {last_user}"
        return ChatResponse(
            text=text,
            finish_reason=FinishReason.STOP,
            model=params.model or self._model,
        )


def make_provider(
    kind: ProviderKind,
    config: ProviderConfig | None = None,
    script: list[str] | None = None,
) -> Provider:
    if kind is ProviderKind.MOCK:
        return MockProvider(script=script)
    if config is None:
        raise InvalidInputError(f"{kind.value} provider requires a config")
    return HttpProvider(kind, config)
