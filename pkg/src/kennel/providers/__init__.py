"""Pluggable model backends: wire formats, HTTP transport, offline mock."""

from kennel.providers.config import (
    DEFAULT_BASE_URLS,
    ProviderConfig,
    ProviderKind,
    resolve_base_url,
)
from kennel.providers.transport import (
    HttpProvider,
    MockProvider,
    Provider,
    endpoint_path,
    make_provider,
    send,
)
from kennel.providers.wire import (
    build_ollama_request,
    build_openai_request,
    encode_json,
    parse_ollama_response,
    parse_openai_response,
)

__all__ = [
    "DEFAULT_BASE_URLS",
    "HttpProvider",
    "MockProvider",
    "Provider",
    "ProviderConfig",
    "ProviderKind",
    "build_ollama_request",
    "build_openai_request",
    "encode_json",
    "endpoint_path",
    "make_provider",
    "parse_ollama_response",
    "parse_openai_response",
    "resolve_base_url",
    "send",
]
