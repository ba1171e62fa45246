"""Unified error model for chat turns.

Every failure surfaced by the framework is a BarkError. The `kind` string
identifies the variant; `retryable` is true only for transient conditions
(network faults, HTTP 408/429/5xx).
"""

from __future__ import annotations


class BarkError(Exception):
    """Base class for all chat-turn failures."""

    kind: str = "error"

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.message = message
        self.retryable = retryable


class InvalidInputError(BarkError):
    kind = "invalid_input"


class NetworkError(BarkError):
    kind = "network"

    def __init__(self, message: str):
        super().__init__(message, retryable=True)


class ProviderError(BarkError):
    """Non-2xx reply from a provider endpoint."""

    kind = "provider"

    def __init__(self, status: int, body: str):
        if not 100 <= status <= 599:
            raise ValueError(f"status {status} outside [100, 599]")
        retryable = status in (408, 429) or 500 <= status <= 599
        super().__init__(f"provider returned status {status}: {body}", retryable=retryable)
        self.status = status
        self.body = body


class SerializationError(BarkError):
    kind = "serialization"


class RagError(BarkError):
    kind = "rag"

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message, retryable=retryable)


class CacheError(BarkError):
    kind = "cache"
