"""Tokenization and document chunking."""

from __future__ import annotations

import re

from kennel.errors import InvalidInputError

_WORD = re.compile(r"\w+", re.UNICODE)

DEFAULT_CHUNK_TOKENS = 256
DEFAULT_CHUNK_OVERLAP = 32


def tokenize(text: str) -> list[str]:
    """Unicode word tokens, lowercased. No stemming, no stopword removal."""
    return _WORD.findall(text.lower())


def chunk_tokens(tokens: list[str], max_tokens: int, overlap: int) -> list[list[str]]:
    """Sliding windows of at most max_tokens with the given overlap.

    Stride is max_tokens - overlap; the final partial window is kept when
    non-empty, so concatenating the non-overlapped spans reproduces the
    token stream.
    """
    if overlap < 0 or overlap >= max_tokens:
        raise InvalidInputError("overlap must satisfy 0 <= overlap < max_tokens")
    windows: list[list[str]] = []
    stride = max_tokens - overlap
    start = 0
    while start < len(tokens):
        windows.append(tokens[start : start + max_tokens])
        if start + max_tokens >= len(tokens):
            break
        start += stride
    return windows
