"""Keyword retrieval: tokenizing, chunking, and a BM25 inverted index."""

from kennel.retrieval.index import (
    INDEX_FORMAT_VERSION,
    ChunkKey,
    DocumentChunk,
    InvertedIndex,
    ScoredChunk,
    chunk_document,
)
from kennel.retrieval.scoring import active_kernel, available_kernels
from kennel.retrieval.text import (
    DEFAULT_CHUNK_OVERLAP,
    DEFAULT_CHUNK_TOKENS,
    chunk_tokens,
    tokenize,
)

__all__ = [
    "INDEX_FORMAT_VERSION",
    "ChunkKey",
    "DocumentChunk",
    "InvertedIndex",
    "ScoredChunk",
    "chunk_document",
    "active_kernel",
    "available_kernels",
    "chunk_tokens",
    "tokenize",
    "DEFAULT_CHUNK_OVERLAP",
    "DEFAULT_CHUNK_TOKENS",
]
