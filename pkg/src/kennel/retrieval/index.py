"""Inverted index with BM25 ranking over document chunks.

Scoring uses the Lucene-default BM25 variant: k1 = 1.2, b = 0.75 and
IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), where N counts stored chunks.
The hot accumulation loop runs on the compiled kernel when available.

Concurrency contract: many readers or one writer. `search` and `score` are
read-only; add/remove/save need exclusive access.
"""

from __future__ import annotations

import json
import math
import threading
from array import array
from dataclasses import dataclass, field
from pathlib import Path

from kennel.errors import CacheError, InvalidInputError
from kennel.retrieval import scoring
from kennel.retrieval.text import (
    DEFAULT_CHUNK_OVERLAP,
    DEFAULT_CHUNK_TOKENS,
    chunk_tokens,
    tokenize,
)

INDEX_FORMAT_VERSION = 1

ChunkKey = tuple[str, int]


@dataclass(frozen=True)
class DocumentChunk:
    doc_id: str
    chunk_index: int
    text: str
    token_count: int

    @property
    def key(self) -> ChunkKey:
        return (self.doc_id, self.chunk_index)


@dataclass(frozen=True)
class ScoredChunk:
    chunk: DocumentChunk
    score: float


def chunk_document(
    doc_id: str,
    text: str,
    max_tokens: int = DEFAULT_CHUNK_TOKENS,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[DocumentChunk]:
    """Split a document into sliding token windows ready for indexing.

    Chunk text is the space-joined token window, so re-tokenizing any chunk
    reproduces its window exactly.
    """
    windows = chunk_tokens(tokenize(text), max_tokens, overlap)
    return [
        DocumentChunk(doc_id, i, " ".join(window), len(window))
        for i, window in enumerate(windows)
    ]


@dataclass
class _TermPostings:
    slots: array
    tfs: array


class InvertedIndex:
    def __init__(self, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self._chunks: dict[ChunkKey, DocumentChunk] = {}
        self._postings: dict[str, dict[ChunkKey, int]] = {}
        self._arrays_lock = threading.Lock()
        self._dirty = True
        self._slot_keys: list[ChunkKey] = []
        self._slot_of: dict[ChunkKey, int] = {}
        self._lengths: array = array("d")
        self._term_arrays: dict[str, _TermPostings] = {}

    # -- statistics ----------------------------------------------------------

    @property
    def doc_count(self) -> int:
        """Number of stored chunks (BM25's N)."""
        return len(self._chunks)

    @property
    def avgdl(self) -> float:
        if not self._chunks:
            return 0.0
        return sum(c.token_count for c in self._chunks.values()) / len(self._chunks)

    def chunks(self) -> list[DocumentChunk]:
        return [self._chunks[key] for key in sorted(self._chunks)]

    def doc_ids(self) -> list[str]:
        return sorted({doc_id for doc_id, _ in self._chunks})

    def has_doc(self, doc_id: str) -> bool:
        return any(key[0] == doc_id for key in self._chunks)

    # -- mutation ------------------------------------------------------------

    def add(self, chunks: list[DocumentChunk]) -> None:
        """Insert chunks; any doc_id already present is replaced wholesale."""
        seen: set[ChunkKey] = set()
        for chunk in chunks:
            if chunk.token_count <= 0 or chunk.token_count != len(tokenize(chunk.text)):
                raise InvalidInputError(
                    f"chunk {chunk.key} token_count does not match its text"
                )
            if chunk.key in seen:
                raise InvalidInputError(f"duplicate chunk key {chunk.key}")
            seen.add(chunk.key)

        for doc_id in {c.doc_id for c in chunks}:
            self.remove(doc_id)
        for chunk in chunks:
            self._chunks[chunk.key] = chunk
            for term in tokenize(chunk.text):
                self._postings.setdefault(term, {})
                self._postings[term][chunk.key] = self._postings[term].get(chunk.key, 0) + 1
        self._dirty = True

    def remove(self, doc_id: str) -> None:
        """Delete all chunks of doc_id; unknown ids are a no-op."""
        keys = [key for key in self._chunks if key[0] == doc_id]
        if not keys:
            return
        for key in keys:
            del self._chunks[key]
        dead_terms = []
        for term, posting in self._postings.items():
            for key in keys:
                posting.pop(key, None)
            if not posting:
                dead_terms.append(term)
        for term in dead_terms:
            del self._postings[term]
        self._dirty = True

    # -- scoring -------------------------------------------------------------

    def _idf(self, term: str) -> float:
        df = len(self._postings.get(term, ()))
        if df == 0:
            return 0.0
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def score(self, query_terms: list[str], chunk_key: ChunkKey) -> float:
        """BM25 score of one chunk for the given terms. Repeated terms count once."""
        if not self._chunks:
            raise InvalidInputError("index is empty")
        chunk = self._chunks.get(chunk_key)
        if chunk is None:
            raise InvalidInputError(f"unknown chunk {chunk_key}")
        avgdl = self.avgdl
        total = 0.0
        for term in dict.fromkeys(query_terms):
            tf = float(self._postings.get(term, {}).get(chunk_key, 0))
            if tf == 0.0:
                continue
            idf = self._idf(term)
            denom = tf + self.k1 * (1.0 - self.b + self.b * (chunk.token_count / avgdl))
            total += idf * (tf * (self.k1 + 1.0)) / denom
        return total

    def _ensure_arrays(self) -> None:
        if not self._dirty:
            return
        with self._arrays_lock:
            if not self._dirty:
                return
            slot_keys = sorted(self._chunks)
            slot_of = {key: i for i, key in enumerate(slot_keys)}
            lengths = array("d", (float(self._chunks[k].token_count) for k in slot_keys))
            term_arrays = {}
            for term, posting in self._postings.items():
                items = sorted(posting.items())
                term_arrays[term] = _TermPostings(
                    slots=array("q", (slot_of[key] for key, _ in items)),
                    tfs=array("d", (float(tf) for _, tf in items)),
                )
            self._slot_keys = slot_keys
            self._slot_of = slot_of
            self._lengths = lengths
            self._term_arrays = term_arrays
            self._dirty = False

    def search(self, query_text: str, k: int) -> list[ScoredChunk]:
        """Top-k chunks by BM25 score, descending; ties break by chunk key.

        Zero-score chunks are never returned, so fewer than k results come
        back when fewer chunks match.
        """
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        if not self._chunks:
            return []
        self._ensure_arrays()
        n = len(self._slot_keys)
        avgdl = self.avgdl
        scores = array("d", bytes(8 * n))
        for term in dict.fromkeys(tokenize(query_text)):
            postings = self._term_arrays.get(term)
            if postings is None:
                continue
            idf = self._idf(term)
            scoring.accumulate(
                scores, postings.slots, postings.tfs, self._lengths, idf, self.k1, self.b, avgdl
            )
        hits = [
            (-scores[slot], self._slot_keys[slot])
            for slot in range(n)
            if scores[slot] > 0.0
        ]
        hits.sort()
        return [
            ScoredChunk(self._chunks[key], -neg_score) for neg_score, key in hits[:k]
        ]

    # -- persistence ---------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "version": INDEX_FORMAT_VERSION,
            "k1": self.k1,
            "b": self.b,
            "chunks": [
                {
                    "doc_id": c.doc_id,
                    "chunk_index": c.chunk_index,
                    "text": c.text,
                    "token_count": c.token_count,
                }
                for c in self.chunks()
            ],
            "postings": {
                term: [[key[0], key[1], tf] for key, tf in sorted(posting.items())]
                for term, posting in self._postings.items()
            },
        }

    def save(self, path: str | Path) -> None:
        """Write the index as one deterministic JSON document."""
        doc = self.to_document()
        data = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        try:
            Path(path).write_text(data + "\n", encoding="utf-8")
        except OSError as e:
            raise CacheError(f"cannot write index file: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise CacheError(f"cannot read index file: {e}") from e
        except ValueError as e:
            raise CacheError(f"malformed index file: {e}") from e
        return cls.from_document(doc)

    @classmethod
    def from_document(cls, doc: dict) -> "InvertedIndex":
        if not isinstance(doc, dict) or doc.get("version") != INDEX_FORMAT_VERSION:
            raise CacheError(f"unsupported index version: {doc.get('version')!r}")
        try:
            index = cls(k1=float(doc["k1"]), b=float(doc["b"]))
            for entry in doc["chunks"]:
                chunk = DocumentChunk(
                    doc_id=entry["doc_id"],
                    chunk_index=int(entry["chunk_index"]),
                    text=entry["text"],
                    token_count=int(entry["token_count"]),
                )
                index._chunks[chunk.key] = chunk
            for term, rows in doc["postings"].items():
                posting = {}
                for doc_id, chunk_index, tf in rows:
                    key = (doc_id, int(chunk_index))
                    if key not in index._chunks:
                        raise CacheError(f"posting for {term!r} references unknown chunk {key}")
                    posting[key] = int(tf)
                index._postings[term] = posting
        except (KeyError, TypeError, ValueError) as e:
            raise CacheError(f"malformed index file: {e}") from e
        return index
