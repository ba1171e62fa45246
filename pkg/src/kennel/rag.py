"""Retrieval-augmented prompting: handler contract, concrete handlers, and
the decorator that bolts retrieval onto any chatter.

The decorator rewrites only the final user message before the provider
call; the session history always stores the user's original prompt.
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import httpx

from kennel.chatter import Chatter, Transform
from kennel.errors import BarkError, InvalidInputError, ProviderError, RagError
from kennel.providers.wire import encode_json
from kennel.retrieval import InvertedIndex
from kennel.types import ChatResponse, Message, PromptParameters, Role

logger = logging.getLogger("kennel.rag")

DEFAULT_TEMPLATE = (
    "Use the following context to answer.\n\nContext:\n{context}\n\nQuestion: {question}"
)
DEFAULT_TOP_K = 4

_PLACEHOLDER = re.compile(r"\{context\}|\{question\}")


def validate_template(template: str) -> str:
    if template.count("{context}") != 1 or template.count("{question}") != 1:
        raise InvalidInputError(
            "template must contain {context} and {question} exactly once each"
        )
    return template


@dataclass(frozen=True)
class Chunk:
    """One retrieved context block."""

    source: str
    text: str
    score: float | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text:
            raise InvalidInputError("chunk text must be non-empty")
        if self.score is not None and self.score < 0:
            raise InvalidInputError("chunk score must be >= 0")


def _last_user_content(messages: list[Message]) -> str:
    if not messages or messages[-1].role is not Role.USER:
        raise RagError("retrieval needs the last message to be a user prompt")
    return messages[-1].content


def render_context(chunks: list[Chunk]) -> str:
    return "\n\n".join(f"[{c.source}]\n{c.text}" for c in chunks)


def default_transform_last_prompt(
    session: str,
    params: PromptParameters,
    messages: list[Message],
    chunks: list[Chunk],
    template: str = DEFAULT_TEMPLATE,
) -> Message:
    """Template the last user message around the chunks; no chunks, no change.

    Both placeholders are substituted in one pass so braces inside chunk
    text or the question are never re-interpreted.
    """
    last = messages[-1]
    if not chunks:
        return last
    values = {"{context}": render_context(chunks), "{question}": last.content}
    text = _PLACEHOLDER.sub(lambda m: values[m.group(0)], template)
    return Message(Role.USER, text)


class RagHandler(ABC):
    """Retrieval strategy: fetch chunks, then rewrite the last prompt."""

    template: str = DEFAULT_TEMPLATE

    @abstractmethod
    def get_chunks(
        self, session: str, params: PromptParameters, messages: list[Message]
    ) -> list[Chunk]: ...

    def transform_last_prompt(
        self,
        session: str,
        params: PromptParameters,
        messages: list[Message],
        chunks: list[Chunk],
    ) -> Message:
        return default_transform_last_prompt(session, params, messages, chunks, self.template)


class IdentityHandler(RagHandler):
    """Retrieves nothing; the decorated chatter behaves like the bare one."""

    def get_chunks(self, session, params, messages) -> list[Chunk]:
        return []


class KeywordCorpusHandler(RagHandler):
    def __init__(
        self,
        index: InvertedIndex,
        top_k: int = DEFAULT_TOP_K,
        template: str = DEFAULT_TEMPLATE,
    ):
        if top_k < 1:
            raise InvalidInputError("top_k must be >= 1")
        self._index = index
        self._top_k = top_k
        self.template = validate_template(template)

    @property
    def index(self) -> InvertedIndex:
        return self._index

    def get_chunks(self, session, params, messages) -> list[Chunk]:
        query = _last_user_content(messages)
        if self._index is None:
            raise RagError("keyword index unavailable")
        hits = self._index.search(query, self._top_k)
        return [
            Chunk(
                source=hit.chunk.doc_id,
                text=hit.chunk.text,
                score=hit.score,
                metadata={"chunk_index": str(hit.chunk.chunk_index)},
            )
            for hit in hits
        ]


class WebSearchHandler(RagHandler):
    """Queries a search endpoint speaking a minimal JSON POST contract."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        top_k: int = DEFAULT_TOP_K,
        template: str = DEFAULT_TEMPLATE,
        timeout: float = 30.0,
    ):
        if not endpoint.startswith(("http://", "https://")):
            raise InvalidInputError(f"search endpoint must be http(s), got {endpoint!r}")
        if top_k < 1:
            raise InvalidInputError("top_k must be >= 1")
        self._endpoint = endpoint
        self._api_key = api_key
        self._top_k = top_k
        self.template = validate_template(template)
        self._timeout = timeout

    def get_chunks(self, session, params, messages) -> list[Chunk]:
        query = _last_user_content(messages)
        try:
            return self._search(query)
        except RagError:
            raise
        except BarkError as e:
            raise RagError(f"web search failed: {e.message}", retryable=e.retryable) from e

    def _search(self, query: str) -> list[Chunk]:
        body = encode_json({"query": query, "max_results": self._top_k})
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = httpx.post(
                self._endpoint, content=body, headers=headers, timeout=self._timeout
            )
        except httpx.HTTPError as e:
            raise RagError(self._redact(f"web search failed: {e}"), retryable=True) from e
        if not 200 <= resp.status_code < 300:
            wrapped = ProviderError(resp.status_code, self._redact(resp.text))
            raise RagError(
                f"web search failed: {wrapped.message}", retryable=wrapped.retryable
            ) from wrapped
        try:
            results = resp.json()["results"]
            return [
                Chunk(
                    source=r["url"],
                    text=r["content"],
                    score=r.get("score"),
                    metadata={"title": r.get("title", "")},
                )
                for r in results
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise RagError(self._redact(f"malformed web search reply: {e!r}")) from e

    def _redact(self, text: str) -> str:
        if self._api_key:
            return text.replace(self._api_key, "***")
        return text


class CompositeHandler(RagHandler):
    """Fans out to inner handlers in order and merges their chunks.

    A failing inner handler is skipped (and logged); the call fails only
    when every inner handler fails.
    """

    def __init__(
        self,
        handlers: list[RagHandler],
        top_k: int = DEFAULT_TOP_K,
        template: str = DEFAULT_TEMPLATE,
    ):
        if not handlers:
            raise InvalidInputError("composite requires at least one inner handler")
        if top_k < 1:
            raise InvalidInputError("top_k must be >= 1")
        self._handlers = list(handlers)
        self._top_k = top_k
        self.template = validate_template(template)

    def get_chunks(self, session, params, messages) -> list[Chunk]:
        collected: list[Chunk] = []
        failures: list[str] = []
        for handler in self._handlers:
            try:
                collected.extend(handler.get_chunks(session, params, messages))
            except Exception as e:
                failures.append(f"{type(handler).__name__}: {e}")
                logger.warning("composite inner handler failed: %s", failures[-1])
        if failures and len(failures) == len(self._handlers):
            raise RagError("all inner handlers failed: " + "; ".join(failures))
        seen: set[tuple[str, str]] = set()
        merged: list[Chunk] = []
        for chunk in collected:
            key = (chunk.source, chunk.text)
            if key in seen:
                continue
            seen.add(key)
            merged.append(chunk)
        return merged[: self._top_k]


class RagChatter(Chatter):
    """Decorator: any chatter plus retrieval, still a chatter.

    Holds no session state of its own; everything routes to the innermost
    core, so wrapping changes only how the final prompt is built.
    """

    def __init__(self, inner: Chatter, handler: RagHandler):
        # No super().__init__: state (pool, gates, cache) lives on the core.
        self._inner = inner
        self._handler = handler

    def _core(self) -> Chatter:
        return self._inner._core()

    def _collect(self, sink: list | None) -> tuple[Transform, ...]:
        handler = self._handler

        def transform(session: str, params: PromptParameters, messages: list[Message]):
            if not messages or messages[-1].role is not Role.USER:
                raise RagError("retrieval needs the last message to be a user prompt")
            try:
                chunks = handler.get_chunks(session, params, messages)
            except RagError:
                raise
            except BarkError as e:
                raise RagError(f"retrieval handler failed: {e.message}") from e
            except Exception as e:
                raise RagError(f"retrieval handler failed: {e}") from e
            replacement = handler.transform_last_prompt(session, params, messages, chunks)
            if replacement.role is not Role.USER:
                raise RagError("transform_last_prompt must return a user message")
            if sink is not None:
                sink.extend(chunks)
            return messages[:-1] + [replacement]

        return (transform,) + self._inner._collect(sink)

    @property
    def handler(self) -> RagHandler:
        return self._handler


def rag_bark(
    inner: Chatter,
    handler: RagHandler,
    session: str,
    prompt: str,
    params: PromptParameters | None = None,
) -> ChatResponse:
    """One retrieval-augmented turn without keeping the decorator around."""
    return RagChatter(inner, handler).bark(session, prompt, params)


class SourceKind(str, Enum):
    KEYWORD_CORPUS = "keyword_corpus"
    WEB_SEARCH = "web_search"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class KnowledgeSourceConfig:
    """Declarative description of a retrieval setup, JSON round-trippable."""

    kind: SourceKind
    top_k: int = DEFAULT_TOP_K
    template: str = DEFAULT_TEMPLATE
    index_path: str | None = None
    endpoint: str | None = None
    api_key: str | None = None
    parts: tuple["KnowledgeSourceConfig", ...] = ()

    def __post_init__(self):
        if not isinstance(self.kind, SourceKind):
            try:
                object.__setattr__(self, "kind", SourceKind(self.kind))
            except ValueError:
                raise InvalidInputError(f"unknown knowledge source kind: {self.kind!r}") from None
        if self.top_k < 1:
            raise InvalidInputError("top_k must be >= 1")
        validate_template(self.template)
        if self.kind is SourceKind.KEYWORD_CORPUS and not self.index_path:
            raise InvalidInputError("keyword_corpus source requires index_path")
        if self.kind is SourceKind.WEB_SEARCH:
            if not self.endpoint:
                raise InvalidInputError("web_search source requires endpoint")
            if not self.endpoint.startswith(("http://", "https://")):
                raise InvalidInputError("endpoint must be http(s)")
        if self.kind is SourceKind.COMPOSITE and not self.parts:
            raise InvalidInputError("composite source requires parts")

    def to_dict(self, redact_secrets: bool = False) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "kind": self.kind.value,
            "top_k": self.top_k,
            "template": self.template,
        }
        if self.kind is SourceKind.KEYWORD_CORPUS:
            doc["index_path"] = self.index_path
        if self.kind is SourceKind.WEB_SEARCH:
            doc["endpoint"] = self.endpoint
            if self.api_key:
                doc["api_key"] = "***" if redact_secrets else self.api_key
        if self.kind is SourceKind.COMPOSITE:
            doc["parts"] = [p.to_dict(redact_secrets) for p in self.parts]
        return doc

    @classmethod
    def from_dict(cls, doc: Any) -> "KnowledgeSourceConfig":
        if not isinstance(doc, dict):
            raise InvalidInputError("knowledge source config must be an object")
        known = {"kind", "top_k", "template", "index_path", "endpoint", "api_key", "parts"}
        unknown = set(doc) - known
        if unknown:
            raise InvalidInputError(f"unknown config fields: {sorted(unknown)}")
        if "kind" not in doc:
            raise InvalidInputError("knowledge source config requires kind")
        try:
            parts = tuple(cls.from_dict(p) for p in doc.get("parts", []))
            return cls(
                kind=doc["kind"],
                top_k=doc.get("top_k", DEFAULT_TOP_K),
                template=doc.get("template", DEFAULT_TEMPLATE),
                index_path=doc.get("index_path"),
                endpoint=doc.get("endpoint"),
                api_key=doc.get("api_key"),
                parts=parts,
            )
        except TypeError as e:
            raise InvalidInputError(f"malformed knowledge source config: {e}") from e


def build_handler(
    config: KnowledgeSourceConfig,
    index: InvertedIndex | None = None,
) -> RagHandler:
    """Materialize a handler from its config.

    For keyword sources the index loads from config.index_path unless an
    already-loaded index is handed in.
    """
    if config.kind is SourceKind.KEYWORD_CORPUS:
        if index is None:
            index = InvertedIndex.load(config.index_path)
        return KeywordCorpusHandler(index, top_k=config.top_k, template=config.template)
    if config.kind is SourceKind.WEB_SEARCH:
        return WebSearchHandler(
            config.endpoint,
            api_key=config.api_key,
            top_k=config.top_k,
            template=config.template,
        )
    return CompositeHandler(
        [build_handler(p) for p in config.parts],
        top_k=config.top_k,
        template=config.template,
    )
