"""HTTP facade over the chat core: sessions, knowledge source, documents.

Request bodies are parsed by hand (no framework model validation) so every
client mistake maps to the same {error, kind} JSON shape with our status
codes: 400 invalid input, 502 provider or network trouble, 500 the rest.
"""

from __future__ import annotations

import contextlib
import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from kennel.cache import FileCache
from kennel.chatter import Chatter
from kennel.errors import BarkError, InvalidInputError
from kennel.providers import (
    MockProvider,
    Provider,
    ProviderConfig,
    ProviderKind,
    make_provider,
)
from kennel.rag import (
    KeywordCorpusHandler,
    KnowledgeSourceConfig,
    RagChatter,
    RagHandler,
    SourceKind,
    build_handler,
)
from kennel.retrieval import InvertedIndex, chunk_document
from kennel.types import PromptParameters

logger = logging.getLogger("kennel.service")


def parse_listen(listen: str) -> tuple[str, int]:
    host, sep, port_text = listen.rpartition(":")
    if not sep or not host:
        raise InvalidInputError(f"listen address must be host:port, got {listen!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise InvalidInputError(f"listen port must be an integer, got {port_text!r}") from None
    if not 0 <= port <= 65535:
        raise InvalidInputError(f"listen port out of range: {port}")
    return host, port


@dataclass
class ServiceConfig:
    cache_dir: Path
    provider_kind: ProviderKind = ProviderKind.MOCK
    provider_config: ProviderConfig = field(default_factory=ProviderConfig)
    listen: str = "127.0.0.1:8000"
    index_path: Path | None = None
    source_store_path: Path | None = None
    cors_origins: tuple[str, ...] = ("*",)
    static_dir: Path | None = None
    response_cache: bool = False
    mock_script: list[str] | None = None
    defaults: PromptParameters = field(default_factory=PromptParameters)

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)
        parse_listen(self.listen)
        if self.index_path is None:
            self.index_path = self.cache_dir / "index.json"
        if self.source_store_path is None:
            self.source_store_path = self.cache_dir / "knowledge_source.json"


class _RWLock:
    """Many readers or one writer; no fairness needed at this scale."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writing = False

    @contextlib.contextmanager
    def read(self):
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                self._cond.notify_all()

    @contextlib.contextmanager
    def write(self):
        with self._cond:
            while self._writing or self._readers:
                self._cond.wait()
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


class ServiceState:
    """Everything one service instance owns: chatter, index, active source."""

    def __init__(self, config: ServiceConfig, provider: Provider | None = None):
        self.config = config
        if provider is None:
            if config.provider_kind is ProviderKind.MOCK:
                provider = MockProvider(script=config.mock_script)
            else:
                provider = make_provider(config.provider_kind, config.provider_config)
        self.provider = provider
        self.cache = FileCache(config.cache_dir)
        self.chatter = Chatter(
            provider,
            self.cache,
            defaults=config.defaults,
            response_cache=config.response_cache,
        )
        self.lock = _RWLock()
        self.index_path = Path(config.index_path)
        self.index = self._load_index(self.index_path)
        self.source_config: KnowledgeSourceConfig | None = None
        self.handler: RagHandler | None = None
        self._restore_source()

    @staticmethod
    def _load_index(path: Path) -> InvertedIndex:
        if path.exists():
            return InvertedIndex.load(path)
        return InvertedIndex()

    def _restore_source(self) -> None:
        store = Path(self.config.source_store_path)
        if not store.exists():
            return
        try:
            doc = json.loads(store.read_text(encoding="utf-8"))
            if not isinstance(doc, dict) or doc.get("kind") == "none":
                return
            self.apply_source(KnowledgeSourceConfig.from_dict(doc), persist=False)
        except (BarkError, OSError, ValueError) as e:
            # A broken store must not keep the service down; start bare.
            logger.warning("ignoring stored knowledge source: %s", e)

    def persist_source(self, doc: dict) -> None:
        store = Path(self.config.source_store_path)
        store.parent.mkdir(parents=True, exist_ok=True)
        store.write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def apply_source(self, config: KnowledgeSourceConfig | None, persist: bool = True) -> None:
        """Swap the active source; keyword sources adopt their index file."""
        if config is None:
            self.source_config = None
            self.handler = None
            if persist:
                self.persist_source({"kind": "none"})
            return
        if config.kind is SourceKind.KEYWORD_CORPUS:
            path = Path(config.index_path)
            index = self._load_index(path)
            if not path.exists():
                index.save(path)
            handler = KeywordCorpusHandler(
                index, top_k=config.top_k, template=config.template
            )
            self.index_path = path
            self.index = index
        else:
            handler = build_handler(config)
        self.source_config = config
        self.handler = handler
        if persist:
            self.persist_source(config.to_dict(redact_secrets=False))

    def active_chatter(self) -> Chatter:
        if self.handler is None:
            return self.chatter
        return RagChatter(self.chatter, self.handler)


def _error_response(error: BarkError) -> JSONResponse:
    if error.kind == "invalid_input":
        status = 400
    elif error.kind in ("provider", "network"):
        status = 502
    else:
        status = 500
    return JSONResponse({"error": error.message, "kind": error.kind}, status_code=status)


async def _body_json(request: Request) -> Any:
    try:
        return json.loads(await request.body())
    except ValueError:
        raise InvalidInputError("request body must be valid JSON") from None


def _prompt_params(doc: dict) -> PromptParameters | None:
    params_doc = doc.get("params")
    if params_doc is None:
        return None
    if not isinstance(params_doc, dict):
        raise InvalidInputError("params must be an object")
    try:
        return PromptParameters(**params_doc)
    except TypeError as e:
        raise InvalidInputError(f"bad params: {e}") from e


def create_app(config: ServiceConfig, provider: Provider | None = None) -> FastAPI:
    state = ServiceState(config, provider)
    app = FastAPI(title="kennel", docs_url=None, redoc_url=None, openapi_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.kennel = state

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        try:
            doc = await _body_json(request)
            if not isinstance(doc, dict):
                raise InvalidInputError("request body must be a JSON object")
            prompt = doc.get("prompt")
            if not isinstance(prompt, str) or not prompt:
                raise InvalidInputError("prompt must be non-empty text")
            params = _prompt_params(doc)
            with state.lock.read():
                response, chunks = state.active_chatter().bark_turn(
                    session_id, prompt, params
                )
            body: dict[str, Any] = {
                "text": response.text,
                "finish_reason": str(response.finish_reason),
                "chunks_used": [
                    {"source": c.source}
                    if c.score is None
                    else {"source": c.source, "score": c.score}
                    for c in chunks
                ],
            }
            if response.usage is not None:
                body["usage"] = {
                    "prompt_tokens": response.usage.prompt_tokens,
                    "completion_tokens": response.usage.completion_tokens,
                }
            return JSONResponse(body)
        except BarkError as e:
            return _error_response(e)
        except Exception as e:
            logger.exception("chat turn failed")
            return JSONResponse({"error": str(e), "kind": "error"}, status_code=500)

    @app.get("/api/sessions/{session_id}/history")
    def get_history(session_id: str):
        try:
            messages = state.chatter.history(session_id)
            return JSONResponse({"messages": [m.to_dict() for m in messages]})
        except BarkError as e:
            return _error_response(e)

    @app.get("/api/knowledge-source")
    def get_source():
        with state.lock.read():
            if state.source_config is None:
                return JSONResponse({"kind": "none"})
            return JSONResponse(state.source_config.to_dict(redact_secrets=True))

    @app.put("/api/knowledge-source")
    async def put_source(request: Request):
        try:
            doc = await _body_json(request)
            if not isinstance(doc, dict):
                raise InvalidInputError("request body must be a JSON object")
            with state.lock.write():
                if doc.get("kind") == "none":
                    state.apply_source(None)
                    return JSONResponse({"kind": "none"})
                state.apply_source(KnowledgeSourceConfig.from_dict(doc))
                return JSONResponse(state.source_config.to_dict(redact_secrets=True))
        except BarkError as e:
            return _error_response(e)
        except Exception as e:
            logger.exception("knowledge source update failed")
            return JSONResponse({"error": str(e), "kind": "error"}, status_code=500)

    @app.post("/api/documents")
    async def post_document(request: Request):
        try:
            doc = await _body_json(request)
            if not isinstance(doc, dict):
                raise InvalidInputError("request body must be a JSON object")
            doc_id = doc.get("doc_id")
            text = doc.get("text")
            if not isinstance(doc_id, str) or not doc_id:
                raise InvalidInputError("doc_id must be non-empty text")
            if not isinstance(text, str):
                raise InvalidInputError("text must be a string")
            with state.lock.write():
                replaced = state.index.has_doc(doc_id)
                chunks = chunk_document(doc_id, text)
                if chunks:
                    state.index.add(chunks)
                else:
                    state.index.remove(doc_id)
                state.index.save(state.index_path)
            return JSONResponse(
                {"doc_id": doc_id, "chunks": len(chunks), "replaced": replaced}
            )
        except BarkError as e:
            return _error_response(e)
        except Exception as e:
            logger.exception("document ingestion failed")
            return JSONResponse({"error": str(e), "kind": "error"}, status_code=500)

    @app.delete("/api/documents/{doc_id}")
    def delete_document(doc_id: str):
        try:
            with state.lock.write():
                state.index.remove(doc_id)
                state.index.save(state.index_path)
            return Response(status_code=204)
        except BarkError as e:
            return _error_response(e)

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.static_dir), html=True), name="ui")

    return app
