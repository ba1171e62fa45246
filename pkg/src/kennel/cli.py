"""Command line front door: chat REPL, corpus indexing, code review, server.

Exit codes: 0 success, 2 configuration or I/O trouble, 3 validation failure
(argparse usage errors also exit 2).
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
import tempfile
from pathlib import Path

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
from kennel.rag import KeywordCorpusHandler, RagChatter
from kennel.retrieval import (
    DEFAULT_CHUNK_OVERLAP,
    DEFAULT_CHUNK_TOKENS,
    InvertedIndex,
    chunk_document,
)
from kennel.review import run_review
from kennel.service import ServiceConfig, create_app, parse_listen
from kennel.types import PromptParameters

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _cache_dir(args) -> Path:
    if args.cache_dir:
        return Path(args.cache_dir)
    env = os.environ.get("KENNEL_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".kennel"


def _load_mock_script(path: str | None) -> list[str] | None:
    if not path:
        return None
    script = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(script, list) or not all(isinstance(s, str) for s in script):
        raise InvalidInputError("mock script must be a JSON list of strings")
    return script


def _provider(args) -> Provider:
    kind = ProviderKind(args.provider)
    if kind is ProviderKind.MOCK:
        return MockProvider(script=_load_mock_script(args.mock_script))
    if args.api_key_env:
        api_key = os.environ.get(args.api_key_env)
        if api_key is None:
            raise InvalidInputError(f"environment variable {args.api_key_env} is not set")
    else:
        api_key = os.environ.get("KENNEL_API_KEY")
    config = ProviderConfig(
        base_url=args.base_url or "",
        api_key=api_key,
        default_model=args.model or "",
        timeout=args.timeout,
    )
    return make_provider(kind, config)


def _params(args) -> PromptParameters:
    return PromptParameters(model=args.model or "")


def cmd_chat(args) -> int:
    provider = _provider(args)
    cache = FileCache(_cache_dir(args))
    chatter: Chatter = Chatter(provider, cache, defaults=_params(args))
    if args.rag_index:
        index = InvertedIndex.load(args.rag_index)
        chatter = RagChatter(chatter, KeywordCorpusHandler(index, top_k=args.top_k))
    session = args.session
    while True:
        try:
            line = input("> ")
        except (EOFError, KeyboardInterrupt):
            print()
            return EXIT_OK
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            return EXIT_OK
        if line == "/history":
            for message in chatter.history(session):
                print(f"{message.role.value}: {message.content}")
            continue
        try:
            response = chatter.bark(session, line)
            print(response.text)
        except BarkError as e:
            print(f"error ({e.kind}): {e.message}")


def cmd_index(args) -> int:
    source_dir = Path(args.dir)
    if not source_dir.is_dir():
        _err(f"not a directory: {source_dir}")
        return EXIT_CONFIG
    files = sorted(
        p for p in source_dir.rglob("*") if p.is_file() and p.suffix in (".txt", ".md")
    )
    index = InvertedIndex()
    total_chunks = 0
    for path in files:
        doc_id = path.relative_to(source_dir).as_posix()
        chunks = chunk_document(
            doc_id, path.read_text(encoding="utf-8"), args.max_tokens, args.overlap
        )
        if chunks:
            index.add(chunks)
            total_chunks += len(chunks)
    index.save(args.out)
    print(f"{len(files)} documents, {total_chunks} chunks")
    return EXIT_OK


def cmd_review(args) -> int:
    rules_text = Path(args.rules).read_text(encoding="utf-8")
    sources = [(path, Path(path).read_text(encoding="utf-8")) for path in args.sources]
    provider = _provider(args)
    with tempfile.TemporaryDirectory(prefix="kennel-review-") as tmp:
        chatter = Chatter(provider, FileCache(tmp), defaults=_params(args))
        try:
            report = run_review(chatter, rules_text, sources)
        except InvalidInputError as e:
            _err(e.message)
            return EXIT_VALIDATION
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    listen = args.listen or os.environ.get("KENNEL_LISTEN") or "127.0.0.1:8000"
    host, port = parse_listen(listen)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as e:
        _err(f"cannot bind {listen}: {e}")
        return EXIT_CONFIG
    finally:
        probe.close()
    kind = ProviderKind(args.provider)
    provider = None
    provider_config = ProviderConfig()
    if kind is ProviderKind.MOCK:
        provider = MockProvider(script=_load_mock_script(args.mock_script))
    else:
        if args.api_key_env:
            api_key = os.environ.get(args.api_key_env)
        else:
            api_key = os.environ.get("KENNEL_API_KEY")
        provider_config = ProviderConfig(
            base_url=args.base_url or "",
            api_key=api_key,
            default_model=args.model or "",
            timeout=args.timeout,
        )
    config = ServiceConfig(
        cache_dir=_cache_dir(args),
        provider_kind=kind,
        provider_config=provider_config,
        listen=listen,
        static_dir=Path(args.static_dir) if args.static_dir else None,
        response_cache=args.response_cache,
        defaults=_params(args),
    )
    app = create_app(config, provider)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider",
        choices=[k.value for k in ProviderKind],
        default="mock",
        help="backend kind (default: mock)",
    )
    parser.add_argument("--base-url", default="", help="provider endpoint base URL")
    parser.add_argument("--model", default="", help="model identifier")
    parser.add_argument(
        "--api-key-env",
        default="",
        help="env var holding the API key (default: KENNEL_API_KEY)",
    )
    parser.add_argument("--timeout", type=float, default=60.0, help="HTTP timeout seconds")
    parser.add_argument(
        "--mock-script",
        default="",
        help="JSON file with a list of canned mock replies",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kennel", description="vendor-neutral chat over pluggable model backends"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    chat = sub.add_parser("chat", help="interactive REPL (/history, /quit)")
    _add_provider_flags(chat)
    chat.add_argument("--session", default="default", help="session id")
    chat.add_argument("--cache-dir", default="", help="history directory")
    chat.add_argument("--rag-index", default="", help="keyword index file enabling retrieval")
    chat.add_argument("--top-k", type=int, default=4, help="retrieved chunks per turn")
    chat.set_defaults(func=cmd_chat)

    index = sub.add_parser("index", help="build a keyword index from *.txt/*.md files")
    index.add_argument("dir", help="directory of documents")
    index.add_argument("out", help="output index file")
    index.add_argument("--max-tokens", type=int, default=DEFAULT_CHUNK_TOKENS)
    index.add_argument("--overlap", type=int, default=DEFAULT_CHUNK_OVERLAP)
    index.set_defaults(func=cmd_index)

    review = sub.add_parser("review", help="structured code review of source files")
    review.add_argument("--rules", required=True, help="review guidelines text file")
    review.add_argument("sources", nargs="+", help="source files to review")
    _add_provider_flags(review)
    review.set_defaults(func=cmd_review)

    serve = sub.add_parser("serve", help="run the HTTP service")
    _add_provider_flags(serve)
    serve.add_argument("--listen", default="", help="host:port (env KENNEL_LISTEN)")
    serve.add_argument("--cache-dir", default="", help="service data directory")
    serve.add_argument("--static-dir", default="", help="directory of web UI files to serve")
    serve.add_argument(
        "--response-cache", action="store_true", help="cache provider responses on disk"
    )
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as e:
        _err(e.message)
        return EXIT_CONFIG
    except BarkError as e:
        _err(e.message)
        return EXIT_CONFIG
    except OSError as e:
        _err(str(e))
        return EXIT_CONFIG
    except json.JSONDecodeError as e:
        _err(f"invalid JSON: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
