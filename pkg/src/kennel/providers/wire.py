"""Request builders and response parsers for each wire protocol.

Builders emit plain dicts whose key order is fixed (named fields first,
extra parameters in insertion order) so that `encode_json` yields
byte-identical output for equal inputs.
"""

from __future__ import annotations

import json
from typing import Any

from kennel.errors import InvalidInputError, SerializationError
from kennel.types import ChatResponse, FinishReason, Message, PromptParameters, Usage

# Keys the builders own; extra parameters may not shadow them.
OPENAI_RESERVED = ("model", "messages", "temperature", "max_tokens", "top_p", "stream")
OLLAMA_RESERVED = ("model", "messages", "stream", "options")


def encode_json(doc: dict) -> bytes:
    """Compact UTF-8 encoding preserving dict insertion order."""
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _wire_messages(messages: list[Message]) -> list[dict]:
    if not messages:
        raise InvalidInputError("messages must be non-empty")
    return [{"role": m.role.value, "content": m.content} for m in messages]


def _merge_extra(doc: dict, extra: dict, reserved: tuple[str, ...]) -> dict:
    for key, value in extra.items():
        if key in reserved:
            raise SerializationError(f"extra parameter {key!r} collides with a wire field")
        doc[key] = value
    return doc


def build_openai_request(messages: list[Message], params: PromptParameters) -> dict:
    if not params.model:
        raise InvalidInputError("params.model must be non-empty")
    doc: dict[str, Any] = {"model": params.model, "messages": _wire_messages(messages)}
    if params.temperature is not None:
        doc["temperature"] = params.temperature
    if params.max_tokens is not None:
        doc["max_tokens"] = params.max_tokens
    if params.top_p is not None:
        doc["top_p"] = params.top_p
    return _merge_extra(doc, params.extra, OPENAI_RESERVED)


def build_ollama_request(messages: list[Message], params: PromptParameters) -> dict:
    if not params.model:
        raise InvalidInputError("params.model must be non-empty")
    doc: dict[str, Any] = {
        "model": params.model,
        "messages": _wire_messages(messages),
        "stream": False,
    }
    options: dict[str, Any] = {}
    if params.temperature is not None:
        options["temperature"] = params.temperature
    if params.top_p is not None:
        options["top_p"] = params.top_p
    if params.max_tokens is not None:
        options["num_predict"] = params.max_tokens
    if options:
        doc["options"] = options
    return _merge_extra(doc, params.extra, OLLAMA_RESERVED)


def _require_text(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise SerializationError(f"malformed provider response: {where} is not text")
    return value


def parse_openai_response(body: Any) -> ChatResponse:
    try:
        choice = body["choices"][0]
        text = _require_text(choice["message"]["content"], "message content")
    except (KeyError, IndexError, TypeError) as e:
        raise SerializationError(f"malformed provider response: {e!r}") from e
    finish = FinishReason.from_wire(choice.get("finish_reason"))
    usage = None
    if isinstance(body.get("usage"), dict):
        u = body["usage"]
        usage = Usage(int(u.get("prompt_tokens", 0)), int(u.get("completion_tokens", 0)))
    model = body.get("model") if isinstance(body.get("model"), str) else ""
    return ChatResponse(text=text, finish_reason=finish, model=model, usage=usage, raw=body)


def parse_ollama_response(body: Any) -> ChatResponse:
    try:
        text = _require_text(body["message"]["content"], "message content")
    except (KeyError, TypeError) as e:
        raise SerializationError(f"malformed provider response: {e!r}") from e
    if body.get("done") is True and body.get("done_reason") == "stop":
        finish = FinishReason.STOP
    else:
        finish = FinishReason.from_wire(body.get("done_reason"))
    usage = None
    if "prompt_eval_count" in body or "eval_count" in body:
        usage = Usage(int(body.get("prompt_eval_count", 0)), int(body.get("eval_count", 0)))
    model = body.get("model") if isinstance(body.get("model"), str) else ""
    return ChatResponse(text=text, finish_reason=finish, model=model, usage=usage, raw=body)
