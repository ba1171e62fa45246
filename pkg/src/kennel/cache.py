"""File-system cache for conversation histories and model responses.

Layout under the cache root:

    sessions/{encoded-session-id}.jsonl   one message object per line
    responses/{sha256-digest}.json        cached ChatResponse entries

History writes are append-with-flush; response entries go through a temp
file and an atomic rename. One cache instance per process per directory;
cross-process locking is out of scope.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from kennel.errors import CacheError
from kennel.types import ChatResponse, Message, PromptParameters, Role

logger = logging.getLogger(__name__)

_SAFE_BYTES = frozenset(
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789._-"
)


def encode_session_id(session_id: str) -> str:
    """Percent-encode every byte outside [A-Za-z0-9._-], making the id file-safe."""
    out = []
    for b in session_id.encode("utf-8"):
        if b in _SAFE_BYTES:
            out.append(chr(b))
        else:
            out.append(f"%{b:02X}")
    return "".join(out)


def canonical_json(value: Any) -> str:
    """Deterministic JSON: sorted keys, no insignificant whitespace, UTF-8 safe."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def response_cache_key(
    kind: str,
    base_url: str,
    model: str,
    params: PromptParameters,
    messages: Sequence[Message],
) -> str:
    """SHA-256 digest identifying one provider call.

    Messages enter the digest as (role, content) pairs; timestamps are
    bookkeeping and would break key stability across runs.
    """
    payload = {
        "kind": kind,
        "base_url": base_url,
        "model": model,
        "params": {
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "top_p": params.top_p,
            "system_prompt": params.system_prompt,
        },
        "extra": params.extra,
        "messages": [{"role": m.role.value, "content": m.content} for m in messages],
    }
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


@dataclass
class SessionRecord:
    """Ordered message history for one session id."""

    session_id: str
    messages: list[Message]


def _check_alternation(tail_role: Role | None, batch: Sequence[Message]) -> None:
    expected = Role.USER if tail_role in (None, Role.ASSISTANT) else Role.ASSISTANT
    for message in batch:
        if message.role is Role.SYSTEM:
            raise CacheError("system messages are never persisted in session history")
        if message.role is not expected:
            raise CacheError(
                f"alternation violation: expected {expected.value}, got {message.role.value}"
            )
        expected = Role.ASSISTANT if expected is Role.USER else Role.USER


class FileCache:
    """CacheService backed by the local file system."""

    def __init__(self, root: str | Path, response_ttl: float | None = None):
        self.root = Path(root)
        self.response_ttl = response_ttl
        self._sessions_dir = self.root / "sessions"
        self._responses_dir = self.root / "responses"
        try:
            self._sessions_dir.mkdir(parents=True, exist_ok=True)
            self._responses_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CacheError(f"cannot create cache directories: {e}") from e
        self._tail_roles: dict[str, Role | None] = {}
        self._lock = threading.Lock()

    # -- session history ---------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self._sessions_dir / f"{encode_session_id(session_id)}.jsonl"

    def load_history(self, session_id: str) -> list[Message]:
        """All complete messages of a session, in append order.

        A torn final line (crash artifact) is dropped with a warning; a
        corrupt line anywhere else raises CacheError.
        """
        path = self._session_path(session_id)
        if not path.exists():
            return []
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as e:
            raise CacheError(f"cannot read session file: {e}") from e

        messages: list[Message] = []
        lines = raw.split("\n")
        torn = lines[-1] != ""  # a complete line always ends with a newline
        body = lines[:-1]
        if torn:
            logger.warning(
                "session %r: dropping torn trailing line (%d bytes)",
                session_id,
                len(lines[-1]),
            )
        for i, line in enumerate(body):
            if not line:
                continue
            try:
                messages.append(Message.from_dict(json.loads(line)))
            except (ValueError, KeyError) as e:
                if i == len(body) - 1 and not torn:
                    logger.warning("session %r: dropping corrupt final line", session_id)
                    break
                raise CacheError(f"corrupt history line {i + 1} in session {session_id!r}") from e
        return messages

    def load_record(self, session_id: str) -> SessionRecord:
        return SessionRecord(session_id, self.load_history(session_id))

    def _tail_role(self, session_id: str) -> Role | None:
        if session_id not in self._tail_roles:
            history = self.load_history(session_id)
            self._tail_roles[session_id] = history[-1].role if history else None
        return self._tail_roles[session_id]

    def append_message(self, session_id: str, message: Message) -> None:
        self.append_messages(session_id, [message])

    def append_messages(self, session_id: str, messages: Iterable[Message]) -> None:
        """Append a batch of messages as one durable write.

        The batch must continue the strict user/assistant alternation of the
        stored record; a whole chat turn passes both messages here so the
        file never holds half a turn.
        """
        batch = list(messages)
        if not batch:
            return
        with self._lock:
            _check_alternation(self._tail_role(session_id), batch)
            path = self._session_path(session_id)
            payload = "".join(json.dumps(m.to_dict(), ensure_ascii=False) + "\n" for m in batch)
            try:
                with open(path, "a", encoding="utf-8") as f:
                    f.write(payload)
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as e:
                self._tail_roles.pop(session_id, None)
                raise CacheError(f"cannot append to session file: {e}") from e
            self._tail_roles[session_id] = batch[-1].role

    # -- response cache ----------------------------------------------------

    def _response_path(self, key: str) -> Path:
        return self._responses_dir / f"{key}.json"

    def response_get(self, key: str) -> ChatResponse | None:
        path = self._response_path(key)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise CacheError(f"cannot read response cache entry: {e}") from e
        if self.response_ttl is not None:
            if time.time() - entry.get("saved_at", 0.0) > self.response_ttl:
                return None
        return ChatResponse.from_dict(entry["response"])

    def response_put(self, key: str, response: ChatResponse) -> None:
        entry = {"saved_at": time.time(), "response": response.to_dict()}
        try:
            fd, tmp = tempfile.mkstemp(dir=self._responses_dir, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, ensure_ascii=False)
            os.replace(tmp, self._response_path(key))
        except OSError as e:
            raise CacheError(f"cannot write response cache entry: {e}") from e
