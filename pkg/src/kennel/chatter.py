"""Session-aware chat core: assemble history, call the provider, persist.

Concurrency: calls on distinct sessions run in parallel; calls on one
session are serialized in initiation order by a ticket gate. Async work
runs on a shared thread pool and reports through a callback object; the
pool never runs two turns of one session out of order because tickets are
issued in submission order and the pool dequeues FIFO.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Protocol, Sequence

from kennel.cache import FileCache, response_cache_key
from kennel.errors import BarkError, InvalidInputError, SerializationError
from kennel.providers import Provider, ProviderKind
from kennel.types import (
    ChatResponse,
    Message,
    PromptParameters,
    Role,
    validate_session_id,
)

logger = logging.getLogger("kennel.chatter")

Transform = Callable[[str, PromptParameters, list[Message]], list[Message]]


class BarkCallback(Protocol):
    """Receiver for one async turn: exactly one handler fires, exactly once."""

    def on_response(self, response: ChatResponse) -> None: ...

    def on_error(self, error: BarkError) -> None: ...


class _SessionGate:
    """Tickets serialize turns of one session in initiation order."""

    def __init__(self):
        self._cond = threading.Condition()
        self._next = 0
        self._serving = 0

    def ticket(self) -> int:
        with self._cond:
            ticket = self._next
            self._next += 1
            return ticket

    def wait_turn(self, ticket: int) -> None:
        with self._cond:
            while self._serving != ticket:
                self._cond.wait()

    def release(self) -> None:
        with self._cond:
            self._serving += 1
            self._cond.notify_all()


def _provider_identity(provider: Provider) -> tuple[str, str, str]:
    """(kind, base_url, default_model) for response-cache keys."""
    kind = getattr(provider, "kind", None)
    config = getattr(provider, "config", None)
    return (
        kind.value if isinstance(kind, ProviderKind) else "mock",
        getattr(config, "base_url", "") or "",
        getattr(config, "default_model", "") or "",
    )


class Chatter:
    """Synchronous and callback-async chat over persistent sessions."""

    def __init__(
        self,
        provider: Provider,
        cache: FileCache,
        defaults: PromptParameters | None = None,
        response_cache: bool = False,
        max_workers: int = 8,
    ):
        self._provider = provider
        self._cache = cache
        self.defaults = defaults if defaults is not None else PromptParameters()
        self._response_cache = response_cache
        self._executor = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="kennel-bark"
        )
        self._gates: dict[str, _SessionGate] = {}
        self._gates_lock = threading.Lock()
        self._submit_lock = threading.Lock()
        self._pending = 0
        self._pending_cond = threading.Condition()

    # Wrappers that add prompt transforms override these two hooks.
    def _collect(self, sink: list | None) -> tuple[Transform, ...]:
        return ()

    def _core(self) -> "Chatter":
        return self

    def _gate(self, session_id: str) -> _SessionGate:
        with self._gates_lock:
            gate = self._gates.get(session_id)
            if gate is None:
                gate = self._gates[session_id] = _SessionGate()
            return gate

    # -- public API ------------------------------------------------------

    def bark(
        self,
        session: str,
        prompt: str,
        params: PromptParameters | None = None,
    ) -> ChatResponse:
        """One synchronous turn; history gains [User, Assistant] or nothing."""
        response, _ = self.bark_turn(session, prompt, params)
        return response

    def bark_turn(
        self,
        session: str,
        prompt: str,
        params: PromptParameters | None = None,
    ) -> tuple[ChatResponse, list]:
        """Like bark, but also reports the retrieval chunks the turn used."""
        core = self._core()
        sid, params = core._check_call(session, prompt, params)
        sink: list = []
        transforms = self._collect(sink)
        gate = core._gate(sid)
        ticket = gate.ticket()
        response = core._run_turn(sid, prompt, params, transforms, gate, ticket)
        return response, sink

    def bark_async(
        self,
        session: str,
        prompt: str,
        params: PromptParameters | None = None,
        callback: BarkCallback | None = None,
    ) -> None:
        """Start one turn and return immediately.

        The outcome arrives on a background thread as exactly one of
        on_response/on_error; even argument mistakes are routed to
        on_error when a callback is available. Accepts the callback as
        the third argument when params are omitted.
        """
        if callback is None and params is not None and not isinstance(params, PromptParameters):
            callback, params = params, None
        if callback is None:
            raise InvalidInputError("bark_async requires a callback")
        core = self._core()
        try:
            sid, params = core._check_call(session, prompt, params)
            transforms = self._collect(None)
        except BarkError as error:
            core._spawn(core._deliver_error, callback, error)
            return
        # Ticket issue and submit stay atomic so pool FIFO order matches
        # ticket order; otherwise a small pool could dequeue a later
        # ticket first and every worker could end up waiting.
        with core._submit_lock:
            gate = core._gate(sid)
            ticket = gate.ticket()
            core._spawn(core._async_turn, sid, prompt, params, transforms, gate, ticket, callback)

    def assemble_messages(
        self,
        session: str,
        prompt: str,
        params: PromptParameters | None = None,
    ) -> list[Message]:
        """[system?] + persisted history + [user prompt]; history never
        holds system messages."""
        core = self._core()
        sid, params = core._check_call(session, prompt, params)
        messages: list[Message] = []
        if params.system_prompt:
            messages.append(Message(Role.SYSTEM, params.system_prompt))
        messages.extend(core._cache.load_history(sid))
        messages.append(Message(Role.USER, prompt))
        return messages

    def history(self, session: str) -> list[Message]:
        return self._core()._cache.load_history(validate_session_id(session))

    def drain(self) -> None:
        """Block until every initiated async turn has reported."""
        core = self._core()
        with core._pending_cond:
            while core._pending:
                core._pending_cond.wait()

    def close(self) -> None:
        core = self._core()
        core.drain()
        core._executor.shutdown(wait=True)

    def __enter__(self) -> "Chatter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def cache(self) -> FileCache:
        return self._core()._cache

    @property
    def provider(self) -> Provider:
        return self._core()._provider

    # -- turn machinery ----------------------------------------------------

    def _check_call(
        self, session: str, prompt: str, params: PromptParameters | None
    ) -> tuple[str, PromptParameters]:
        sid = validate_session_id(session)
        if not prompt:
            raise InvalidInputError("prompt must be non-empty")
        if params is None:
            params = self.defaults
        elif not isinstance(params, PromptParameters):
            raise InvalidInputError("params must be PromptParameters")
        return sid, params

    def _spawn(self, fn, *args) -> None:
        with self._pending_cond:
            self._pending += 1
        try:
            self._executor.submit(self._tracked, fn, *args)
        except BaseException:
            with self._pending_cond:
                self._pending -= 1
                self._pending_cond.notify_all()
            raise

    def _tracked(self, fn, *args) -> None:
        try:
            fn(*args)
        finally:
            with self._pending_cond:
                self._pending -= 1
                self._pending_cond.notify_all()

    def _deliver_error(self, callback: BarkCallback, error: BarkError) -> None:
        try:
            callback.on_error(error)
        except Exception:
            logger.exception("on_error handler raised")

    def _async_turn(self, sid, prompt, params, transforms, gate, ticket, callback) -> None:
        try:
            response = self._run_turn(sid, prompt, params, transforms, gate, ticket)
        except BarkError as error:
            self._deliver_error(callback, error)
            return
        except Exception as error:  # keep the exactly-once promise for bugs too
            logger.exception("unexpected turn failure")
            self._deliver_error(callback, BarkError(f"unexpected failure: {error}"))
            return
        try:
            callback.on_response(response)
        except Exception:
            logger.exception("on_response handler raised")

    def _run_turn(self, sid, prompt, params, transforms, gate, ticket) -> ChatResponse:
        gate.wait_turn(ticket)
        try:
            return self._turn_locked(sid, prompt, params, transforms)
        finally:
            gate.release()

    def _turn_locked(
        self,
        sid: str,
        prompt: str,
        params: PromptParameters,
        transforms: Sequence[Transform],
    ) -> ChatResponse:
        history = self._cache.load_history(sid)
        messages: list[Message] = []
        if params.system_prompt:
            messages.append(Message(Role.SYSTEM, params.system_prompt))
        messages.extend(history)
        original = Message(Role.USER, prompt)
        messages.append(original)
        for transform in transforms:
            messages = transform(sid, params, messages)
        response = self._complete(messages, params)
        if not response.text:
            raise SerializationError("provider returned an empty message")
        self._cache.append_messages(
            sid, [original, Message(Role.ASSISTANT, response.text)]
        )
        return response

    def _complete(self, messages: list[Message], params: PromptParameters) -> ChatResponse:
        if not self._response_cache:
            return self._provider.complete(messages, params)
        kind, base_url, default_model = _provider_identity(self._provider)
        key = response_cache_key(
            kind, base_url, params.model or default_model, params, messages
        )
        hit = self._cache.response_get(key)
        if hit is not None:
            return hit
        response = self._provider.complete(messages, params)
        self._cache.response_put(key, response)
        return response
