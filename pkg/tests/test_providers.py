import json

import pytest

from kennel.errors import (
    InvalidInputError,
    NetworkError,
    ProviderError,
    SerializationError,
)
from kennel.providers import (
    HttpProvider,
    MockProvider,
    ProviderConfig,
    ProviderKind,
    build_ollama_request,
    build_openai_request,
    encode_json,
    make_provider,
    parse_ollama_response,
    parse_openai_response,
    resolve_base_url,
    send,
)
from kennel.types import FinishReason, Message, PromptParameters, Role

from tests._helpers import (
    StubServer,
    closed_port_url,
    fixture_inputs,
    load_provider_fixtures,
)

FIXTURES = load_provider_fixtures()

USER_HI = [Message(Role.USER, "hi")]


def stub_openai_body(text="ok", finish="stop"):
    return {
        "model": "gpt-test",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text},
                     "finish_reason": finish}],
        "usage": {"prompt_tokens": 1, "completion_tokens": 2},
    }


class TestProviderConfig:
    def test_defaults(self):
        config = ProviderConfig()
        assert config.timeout == 60.0
        assert config.api_key is None
        assert config.extra_headers == {}

    def test_trailing_slash_stripped(self):
        assert ProviderConfig(base_url="http://x:1/v1/").base_url == "http://x:1/v1"

    def test_bad_scheme_rejected(self):
        with pytest.raises(InvalidInputError):
            ProviderConfig(base_url="ftp://x")

    def test_repr_masks_api_key(self):
        config = ProviderConfig(base_url="http://x", api_key="sk-secret-123")
        assert "sk-secret-123" not in repr(config)
        assert "***" in repr(config)

    def test_resolve_base_url_defaults(self):
        assert resolve_base_url(ProviderKind.OLLAMA, "") == "http://localhost:11434"
        assert resolve_base_url(ProviderKind.ROUTER, "") == "https://openrouter.ai/api/v1"
        assert resolve_base_url(ProviderKind.OLLAMA, "http://own:1") == "http://own:1"

    def test_resolve_base_url_requires_url_for_openai(self):
        with pytest.raises(InvalidInputError):
            resolve_base_url(ProviderKind.OPENAI_COMPATIBLE, "")


class TestEncodeJson:
    def test_insertion_order_preserved(self):
        assert encode_json({"b": 1, "a": 2}) == b'{"b":1,"a":2}'

    def test_compact_and_utf8(self):
        assert encode_json({"k": "héllo"}) == '{"k":"héllo"}'.encode("utf-8")

    def test_equal_docs_equal_bytes(self):
        doc = {"model": "m", "messages": [{"role": "user", "content": "x"}]}
        assert encode_json(doc) == encode_json(json.loads(json.dumps(doc)))


class TestBuilders:
    def test_openai_minimal(self):
        doc = build_openai_request(USER_HI, PromptParameters(model="m"))
        assert doc == {"model": "m", "messages": [{"role": "user", "content": "hi"}]}
        assert list(doc) == ["model", "messages"]

    def test_openai_named_field_order(self):
        params = PromptParameters(
            model="m", temperature=0.5, top_p=0.9, max_tokens=10, extra={"z": 1, "a": 2}
        )
        doc = build_openai_request(USER_HI, params)
        assert list(doc) == ["model", "messages", "temperature", "max_tokens", "top_p", "z", "a"]

    def test_ollama_minimal_forces_stream_false(self):
        doc = build_ollama_request(USER_HI, PromptParameters(model="m"))
        assert doc == {
            "model": "m",
            "messages": [{"role": "user", "content": "hi"}],
            "stream": False,
        }

    def test_ollama_sampling_nested_in_options(self):
        params = PromptParameters(model="m", temperature=0.2, top_p=0.8, max_tokens=64)
        doc = build_ollama_request(USER_HI, params)
        assert doc["options"] == {"temperature": 0.2, "top_p": 0.8, "num_predict": 64}
        assert list(doc) == ["model", "messages", "stream", "options"]

    def test_ollama_extra_merged_top_level(self):
        doc = build_ollama_request(USER_HI, PromptParameters(model="m", extra={"keep_alive": "5m"}))
        assert doc["keep_alive"] == "5m"
        assert "options" not in doc

    def test_unset_sampling_fields_omitted(self):
        doc = build_openai_request(USER_HI, PromptParameters(model="m"))
        for key in ("temperature", "max_tokens", "top_p"):
            assert key not in doc

    def test_missing_model_rejected(self):
        for build in (build_openai_request, build_ollama_request):
            with pytest.raises(InvalidInputError):
                build(USER_HI, PromptParameters())

    def test_empty_messages_rejected(self):
        with pytest.raises(InvalidInputError):
            build_openai_request([], PromptParameters(model="m"))

    @pytest.mark.parametrize("key", ["model", "messages", "stream"])
    def test_reserved_extra_collision(self, key):
        params = PromptParameters(model="m", extra={key: "boom"})
        with pytest.raises(SerializationError):
            build_openai_request(USER_HI, params)
        with pytest.raises(SerializationError):
            build_ollama_request(USER_HI, params)

    def test_ollama_options_reserved(self):
        with pytest.raises(SerializationError):
            build_ollama_request(USER_HI, PromptParameters(model="m", extra={"options": {}}))


class TestParsers:
    def test_openai_happy_path(self):
        resp = parse_openai_response(stub_openai_body("hello"))
        assert resp.text == "hello"
        assert resp.finish_reason is FinishReason.STOP
        assert resp.model == "gpt-test"
        assert resp.usage.prompt_tokens == 1 and resp.usage.completion_tokens == 2

    def test_openai_raw_kept_verbatim(self):
        body = stub_openai_body()
        body["system_fingerprint"] = "fp_x"
        assert parse_openai_response(body).raw is body

    def test_openai_missing_usage_is_none(self):
        body = stub_openai_body()
        del body["usage"]
        assert parse_openai_response(body).usage is None

    @pytest.mark.parametrize(
        "body",
        [
            {},
            {"choices": []},
            {"choices": [{"message": {}}]},
            {"choices": [{"message": {"content": None}}]},
            {"choices": [{"message": {"content": 42}}]},
            "not a dict",
        ],
    )
    def test_openai_malformed_rejected(self, body):
        with pytest.raises(SerializationError):
            parse_openai_response(body)

    def test_openai_unknown_finish_reason_kept(self):
        resp = parse_openai_response(stub_openai_body(finish="tool_calls"))
        assert resp.finish_reason.kind == "other"
        assert str(resp.finish_reason) == "tool_calls"

    def test_ollama_finish_reason_mapping(self):
        base = {"model": "llama3", "message": {"role": "assistant", "content": "x"}}
        done_stop = parse_ollama_response({**base, "done": True, "done_reason": "stop"})
        assert done_stop.finish_reason is FinishReason.STOP
        length = parse_ollama_response({**base, "done": True, "done_reason": "length"})
        assert length.finish_reason is FinishReason.LENGTH
        other = parse_ollama_response({**base, "done": True, "done_reason": "unload"})
        assert other.finish_reason.kind == "other"
        missing = parse_ollama_response({**base, "done": False})
        assert missing.finish_reason.kind == "other"

    def test_ollama_usage_from_eval_counts(self):
        body = {
            "message": {"content": "x"},
            "done": True,
            "done_reason": "stop",
            "prompt_eval_count": 3,
            "eval_count": 7,
        }
        usage = parse_ollama_response(body).usage
        assert (usage.prompt_tokens, usage.completion_tokens) == (3, 7)

    def test_ollama_no_counts_no_usage(self):
        body = {"message": {"content": "x"}, "done": True, "done_reason": "stop"}
        assert parse_ollama_response(body).usage is None

    @pytest.mark.parametrize("body", [{}, {"message": {}}, {"message": {"content": 5}}, None])
    def test_ollama_malformed_rejected(self, body):
        with pytest.raises(SerializationError):
            parse_ollama_response(body)


class TestFixtures:
    @pytest.mark.parametrize("name,kind,doc", FIXTURES, ids=[f[0] for f in FIXTURES])
    def test_request_build_is_byte_stable(self, name, kind, doc):
        messages, params = fixture_inputs(kind, doc["request"])
        build = build_ollama_request if kind == "ollama" else build_openai_request
        assert encode_json(build(messages, params)) == encode_json(doc["request"])

    @pytest.mark.parametrize("name,kind,doc", FIXTURES, ids=[f[0] for f in FIXTURES])
    def test_response_parse_matches_expectation(self, name, kind, doc):
        parse = parse_ollama_response if kind == "ollama" else parse_openai_response
        resp = parse(doc["response"])
        expect = doc["expect"]
        assert resp.text == expect["text"]
        assert resp.finish_reason.kind == expect["finish_reason"]
        if expect["usage"] is None:
            assert resp.usage is None
        else:
            assert resp.usage.prompt_tokens == expect["usage"]["prompt_tokens"]
            assert resp.usage.completion_tokens == expect["usage"]["completion_tokens"]
        assert resp.raw == doc["response"]

    def test_fixture_corpus_covers_all_kinds(self):
        kinds = {kind for _, kind, _ in FIXTURES}
        assert kinds == {"openai", "ollama", "router"}


class TestMockProvider:
    def test_echoes_last_user_message(self):
        mock = MockProvider()
        messages = [
            Message(Role.USER, "first"),
            Message(Role.ASSISTANT, "reply"),
            Message(Role.USER, "second"),
        ]
        resp = mock.complete(messages, PromptParameters())
        assert resp.text == "echo: second"
        assert resp.finish_reason is FinishReason.STOP

    def test_script_consumed_in_order_then_repeats(self):
        mock = MockProvider(script=["one", "two"])
        texts = [mock.complete(USER_HI, PromptParameters()).text for _ in range(4)]
        assert texts == ["one", "two", "two", "two"]

    def test_call_count_and_recording(self):
        mock = MockProvider()
        assert mock.call_count == 0
        mock.complete(USER_HI, PromptParameters(model="m1"))
        assert mock.call_count == 1
        assert mock.last_params.model == "m1"
        assert [m.content for m in mock.last_messages] == ["hi"]

    def test_empty_script_entry_rejected(self):
        with pytest.raises(InvalidInputError):
            MockProvider(script=[""])
        with pytest.raises(InvalidInputError):
            MockProvider(script=[42])

    def test_model_defaulting(self):
        mock = MockProvider()
        assert mock.complete(USER_HI, PromptParameters()).model == "mock"
        assert mock.complete(USER_HI, PromptParameters(model="m")).model == "m"


class TestSend:
    def params(self):
        return PromptParameters(model="m")

    def test_mock_kind_needs_no_network(self):
        resp = send(ProviderConfig(), ProviderKind.MOCK, USER_HI, self.params())
        assert resp.text == "echo: hi"

    def test_openai_round_trip(self):
        with StubServer() as stub:
            stub.push(200, stub_openai_body("server says hi"))
            config = ProviderConfig(base_url=stub.base_url, api_key="sk-key")
            resp = send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert resp.text == "server says hi"
            [req] = stub.requests
            assert req["path"] == "/chat/completions"
            assert req["headers"]["authorization"] == "Bearer sk-key"
            assert req["headers"]["content-type"] == "application/json"
            assert json.loads(req["body"]) == {
                "model": "m",
                "messages": [{"role": "user", "content": "hi"}],
            }

    def test_request_body_bytes_exact(self):
        with StubServer() as stub:
            stub.push(200, stub_openai_body())
            config = ProviderConfig(base_url=stub.base_url)
            send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            expected = encode_json(build_openai_request(USER_HI, self.params()))
            assert stub.requests[0]["body"] == expected

    def test_ollama_path_and_stream_false(self):
        with StubServer() as stub:
            stub.push(200, {"message": {"content": "x"}, "done": True, "done_reason": "stop"})
            config = ProviderConfig(base_url=stub.base_url)
            send(config, ProviderKind.OLLAMA, USER_HI, self.params())
            [req] = stub.requests
            assert req["path"] == "/api/chat"
            assert json.loads(req["body"])["stream"] is False

    def test_router_uses_openai_wire_shape(self):
        with StubServer() as stub:
            stub.push(200, stub_openai_body())
            config = ProviderConfig(base_url=stub.base_url)
            send(config, ProviderKind.ROUTER, USER_HI, self.params())
            assert stub.requests[0]["path"] == "/chat/completions"

    def test_extra_headers_sent(self):
        with StubServer() as stub:
            stub.push(200, stub_openai_body())
            config = ProviderConfig(
                base_url=stub.base_url, extra_headers={"X-Title": "kennel"}
            )
            send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert stub.requests[0]["headers"]["x-title"] == "kennel"

    def test_default_model_fills_blank_params(self):
        with StubServer() as stub:
            stub.push(200, stub_openai_body())
            config = ProviderConfig(base_url=stub.base_url, default_model="fallback")
            send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, PromptParameters())
            assert json.loads(stub.requests[0]["body"])["model"] == "fallback"

    def test_retryable_status_retried_once_then_succeeds(self):
        with StubServer() as stub:
            stub.push(429, {"error": "slow down"})
            stub.push(200, stub_openai_body("second try"))
            config = ProviderConfig(base_url=stub.base_url, retry_backoff=0.0)
            resp = send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert resp.text == "second try"
            assert len(stub.requests) == 2

    def test_second_failure_surfaces(self):
        with StubServer() as stub:
            stub.push(500, {"error": "down"})
            stub.push(502, {"error": "still down"})
            config = ProviderConfig(base_url=stub.base_url, retry_backoff=0.0)
            with pytest.raises(ProviderError) as exc:
                send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert exc.value.status == 502
            assert len(stub.requests) == 2

    def test_non_retryable_status_not_retried(self):
        with StubServer() as stub:
            stub.push(400, {"error": "bad request"})
            config = ProviderConfig(base_url=stub.base_url, retry_backoff=0.0)
            with pytest.raises(ProviderError) as exc:
                send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert exc.value.status == 400
            assert exc.value.retryable is False
            assert len(stub.requests) == 1

    def test_connection_refused_is_network_error(self):
        config = ProviderConfig(base_url=closed_port_url(), retry_backoff=0.0, timeout=2.0)
        with pytest.raises(NetworkError) as exc:
            send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
        assert exc.value.retryable is True

    def test_invalid_json_response_rejected(self):
        with StubServer() as stub:
            stub.push(200, b"not json {{")
            config = ProviderConfig(base_url=stub.base_url)
            with pytest.raises(SerializationError):
                send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())

    def test_well_formed_json_wrong_shape_rejected(self):
        with StubServer() as stub:
            stub.push(200, "just a string")
            config = ProviderConfig(base_url=stub.base_url)
            with pytest.raises(SerializationError):
                send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())

    def test_api_key_redacted_from_errors(self):
        with StubServer() as stub:
            stub.push(401, {"error": "bad key sk-very-secret"})
            config = ProviderConfig(base_url=stub.base_url, api_key="sk-very-secret")
            with pytest.raises(ProviderError) as exc:
                send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert "sk-very-secret" not in str(exc.value)
            assert "***" in str(exc.value)

    def test_provider_error_message_format(self):
        with StubServer() as stub:
            stub.push(418, {"oops": True})
            config = ProviderConfig(base_url=stub.base_url)
            with pytest.raises(ProviderError) as exc:
                send(config, ProviderKind.OPENAI_COMPATIBLE, USER_HI, self.params())
            assert str(exc.value).startswith("provider returned status 418:")


class TestProviderErrors:
    def test_status_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            ProviderError(99, "x")
        with pytest.raises(ValueError):
            ProviderError(600, "x")

    @pytest.mark.parametrize("status,retryable", [(408, True), (429, True), (500, True),
                                                  (503, True), (400, False), (404, False)])
    def test_retryable_statuses(self, status, retryable):
        assert ProviderError(status, "x").retryable is retryable


class TestHttpProvider:
    def test_mock_kind_rejected(self):
        with pytest.raises(InvalidInputError):
            HttpProvider(ProviderKind.MOCK, ProviderConfig())

    def test_missing_base_url_fails_fast(self):
        with pytest.raises(InvalidInputError):
            HttpProvider(ProviderKind.OPENAI_COMPATIBLE, ProviderConfig())

    def test_complete_delegates_to_send(self):
        with StubServer() as stub:
            stub.push(200, stub_openai_body("via provider"))
            provider = HttpProvider(
                ProviderKind.OPENAI_COMPATIBLE, ProviderConfig(base_url=stub.base_url)
            )
            resp = provider.complete(USER_HI, PromptParameters(model="m"))
            assert resp.text == "via provider"

    def test_make_provider_dispatch(self):
        assert isinstance(make_provider(ProviderKind.MOCK), MockProvider)
        http = make_provider(
            ProviderKind.OLLAMA, ProviderConfig(base_url="http://localhost:11434")
        )
        assert isinstance(http, HttpProvider)
        with pytest.raises(InvalidInputError):
            make_provider(ProviderKind.OPENAI_COMPATIBLE)
