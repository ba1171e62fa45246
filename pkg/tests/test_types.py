from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kennel.errors import InvalidInputError
from kennel.types import (
    ChatResponse,
    FinishReason,
    Message,
    PromptParameters,
    Role,
    Usage,
    validate_session_id,
)


class TestMessage:
    def test_role_coercion_from_string(self):
        assert Message("user", "hi").role is Role.USER
        assert Message("assistant", "ok").role is Role.ASSISTANT
        assert Message("system", "x").role is Role.SYSTEM

    def test_unknown_role_rejected(self):
        with pytest.raises(InvalidInputError):
            Message("boss", "hi")

    def test_empty_content_only_for_system(self):
        Message(Role.SYSTEM, "")
        with pytest.raises(InvalidInputError):
            Message(Role.USER, "")
        with pytest.raises(InvalidInputError):
            Message(Role.ASSISTANT, "")

    def test_dict_round_trip(self):
        m = Message(Role.USER, "héllo")
        again = Message.from_dict(m.to_dict())
        assert again == m

    def test_created_at_serializes_utc_seconds(self):
        m = Message(Role.USER, "hi", created_at=datetime(2024, 5, 1, 12, 0, 7, tzinfo=timezone.utc))
        assert m.to_dict()["created_at"] == "2024-05-01T12:00:07Z"


class TestSessionId:
    def test_boundaries(self):
        assert validate_session_id("a") == "a"
        assert validate_session_id("x" * 256) == "x" * 256
        with pytest.raises(InvalidInputError):
            validate_session_id("")
        with pytest.raises(InvalidInputError):
            validate_session_id("x" * 257)
        with pytest.raises(InvalidInputError):
            validate_session_id(None)


class TestPromptParameters:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"temperature": -0.1},
            {"temperature": 2.1},
            {"top_p": 0.0},
            {"top_p": 1.01},
            {"max_tokens": 0},
            {"max_tokens": -5},
        ],
    )
    def test_out_of_range_rejected(self, kwargs):
        with pytest.raises(InvalidInputError):
            PromptParameters(**kwargs)

    def test_range_edges_allowed(self):
        PromptParameters(temperature=0.0)
        PromptParameters(temperature=2.0)
        PromptParameters(top_p=1.0)
        PromptParameters(max_tokens=1)

    @given(
        temperature=st.one_of(st.none(), st.floats(0, 2, allow_nan=False)),
        top_p=st.one_of(st.none(), st.floats(0.01, 1.0, allow_nan=False)),
        max_tokens=st.one_of(st.none(), st.integers(1, 1 << 20)),
    )
    def test_valid_ranges_always_construct(self, temperature, top_p, max_tokens):
        PromptParameters(temperature=temperature, top_p=top_p, max_tokens=max_tokens)


class TestFinishReason:
    def test_wire_mapping(self):
        assert FinishReason.from_wire("stop") is FinishReason.STOP
        assert FinishReason.from_wire("length") is FinishReason.LENGTH
        assert FinishReason.from_wire("content_filter") is FinishReason.FILTERED
        assert FinishReason.from_wire("weird") == FinishReason.other("weird")
        assert FinishReason.from_wire(None) == FinishReason.other("")

    def test_str(self):
        assert str(FinishReason.STOP) == "stop"
        assert str(FinishReason.FILTERED) == "filtered"
        assert str(FinishReason.other("weird")) == "weird"
        assert str(FinishReason.other("")) == "other"


class TestChatResponse:
    def test_dict_round_trip(self):
        r = ChatResponse(
            text="hello",
            finish_reason=FinishReason.LENGTH,
            model="m",
            usage=Usage(10, 5),
            raw={"choices": [1, 2]},
        )
        assert ChatResponse.from_dict(r.to_dict()) == r

    def test_round_trip_without_usage(self):
        r = ChatResponse(text="x", finish_reason=FinishReason.other("odd"), model="")
        assert ChatResponse.from_dict(r.to_dict()) == r
