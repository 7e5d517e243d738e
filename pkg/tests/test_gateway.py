"""Gateway behavior: replay determinism, retries, request keys, JSON recovery."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aptcgen.catalog import allowed_weaknesses
from aptcgen.errors import (
    AuthError,
    FixtureMissing,
    GenerationTimeoutError,
    JsonSyntaxError,
    NoJsonFound,
    TransportError,
)
from aptcgen.gateway import (
    GenerationRecord,
    ProviderConfig,
    TransientTransportFailure,
    extract_json,
    generate,
    record_fixture,
    request_key,
)
from aptcgen.prompting import Strategy, build_prompt
from aptcgen.serializer import serialize_security_view


@pytest.fixture
def bundle(maintenance):
    view = serialize_security_view(maintenance)
    return build_prompt(view, Strategy.ZERO_SHOT, list(allowed_weaknesses()), [])


def _bomb_transport(url, headers, payload, timeout):
    raise AssertionError("network transport must not be touched")


def test_replay_round_trip_and_determinism(bundle, tmp_path):
    record = GenerationRecord(
        request_key=request_key(
            "GPT-5.2",
            bundle.strategy,
            "Maintenance",
            bundle.target_weaknesses,
            bundle.system_message,
            bundle.user_message,
        ),
        raw_response='[{"ok": true}]',
        latency_ms=12.5,
        timestamp="2026-02-01T00:00:00+00:00",
        prompt_sha256="abc",
    )
    key = record_fixture(record, tmp_path)
    config = ProviderConfig(provider_kind="replay", model_id="GPT-5.2", fixtures_path=str(tmp_path))
    first = generate(bundle, config, case_study="Maintenance", transport=_bomb_transport)
    second = generate(bundle, config, case_study="Maintenance", transport=_bomb_transport)
    assert first.raw_response == second.raw_response == '[{"ok": true}]'
    assert first.request_key == key
    assert first.timestamp == "2026-02-01T00:00:00+00:00"


def test_replay_missing_fixture_names_key(bundle, tmp_path):
    config = ProviderConfig(provider_kind="replay", model_id="GPT-5.2", fixtures_path=str(tmp_path))
    with pytest.raises(FixtureMissing) as excinfo:
        generate(bundle, config, case_study="Maintenance", transport=_bomb_transport)
    expected = request_key(
        "GPT-5.2",
        bundle.strategy,
        "Maintenance",
        bundle.target_weaknesses,
        bundle.system_message,
        bundle.user_message,
    )
    assert expected in str(excinfo.value)


def test_record_fixture_idempotent_key(tmp_path):
    record = GenerationRecord(
        request_key="k" * 64, raw_response="one", latency_ms=1.0, timestamp="t"
    )
    assert record_fixture(record, tmp_path) == "k" * 64
    replaced = GenerationRecord(
        request_key="k" * 64, raw_response="two", latency_ms=2.0, timestamp="t2"
    )
    assert record_fixture(replaced, tmp_path) == "k" * 64
    stored = json.loads((tmp_path / ("k" * 64 + ".json")).read_text())
    assert stored["rawResponse"] == "two"
    assert len(list(tmp_path.glob("*.json"))) == 1


def test_request_key_sensitivity(bundle):
    base = request_key(
        "M", Strategy.ZERO_SHOT, "CS", ("CWE-1",), bundle.system_message, bundle.user_message
    )
    assert base == request_key(
        "M", Strategy.ZERO_SHOT, "CS", ("CWE-1",), bundle.system_message, bundle.user_message
    )
    variants = [
        request_key("M2", Strategy.ZERO_SHOT, "CS", ("CWE-1",), bundle.system_message, bundle.user_message),
        request_key("M", Strategy.ONE_SHOT, "CS", ("CWE-1",), bundle.system_message, bundle.user_message),
        request_key("M", Strategy.ZERO_SHOT, "CS2", ("CWE-1",), bundle.system_message, bundle.user_message),
        request_key("M", Strategy.ZERO_SHOT, "CS", ("CWE-2",), bundle.system_message, bundle.user_message),
        request_key("M", Strategy.ZERO_SHOT, "CS", ("CWE-1",), bundle.system_message + "x", bundle.user_message),
        request_key("M", Strategy.ZERO_SHOT, "CS", ("CWE-1",), bundle.system_message, bundle.user_message + "x"),
    ]
    assert len({base, *variants}) == len(variants) + 1


def test_live_provider_retries_transient_failures(bundle, monkeypatch):
    monkeypatch.setenv("APTC_OPENAI_API_KEY", "test-key")
    config = ProviderConfig(provider_kind="openai-compatible", model_id="gpt", max_retries=2)
    calls = []
    sleeps = []

    def flaky(url, headers, payload, timeout):
        calls.append(url)
        if len(calls) < 3:
            raise TransientTransportFailure("connection reset")
        body = json.dumps({"choices": [{"message": {"content": "[1, 2]"}}]})
        return 200, body

    record = generate(bundle, config, transport=flaky, sleep=sleeps.append)
    assert record.raw_response == "[1, 2]"
    assert len(calls) == 3
    assert sleeps == [0.5, 1.0]
    assert record.prompt_sha256


def test_live_provider_gives_up_after_retries(bundle, monkeypatch):
    monkeypatch.setenv("APTC_OPENAI_API_KEY", "test-key")
    config = ProviderConfig(provider_kind="openai-compatible", model_id="gpt", max_retries=1)

    def always_down(url, headers, payload, timeout):
        return 503, "unavailable"

    with pytest.raises(TransportError):
        generate(bundle, config, transport=always_down, sleep=lambda s: None)


def test_timeout_surfaces_as_timeout_error(bundle, monkeypatch):
    monkeypatch.setenv("APTC_OPENAI_API_KEY", "test-key")
    config = ProviderConfig(provider_kind="openai-compatible", model_id="gpt", max_retries=1)

    def slow(url, headers, payload, timeout):
        raise TransientTransportFailure("deadline", timed_out=True)

    with pytest.raises(GenerationTimeoutError):
        generate(bundle, config, transport=slow, sleep=lambda s: None)


def test_auth_errors_are_not_retried(bundle, monkeypatch):
    monkeypatch.setenv("APTC_OPENAI_API_KEY", "bad-key")
    config = ProviderConfig(provider_kind="openai-compatible", model_id="gpt", max_retries=5)
    calls = []

    def rejected(url, headers, payload, timeout):
        calls.append(url)
        return 401, "no"

    with pytest.raises(AuthError):
        generate(bundle, config, transport=rejected, sleep=lambda s: None)
    assert len(calls) == 1


def test_missing_credential_is_auth_error(bundle, monkeypatch):
    monkeypatch.delenv("APTC_OPENAI_API_KEY", raising=False)
    config = ProviderConfig(provider_kind="openai-compatible", model_id="gpt")
    with pytest.raises(AuthError, match="APTC_OPENAI_API_KEY"):
        generate(bundle, config, transport=_bomb_transport)


def test_openai_payload_shaping(bundle, monkeypatch):
    monkeypatch.setenv("APTC_OPENAI_API_KEY", "k")
    config = ProviderConfig(provider_kind="openai-compatible", model_id="the-model")
    seen = {}

    def capture(url, headers, payload, timeout):
        seen.update(url=url, headers=headers, payload=payload)
        return 200, json.dumps({"choices": [{"message": {"content": "[]"}}]})

    generate(bundle, config, transport=capture)
    assert seen["url"].endswith("/chat/completions")
    assert seen["headers"]["Authorization"] == "Bearer k"
    assert seen["payload"]["model"] == "the-model"
    assert seen["payload"]["messages"][0]["role"] == "system"
    assert seen["payload"]["messages"][1]["content"] == bundle.user_message
    assert seen["payload"]["temperature"] == 0.0


def test_gemini_payload_shaping(bundle, monkeypatch):
    monkeypatch.setenv("APTC_GEMINI_API_KEY", "g")
    config = ProviderConfig(provider_kind="gemini", model_id="gem-pro")
    seen = {}

    def capture(url, headers, payload, timeout):
        seen.update(url=url, headers=headers, payload=payload)
        body = {"candidates": [{"content": {"parts": [{"text": "["}, {"text": "]"}]}}]}
        return 200, json.dumps(body)

    record = generate(bundle, config, transport=capture)
    assert "gem-pro" in seen["url"]
    assert seen["headers"]["x-goog-api-key"] == "g"
    assert seen["payload"]["system_instruction"]["parts"][0]["text"] == bundle.system_message
    assert record.raw_response == "[]"


def test_bundled_replay_store_covers_full_matrix():
    from conftest import REPLAY_DIR

    # 2 model labels x 3 strategies x 3 case studies
    assert len(list(REPLAY_DIR.glob("*.json"))) == 18


def test_replay_config_requires_fixtures_path():
    with pytest.raises(ValueError):
        ProviderConfig(provider_kind="replay", model_id="x")
    with pytest.raises(ValueError):
        ProviderConfig(provider_kind="nonsense", model_id="x")


def test_extract_json_strips_fences(example_aptc):
    wrapped = f"```json\n[{json.dumps(example_aptc)}]\n```"
    assert extract_json(wrapped) == [example_aptc]


def test_extract_json_bare_array_identity():
    assert extract_json('[{"a": 1}]') == [{"a": 1}]


def test_extract_json_takes_last_for_reasoning_output():
    raw = 'First I consider {"draft": 1}. Final answer:\n[{"final": true}]'
    assert extract_json(raw, take_last=True) == [{"final": True}]
    assert extract_json(raw) == {"draft": 1}


def test_extract_json_no_json_found():
    with pytest.raises(NoJsonFound):
        extract_json("plain prose with no payload at all")


def test_extract_json_malformed_reports_offset():
    with pytest.raises(JsonSyntaxError) as excinfo:
        extract_json("prefix {broken json")
    assert excinfo.value.offset == 7


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_extract_json_embed_and_recover(data):
    rng = random.Random(data.draw(st.integers(min_value=0, max_value=2**32 - 1)))
    value = data.draw(
        st.recursive(
            st.one_of(
                st.integers(min_value=-1000, max_value=1000),
                st.booleans(),
                st.text(alphabet="abcdef ", max_size=8),
                st.none(),
            ),
            lambda children: st.one_of(
                st.lists(children, max_size=4),
                st.dictionaries(st.text(alphabet="xyz", min_size=1, max_size=4), children, max_size=4),
            ),
            max_leaves=12,
        ).filter(lambda v: isinstance(v, (list, dict)))
    )
    prose_alphabet = "abcdefghijklmnop qrstuv wxyz.,:;!?0123456789\n"
    prefix = "".join(rng.choice(prose_alphabet) for _ in range(rng.randint(0, 40)))
    suffix = "".join(rng.choice(prose_alphabet) for _ in range(rng.randint(0, 40)))
    raw = prefix + json.dumps(value) + suffix
    assert extract_json(raw) == value
