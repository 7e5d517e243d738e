"""Provider gateway: live OpenAI-compatible/Gemini adapters and offline replay.

The replay provider answers from a directory of recorded fixtures keyed by
a deterministic request hash and performs no network I/O at all. Live
adapters share one request/response abstraction; provider-specific payload
shaping stays behind it. Credentials are only ever read from environment
variables named in the provider config.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from .errors import (
    AuthError,
    FixtureMissing,
    GenerationTimeoutError,
    JsonSyntaxError,
    NoJsonFound,
    TransportError,
)
from .prompting import PromptBundle, Strategy

OPENAI_KIND = "openai-compatible"
GEMINI_KIND = "gemini"
REPLAY_KIND = "replay"

DEFAULT_ENDPOINTS = {
    OPENAI_KIND: "https://api.openai.com/v1/chat/completions",
    GEMINI_KIND: "https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent",
}
DEFAULT_CREDENTIAL_REFS = {
    OPENAI_KIND: "APTC_OPENAI_API_KEY",
    GEMINI_KIND: "APTC_GEMINI_API_KEY",
}

# transport(url, headers, json_payload, timeout_s) -> (status_code, body_text)
Transport = Callable[[str, dict, dict, float], tuple[int, str]]


class TransientTransportFailure(Exception):
    """Raised by transports for retryable failures (connection loss, timeout)."""

    def __init__(self, reason: str, *, timed_out: bool = False):
        self.timed_out = timed_out
        super().__init__(reason)


@dataclass(frozen=True)
class ProviderConfig:
    provider_kind: str
    model_id: str
    endpoint_url: str | None = None
    credential_ref: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 4096
    timeout_s: float = 60.0
    max_retries: int = 2
    fixtures_path: str | None = None

    def __post_init__(self):
        if self.provider_kind == REPLAY_KIND:
            if not self.fixtures_path:
                raise ValueError("replay provider requires a fixtures path")
        elif self.provider_kind in (OPENAI_KIND, GEMINI_KIND):
            if self.endpoint_url is None:
                object.__setattr__(self, "endpoint_url", DEFAULT_ENDPOINTS[self.provider_kind])
            if self.credential_ref is None:
                object.__setattr__(
                    self, "credential_ref", DEFAULT_CREDENTIAL_REFS[self.provider_kind]
                )
        else:
            raise ValueError(f"unknown provider kind '{self.provider_kind}'")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class GenerationRecord:
    request_key: str
    raw_response: str
    latency_ms: float
    timestamp: str
    prompt_sha256: str = ""


def request_key(
    model_id: str,
    strategy: Strategy,
    case_study: str,
    weakness_ids: tuple[str, ...] | list[str],
    system_message: str,
    user_message: str,
) -> str:
    """Stable hash identifying one generation request."""
    basis = {
        "model": model_id,
        "strategy": strategy.value,
        "caseStudy": case_study,
        "weaknesses": list(weakness_ids),
        "prompt": {"system": system_message, "user": user_message},
    }
    encoded = json.dumps(basis, sort_keys=True, ensure_ascii=True).encode("utf-8")
    return hashlib.sha256(encoded).hexdigest()


def prompt_digest(bundle: PromptBundle) -> str:
    encoded = json.dumps(
        {"system": bundle.system_message, "user": bundle.user_message},
        sort_keys=True,
        ensure_ascii=True,
    ).encode("utf-8")
    return hashlib.sha256(encoded).hexdigest()


def _default_transport(url: str, headers: dict, payload: dict, timeout: float) -> tuple[int, str]:
    import httpx

    try:
        response = httpx.post(url, headers=headers, json=payload, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise TransientTransportFailure(f"request timed out: {exc}", timed_out=True) from exc
    except httpx.TransportError as exc:
        raise TransientTransportFailure(f"transport failure: {exc}") from exc
    return response.status_code, response.text


def _resolve_credential(config: ProviderConfig) -> str:
    key = os.environ.get(config.credential_ref or "", "")
    if not key:
        raise AuthError(
            f"credential environment variable '{config.credential_ref}' is not set"
        )
    return key


def _build_request(config: ProviderConfig, bundle: PromptBundle) -> tuple[str, dict, dict]:
    key = _resolve_credential(config)
    if config.provider_kind == OPENAI_KIND:
        url = config.endpoint_url
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        payload = {
            "model": config.model_id,
            "messages": [
                {"role": "system", "content": bundle.system_message},
                {"role": "user", "content": bundle.user_message},
            ],
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
        }
        return url, headers, payload
    url = config.endpoint_url.format(model=config.model_id)
    headers = {"x-goog-api-key": key, "Content-Type": "application/json"}
    payload = {
        "system_instruction": {"parts": [{"text": bundle.system_message}]},
        "contents": [{"role": "user", "parts": [{"text": bundle.user_message}]}],
        "generationConfig": {
            "temperature": config.temperature,
            "maxOutputTokens": config.max_output_tokens,
        },
    }
    return url, headers, payload


def _response_text(config: ProviderConfig, body: str) -> str:
    try:
        doc = json.loads(body)
        if config.provider_kind == OPENAI_KIND:
            return doc["choices"][0]["message"]["content"]
        parts = doc["candidates"][0]["content"]["parts"]
        return "".join(part.get("text", "") for part in parts)
    except (json.JSONDecodeError, LookupError, TypeError) as exc:
        raise TransportError(f"unexpected provider response shape: {exc}") from exc


def _fixture_path(store: str | Path, key: str) -> Path:
    return Path(store) / f"{key}.json"


def _replay(config: ProviderConfig, key: str) -> GenerationRecord:
    path = _fixture_path(config.fixtures_path, key)
    if not path.is_file():
        raise FixtureMissing(f"no recorded fixture for request key '{key}' in {config.fixtures_path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    return GenerationRecord(
        request_key=key,
        raw_response=doc["rawResponse"],
        latency_ms=float(doc.get("metadata", {}).get("latencyMs", 0.0)),
        timestamp=str(doc.get("metadata", {}).get("timestamp", "")),
        prompt_sha256=str(doc.get("promptSha256", "")),
    )


def generate(
    bundle: PromptBundle,
    config: ProviderConfig,
    case_study: str = "",
    *,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> GenerationRecord:
    """Run one generation request and return the provider text verbatim.

    Transient transport errors and 429/5xx responses are retried with
    exponential backoff up to max_retries; auth failures are not retried.
    The replay provider resolves entirely from its fixture store and never
    touches the transport.
    """
    key = request_key(
        config.model_id,
        bundle.strategy,
        case_study,
        bundle.target_weaknesses,
        bundle.system_message,
        bundle.user_message,
    )
    if config.provider_kind == REPLAY_KIND:
        return _replay(config, key)

    url, headers, payload = _build_request(config, bundle)
    send = transport if transport is not None else _default_transport
    attempts = config.max_retries + 1
    last_failure: Exception | None = None
    started = time.monotonic()
    for attempt in range(attempts):
        if attempt:
            sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
        try:
            status, body = send(url, headers, payload, config.timeout_s)
        except TransientTransportFailure as failure:
            last_failure = failure
            continue
        if status in (401, 403):
            raise AuthError(f"provider rejected credentials (HTTP {status})")
        if status == 429 or status >= 500:
            last_failure = TransientTransportFailure(f"HTTP {status}")
            continue
        if status != 200:
            raise TransportError(f"provider returned HTTP {status}: {body[:200]}")
        latency_ms = (time.monotonic() - started) * 1000.0
        return GenerationRecord(
            request_key=key,
            raw_response=_response_text(config, body),
            latency_ms=latency_ms,
            timestamp=datetime.now(timezone.utc).isoformat(),
            prompt_sha256=prompt_digest(bundle),
        )
    assert last_failure is not None
    if isinstance(last_failure, TransientTransportFailure) and last_failure.timed_out:
        raise GenerationTimeoutError(
            f"request timed out after {attempts} attempts: {last_failure}"
        )
    raise TransportError(f"request failed after {attempts} attempts: {last_failure}")


def record_fixture(record: GenerationRecord, store: str | Path) -> str:
    """Persist a generation record for later replay; returns the stored key.

    Writes are atomic (write-temp-rename), so concurrent recorders of the
    same key cannot interleave partial files.
    """
    store_path = Path(store)
    store_path.mkdir(parents=True, exist_ok=True)
    target = _fixture_path(store_path, record.request_key)
    doc = {
        "requestKey": record.request_key,
        "promptSha256": record.prompt_sha256,
        "rawResponse": record.raw_response,
        "metadata": {
            "latencyMs": record.latency_ms,
            "timestamp": record.timestamp,
        },
    }
    fd, tmp_name = tempfile.mkstemp(dir=store_path, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2)
            handle.write("\n")
        os.replace(tmp_name, target)
    finally:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
    return record.request_key


def extract_json(raw: str, *, take_last: bool = False) -> Any:
    """Recover the JSON payload from raw model output.

    Scans for top-level JSON objects or arrays, ignoring code fences and
    surrounding prose. Returns the first value found, or the last one when
    ``take_last`` is set (step-by-step responses emit reasoning first).
    """
    decoder = json.JSONDecoder()
    values: list[Any] = []
    first_candidate: int | None = None
    i = 0
    n = len(raw)
    while i < n:
        if raw[i] in "{[":
            if first_candidate is None:
                first_candidate = i
            try:
                value, end = decoder.raw_decode(raw, i)
            except ValueError:
                i += 1
                continue
            values.append(value)
            i = end
            if not take_last:
                break
        else:
            i += 1
    if not values:
        if first_candidate is None:
            raise NoJsonFound("response contains no JSON object or array")
        raise JsonSyntaxError("response contains malformed JSON", first_candidate)
    return values[-1] if take_last else values[0]
