"""Backend configs, the HTTP client behavior, and the stub backend."""

import hashlib
import json

import httpx
import pytest

from peergauge.backends import (
    AuthError,
    BackendConfig,
    BackendRefusal,
    HttpBackend,
    RetryPolicy,
    StubBackend,
    TransportError,
    load_backend_config,
    make_backend,
    prompt_fingerprint,
    submit_completion,
)


def _http_config(**overrides) -> BackendConfig:
    base = dict(kind="http", base_url="https://backend.test/v1/complete",
                model_name="scorer-v1",
                retry_policy=RetryPolicy(max_attempts=3, backoff_seconds=0.0))
    base.update(overrides)
    return BackendConfig(**base)


def _backend(handler, **overrides) -> HttpBackend:
    return HttpBackend(_http_config(**overrides), transport=httpx.MockTransport(handler))


# --- configuration -----------------------------------------------------------


def test_retry_policy_validation():
    with pytest.raises(ValueError):
        RetryPolicy(max_attempts=0)
    with pytest.raises(ValueError):
        RetryPolicy(backoff_seconds=-1)


@pytest.mark.parametrize("overrides", [
    {"kind": "grpc"},
    {"request_style": "chat"},
    {"base_url": ""},
    {"max_concurrency": 0},
    {"max_output_tokens": 0},
])
def test_backend_config_validation(overrides):
    with pytest.raises(ValueError):
        _http_config(**overrides)


def test_load_backend_config(tmp_path):
    path = tmp_path / "backend.json"
    path.write_text(json.dumps({
        "kind": "http",
        "base_url": "https://backend.test/complete",
        "model_name": "scorer-v1",
        "auth_token_env": "SCORER_TOKEN",
        "temperature": 0.2,
        "retry": {"max_attempts": 5, "backoff_seconds": 0.1},
    }), encoding="utf-8")
    config = load_backend_config(path)
    assert config.model_name == "scorer-v1"
    assert config.retry_policy == RetryPolicy(max_attempts=5, backoff_seconds=0.1)
    assert config.auth_token_env == "SCORER_TOKEN"


def test_load_backend_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "backend.json"
    path.write_text('{"kind": "stub", "api_key": "inline-secret"}', encoding="utf-8")
    with pytest.raises(ValueError) as err:
        load_backend_config(path)
    assert "api_key" in str(err.value)


def test_load_backend_config_missing_or_broken_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_backend_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[]", encoding="utf-8")
    with pytest.raises(ValueError):
        load_backend_config(bad)


def test_load_backend_config_resolves_fixtures_beside_the_file(tmp_path):
    fixtures = tmp_path / "responses.json"
    fixtures.write_text('{"responses": {}, "default": "ok"}', encoding="utf-8")
    path = tmp_path / "backend.json"
    path.write_text('{"kind": "stub", "fixtures_path": "responses.json"}',
                    encoding="utf-8")
    config = load_backend_config(path)
    assert config.fixtures_path == str(fixtures.resolve())
    assert StubBackend(config).complete("anything") == "ok"


def test_prompt_fingerprint_is_sha256():
    assert prompt_fingerprint("abc") == hashlib.sha256(b"abc").hexdigest()


# --- HTTP behavior ------------------------------------------------------------


def test_http_backend_posts_prompt_body_and_reads_text_path():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["url"] = str(request.url)
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"text": "scored"})

    backend = _backend(handler, temperature=0.25, max_output_tokens=64)
    assert backend.complete("rate this") == "scored"
    assert seen["url"] == "https://backend.test/v1/complete"
    assert seen["body"] == {
        "model_name": "scorer-v1",
        "temperature": 0.25,
        "max_output_tokens": 64,
        "prompt": "rate this",
    }
    backend.close()


def test_http_backend_messages_style_and_nested_response_path():
    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        assert body["messages"] == [{"role": "user", "content": "hi"}]
        assert "prompt" not in body
        return httpx.Response(200, json={
            "choices": [{"message": {"content": "nested answer"}}]
        })

    backend = _backend(handler, request_style="messages",
                       response_text_path="choices.0.message.content")
    assert backend.complete("hi") == "nested answer"


def test_http_backend_reads_token_from_named_env_var(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        assert request.headers["Authorization"] == "Bearer sekrit"
        return httpx.Response(200, json={"text": "ok"})

    backend = _backend(handler, auth_token_env="PG_TEST_TOKEN")
    monkeypatch.setenv("PG_TEST_TOKEN", "sekrit")
    assert backend.complete("p") == "ok"

    monkeypatch.delenv("PG_TEST_TOKEN")
    with pytest.raises(AuthError) as err:
        backend.complete("p")
    assert "PG_TEST_TOKEN" in str(err.value)


@pytest.mark.parametrize("status", [401, 403])
def test_http_backend_maps_credential_rejections(status):
    backend = _backend(lambda request: httpx.Response(status, text="denied"))
    with pytest.raises(AuthError):
        backend.complete("p")


def test_http_backend_keeps_refusal_status_and_body():
    backend = _backend(lambda request: httpx.Response(429, text="slow down"))
    with pytest.raises(BackendRefusal) as err:
        backend.complete("p")
    assert err.value.status == 429
    assert err.value.body == "slow down"


def test_http_backend_retries_transport_failures_then_succeeds():
    attempts = []

    def handler(request: httpx.Request) -> httpx.Response:
        attempts.append(1)
        if len(attempts) < 3:
            raise httpx.ConnectError("connection refused", request=request)
        return httpx.Response(200, json={"text": "finally"})

    assert _backend(handler).complete("p") == "finally"
    assert len(attempts) == 3


def test_http_backend_gives_up_after_max_attempts():
    attempts = []

    def handler(request: httpx.Request) -> httpx.Response:
        attempts.append(1)
        raise httpx.ConnectError("connection refused", request=request)

    with pytest.raises(TransportError) as err:
        _backend(handler).complete("p")
    assert len(attempts) == 3
    assert "3 attempts" in str(err.value)


def test_http_backend_does_not_retry_http_statuses():
    attempts = []

    def handler(request: httpx.Request) -> httpx.Response:
        attempts.append(1)
        return httpx.Response(500, text="boom")

    with pytest.raises(BackendRefusal):
        _backend(handler).complete("p")
    assert len(attempts) == 1


@pytest.mark.parametrize("response, fragment", [
    (httpx.Response(200, text="plain text"), "not JSON"),
    (httpx.Response(200, json={"wrong": "shape"}), "lacks text"),
    (httpx.Response(200, json={"text": 42}), "expected string"),
])
def test_http_backend_rejects_undecodable_responses(response, fragment):
    backend = _backend(lambda request: response)
    with pytest.raises(TransportError) as err:
        backend.complete("p")
    assert fragment in str(err.value)


def test_http_backend_requires_http_kind():
    with pytest.raises(ValueError):
        HttpBackend(BackendConfig(kind="stub"))


# --- stub backend ---------------------------------------------------------------


def test_stub_backend_serves_registered_prompts_and_logs_calls():
    stub = StubBackend()
    stub.register("score me", '{"helpfulness_label": "4"}')
    assert stub.complete("score me") == '{"helpfulness_label": "4"}'
    with pytest.raises(TransportError):
        stub.complete("unknown prompt")
    assert stub.calls == ["score me", "unknown prompt"]


def test_stub_backend_falls_back_to_default():
    stub = StubBackend(default="fallback")
    assert stub.complete("anything") == "fallback"
    stub = StubBackend(BackendConfig(kind="stub", default_response="cfg default"))
    assert stub.complete("anything") == "cfg default"


def test_stub_backend_loads_fixture_table(tmp_path):
    fixtures = tmp_path / "responses.json"
    fixtures.write_text(json.dumps({
        "responses": {prompt_fingerprint("known"): "canned"},
        "default": "dflt",
    }), encoding="utf-8")
    stub = StubBackend(BackendConfig(kind="stub", fixtures_path=str(fixtures)))
    assert stub.complete("known") == "canned"
    assert stub.complete("unknown") == "dflt"


def test_stub_backend_rejects_malformed_fixtures(tmp_path):
    fixtures = tmp_path / "responses.json"
    fixtures.write_text('{"responses": ["not", "a", "table"]}', encoding="utf-8")
    with pytest.raises(ValueError):
        StubBackend(BackendConfig(kind="stub", fixtures_path=str(fixtures)))


def test_make_backend_dispatches_on_kind():
    assert isinstance(make_backend(BackendConfig(kind="stub")), StubBackend)
    assert isinstance(make_backend(_http_config()), HttpBackend)


def test_submit_completion_accepts_bundles_and_configs():
    stub = StubBackend(default="answer")
    assert submit_completion(stub, "raw prompt") == "answer"

    class BundleLike:
        rendered_text = "rendered"

    assert submit_completion(stub, BundleLike()) == "answer"
    assert stub.calls == ["raw prompt", "rendered"]

    assert submit_completion(
        BackendConfig(kind="stub", default_response="via config"), "p"
    ) == "via config"
    with pytest.raises(TypeError):
        submit_completion(stub, 42)
