"""Completion backends: a real HTTP client and a deterministic stub.

A backend is anything with a ``complete(prompt) -> str`` method. The HTTP
backend posts a JSON body to a completion endpoint and pulls the generated
text out of the response at a configurable path. The stub backend answers
from a fixture table keyed by the sha256 of the prompt, which makes scoring
runs reproducible byte for byte in tests and demos.

Credentials are never part of the config file; the config names an
environment variable and the token is read from there at request time.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Protocol

import httpx

from .model import PeerGaugeError

__all__ = [
    "AuthError",
    "Backend",
    "BackendConfig",
    "BackendRefusal",
    "HttpBackend",
    "RetryPolicy",
    "StubBackend",
    "TransportError",
    "load_backend_config",
    "make_backend",
    "prompt_fingerprint",
    "submit_completion",
]


class TransportError(PeerGaugeError):
    """The backend could not be reached, even after retries."""


class AuthError(PeerGaugeError):
    """Credentials are missing or the endpoint rejected them."""


class BackendRefusal(PeerGaugeError):
    """The endpoint answered with a non-2xx status; body preserved."""

    def __init__(self, message: str, status: int, body: str):
        super().__init__(message)
        self.status = status
        self.body = body


@dataclass(frozen=True)
class RetryPolicy:
    """How often to retry transient transport failures, and how patiently."""

    max_attempts: int = 3
    backoff_seconds: float = 0.5

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.backoff_seconds < 0:
            raise ValueError("backoff_seconds must not be negative")


@dataclass(frozen=True)
class BackendConfig:
    """Connection and decoding settings for one completion backend."""

    kind: str = "http"
    base_url: str = ""
    model_name: str = ""
    auth_token_env: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024
    max_concurrency: int = 4
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)
    request_style: str = "prompt"
    response_text_path: str = "text"
    timeout_seconds: float = 60.0
    fixtures_path: str = ""
    default_response: str | None = None

    def __post_init__(self):
        if self.kind not in ("http", "stub"):
            raise ValueError(f'backend kind must be "http" or "stub", got {self.kind!r}')
        if self.request_style not in ("prompt", "messages"):
            raise ValueError(
                f'request_style must be "prompt" or "messages", got {self.request_style!r}'
            )
        if self.kind == "http" and not self.base_url:
            raise ValueError("http backend needs a base_url")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be at least 1")


def load_backend_config(path: str | Path) -> BackendConfig:
    """Read a backend config from a JSON file.

    A relative stub fixtures path is resolved against the config file's own
    directory, so configs can travel with their fixtures.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"backend config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: backend config must be a JSON object")
    retry = obj.pop("retry", None)
    known = {f.name for f in BackendConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"{path}: unknown backend config keys: {sorted(unknown)}")
    config = BackendConfig(**obj)
    if retry is not None:
        config = replace(config, retry_policy=RetryPolicy(**retry))
    if config.fixtures_path and not Path(config.fixtures_path).is_absolute():
        config = replace(
            config, fixtures_path=str((path.parent / config.fixtures_path).resolve())
        )
    return config


def prompt_fingerprint(prompt: str) -> str:
    """Stable key for a prompt: sha256 over its UTF-8 bytes, hex encoded."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Backend(Protocol):
    """Anything that can turn a prompt into completion text."""

    config: BackendConfig

    def complete(self, prompt: str) -> str: ...


def _walk_path(payload: Any, dotted: str) -> Any:
    value = payload
    for segment in dotted.split("."):
        if isinstance(value, list):
            try:
                value = value[int(segment)]
                continue
            except (ValueError, IndexError):
                raise KeyError(segment) from None
        if not isinstance(value, Mapping) or segment not in value:
            raise KeyError(segment)
        value = value[segment]
    return value


class HttpBackend:
    """POSTs completion requests to an HTTP endpoint, with retries.

    Only transport-level failures (timeouts, broken connections) are retried;
    an HTTP status is an answer, not a transient fault. 401 and 403 map to
    AuthError, every other non-2xx to BackendRefusal with the body kept for
    diagnosis. Safe to share across threads.
    """

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        if config.kind != "http":
            raise ValueError(f"HttpBackend needs an http config, got kind={config.kind!r}")
        self.config = config
        self._client = httpx.Client(
            transport=transport, timeout=config.timeout_seconds
        )

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token_env:
            token = os.environ.get(self.config.auth_token_env, "")
            if not token:
                raise AuthError(
                    f"environment variable {self.config.auth_token_env} is not set; "
                    "it must hold the backend token"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _body(self, prompt: str) -> dict:
        body: dict[str, Any] = {
            "model_name": self.config.model_name,
            "temperature": self.config.temperature,
            "max_output_tokens": self.config.max_output_tokens,
        }
        if self.config.request_style == "messages":
            body["messages"] = [{"role": "user", "content": prompt}]
        else:
            body["prompt"] = prompt
        return body

    def complete(self, prompt: str) -> str:
        headers = self._headers()
        body = self._body(prompt)
        policy = self.config.retry_policy
        last_error: Exception | None = None
        for attempt in range(1, policy.max_attempts + 1):
            try:
                response = self._client.post(
                    self.config.base_url, json=body, headers=headers
                )
            except httpx.TransportError as exc:
                last_error = exc
                if attempt < policy.max_attempts:
                    time.sleep(policy.backoff_seconds * 2 ** (attempt - 1))
                continue
            return self._decode(response)
        raise TransportError(
            f"backend unreachable after {policy.max_attempts} attempts: {last_error}"
        )

    def _decode(self, response: httpx.Response) -> str:
        if response.status_code in (401, 403):
            raise AuthError(
                f"backend rejected credentials (HTTP {response.status_code}): "
                f"{response.text[:500]}"
            )
        if not 200 <= response.status_code < 300:
            raise BackendRefusal(
                f"backend refused the request (HTTP {response.status_code})",
                status=response.status_code,
                body=response.text,
            )
        try:
            payload = response.json()
        except ValueError:
            raise TransportError("backend response is not JSON") from None
        try:
            text = _walk_path(payload, self.config.response_text_path)
        except KeyError:
            raise TransportError(
                f"backend response lacks text at path "
                f"{self.config.response_text_path!r}"
            ) from None
        if not isinstance(text, str):
            raise TransportError(
                f"backend response at {self.config.response_text_path!r} "
                f"is {type(text).__name__}, expected string"
            )
        return text

    def close(self) -> None:
        self._client.close()


class StubBackend:
    """Deterministic backend answering from prompt-hash keyed fixtures.

    The fixture file is JSON: ``{"responses": {<sha256 hex>: <text>}, "default":
    <text>}``. A prompt whose hash has no entry falls back to the default; with
    no default it raises TransportError, which batch scoring turns into a
    Failed item. Every served prompt is appended to ``calls`` so tests can
    assert exact call counts.
    """

    def __init__(
        self,
        config: BackendConfig | None = None,
        responses: Mapping[str, str] | None = None,
        default: str | None = None,
    ):
        self.config = config or BackendConfig(kind="stub")
        table: dict[str, str] = dict(responses or {})
        if self.config.fixtures_path:
            loaded = json.loads(Path(self.config.fixtures_path).read_text(encoding="utf-8"))
            if not isinstance(loaded, dict) or not isinstance(loaded.get("responses", {}), dict):
                raise ValueError(
                    f"{self.config.fixtures_path}: stub fixtures must be a JSON object "
                    'with a "responses" table'
                )
            table.update(loaded.get("responses", {}))
            if default is None:
                default = loaded.get("default")
        if default is None:
            default = self.config.default_response
        self._responses = table
        self._default = default
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def register(self, prompt: str, response: str) -> None:
        """Pin the response for one exact prompt."""
        self._responses[prompt_fingerprint(prompt)] = response

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls.append(prompt)
        response = self._responses.get(prompt_fingerprint(prompt), self._default)
        if response is None:
            raise TransportError(
                f"stub has no fixture for prompt hash {prompt_fingerprint(prompt)[:12]} "
                "and no default response"
            )
        return response


def make_backend(config: BackendConfig) -> Backend:
    """Build the backend an on-disk config describes."""
    if config.kind == "stub":
        return StubBackend(config)
    return HttpBackend(config)


def submit_completion(backend: Backend | BackendConfig, prompt: Any) -> str:
    """Run one completion; accepts a backend or a config, bundle or raw text."""
    if isinstance(backend, BackendConfig):
        backend = make_backend(backend)
    text = getattr(prompt, "rendered_text", prompt)
    if not isinstance(text, str):
        raise TypeError(f"prompt must be a PromptBundle or string, got {type(prompt).__name__}")
    return backend.complete(text)
