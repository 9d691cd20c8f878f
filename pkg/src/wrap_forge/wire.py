"""HTTP plumbing for chat-completion and embedding endpoints.

One request shape, shared by the rephrase client and the embedding metrics:
POST ``<base_url>/v1/chat/completions`` and ``<base_url>/v1/embeddings``.
Transport errors and HTTP 5xx retry with exponential backoff; 4xx never
retries. A bearer token is read from the environment when present.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from typing import Callable

import requests

DEFAULT_API_KEY_ENV = "WRAP_FORGE_API_KEY"

_local = threading.local()


def _session() -> requests.Session:
    # one keep-alive session per thread; sessions are not thread-safe
    if not hasattr(_local, "session"):
        _local.session = requests.Session()
    return _local.session


class EndpointError(RuntimeError):
    """A failed endpoint call. ``retryable`` drives the retry loop."""

    def __init__(self, message: str, status: int | None = None, retryable: bool = False):
        super().__init__(message)
        self.status = status
        self.retryable = retryable


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_id: str = "mock-model"
    max_new_tokens: int = 512
    temperature: float = 0.7
    timeout: float = 30.0
    max_in_flight: int = 8
    max_retries: int = 3
    retry_backoff: float = 0.5
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self) -> None:
        if not self.base_url.startswith(("http://", "https://")):
            raise ValueError(f"base_url must be http(s): {self.base_url!r}")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def _headers(cfg: EndpointConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(cfg.api_key_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def _post_once(cfg: EndpointConfig, route: str, payload: dict) -> dict:
    url = cfg.base_url.rstrip("/") + route
    try:
        resp = _session().post(url, json=payload, headers=_headers(cfg), timeout=cfg.timeout)
    except requests.RequestException as exc:
        raise EndpointError(f"transport error: {exc}", retryable=True) from exc
    if 500 <= resp.status_code < 600:
        raise EndpointError(
            f"server error {resp.status_code} from {route}",
            status=resp.status_code,
            retryable=True,
        )
    if resp.status_code != 200:
        raise EndpointError(
            f"HTTP {resp.status_code} from {route}: {resp.text[:200]}",
            status=resp.status_code,
            retryable=False,
        )
    try:
        return resp.json()
    except ValueError as exc:
        raise EndpointError(f"non-JSON response from {route}", retryable=True) from exc


def post_with_retries(
    cfg: EndpointConfig,
    route: str,
    payload: dict,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    attempt = 0
    while True:
        try:
            return _post_once(cfg, route, payload)
        except EndpointError as exc:
            if not exc.retryable or attempt >= cfg.max_retries:
                raise
            sleep(cfg.retry_backoff * (2**attempt))
            attempt += 1


def chat_completion(
    cfg: EndpointConfig,
    messages: list[dict[str, str]],
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[str, dict]:
    """Return (completion text, usage dict). Empty completions are errors."""
    payload = {
        "model": cfg.model_id,
        "messages": messages,
        "max_tokens": cfg.max_new_tokens,
        "temperature": cfg.temperature,
    }
    body = post_with_retries(cfg, "/v1/chat/completions", payload, sleep=sleep)
    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise EndpointError(f"malformed completion response: {exc}") from exc
    if not isinstance(text, str) or not text.strip():
        raise EndpointError("empty generation")
    usage = body.get("usage") or {}
    return text, usage if isinstance(usage, dict) else {}


def embeddings(
    cfg: EndpointConfig,
    texts: list[str],
    sleep: Callable[[float], None] = time.sleep,
) -> list[list[float]]:
    """Fetch one embedding per text, order preserved."""
    if not texts:
        return []
    payload = {"model": cfg.model_id, "input": list(texts)}
    body = post_with_retries(cfg, "/v1/embeddings", payload, sleep=sleep)
    try:
        data = body["data"]
        rows = sorted(data, key=lambda r: r.get("index", 0))
        vectors = [list(map(float, r["embedding"])) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise EndpointError(f"malformed embedding response: {exc}") from exc
    if len(vectors) != len(texts):
        raise EndpointError(
            f"embedding count mismatch: sent {len(texts)}, got {len(vectors)}"
        )
    return vectors
