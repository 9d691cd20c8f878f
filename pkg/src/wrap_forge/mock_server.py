"""Deterministic in-process endpoint double for tests and demos.

Serves the same wire contracts as a real inference server:

* ``POST /v1/chat/completions`` in modes ``echo`` (completion = "PARA: " +
  the paragraph of the last user message), ``fixture`` (canned completions
  keyed by sha256 of the paragraph; unknown digest returns 404),
  ``flaky:N`` (first N calls per paragraph return HTTP 500, then echo) and
  ``slow:MS`` (echo after a delay).
* ``POST /v1/embeddings`` with deterministic vectors: ``hash`` mode derives
  a unit vector from the text digest, ``basis`` mode returns standard basis
  vectors by batch position.
* ``GET /stats`` exposes request counts and the peak number of in-flight
  requests so tests can assert client-side concurrency bounds.

The instruction line of a prompt (first line when it ends with ":") is
stripped before echoing/keying, so the paragraph round-trips unchanged.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


class _Server(ThreadingHTTPServer):
    disable_nagle_algorithm = True


def extract_paragraph(user_content: str) -> str:
    head, sep, tail = user_content.partition("\n")
    if sep and head.rstrip().endswith(":"):
        return tail
    return user_content


def hash_embedding(text: str, dim: int) -> list[float]:
    raw: list[float] = []
    counter = 0
    while len(raw) < dim:
        digest = hashlib.sha256(f"{counter}:{text}".encode("utf-8")).digest()
        raw.extend((b - 127.5) / 127.5 for b in digest)
        counter += 1
    vec = raw[:dim]
    norm = math.sqrt(sum(x * x for x in vec))
    if norm == 0:
        vec = [1.0] + [0.0] * (dim - 1)
        norm = 1.0
    return [x / norm for x in vec]


def basis_embedding(position: int, dim: int) -> list[float]:
    vec = [0.0] * dim
    vec[position % dim] = 1.0
    return vec


class MockEndpoint:
    """Owns a ThreadingHTTPServer on 127.0.0.1 and its shared counters."""

    def __init__(
        self,
        mode: str = "echo",
        port: int = 0,
        fixtures: dict[str, str] | str | Path | None = None,
        embed_dim: int = 32,
        embedding_mode: str = "hash",
    ):
        self.mode, _, arg = mode.partition(":")
        if self.mode not in ("echo", "fixture", "flaky", "slow"):
            raise ValueError(f"unknown mock mode: {mode!r}")
        self.flaky_failures = int(arg) if self.mode == "flaky" else 0
        self.slow_ms = int(arg) if self.mode == "slow" else 0
        if embedding_mode not in ("hash", "basis"):
            raise ValueError(f"unknown embedding mode: {embedding_mode!r}")
        self.embed_dim = embed_dim
        self.embedding_mode = embedding_mode
        if isinstance(fixtures, (str, Path)):
            fixtures = json.loads(Path(fixtures).read_text(encoding="utf-8"))
        self.fixtures: dict[str, str] = dict(fixtures or {})
        self._requested_port = port
        self._lock = threading.Lock()
        self._fail_counts: dict[str, int] = {}
        self.stats = {
            "requests": 0,
            "injected_failures": 0,
            "peak_in_flight": 0,
            "current_in_flight": 0,
        }
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "MockEndpoint":
        handler = _make_handler(self)
        self._server = _Server(("127.0.0.1", self._requested_port), handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def serve_forever(self) -> None:
        handler = _make_handler(self)
        self._server = _Server(("127.0.0.1", self._requested_port), handler)
        self._server.daemon_threads = True
        try:
            self._server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self._server.server_close()

    @property
    def port(self) -> int:
        assert self._server is not None, "server not started"
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self) -> "MockEndpoint":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- request semantics ---------------------------------------------------

    def completion_for(self, paragraph: str) -> tuple[int, str]:
        """Return (status, completion text) for one paragraph."""
        digest = hashlib.sha256(paragraph.encode("utf-8")).hexdigest()
        if self.mode == "flaky":
            with self._lock:
                seen = self._fail_counts.get(digest, 0)
                if seen < self.flaky_failures:
                    self._fail_counts[digest] = seen + 1
                    self.stats["injected_failures"] += 1
                    return 500, "injected failure"
        if self.mode == "slow":
            time.sleep(self.slow_ms / 1000.0)
        if self.mode == "fixture":
            if digest not in self.fixtures:
                return 404, f"no fixture for digest {digest}"
            return 200, self.fixtures[digest]
        return 200, "PARA: " + paragraph


def _make_handler(endpoint: MockEndpoint):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # keep test output clean
            pass

        def _send(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _track_enter(self) -> None:
            with endpoint._lock:
                endpoint.stats["requests"] += 1
                endpoint.stats["current_in_flight"] += 1
                endpoint.stats["peak_in_flight"] = max(
                    endpoint.stats["peak_in_flight"],
                    endpoint.stats["current_in_flight"],
                )

        def _track_exit(self) -> None:
            with endpoint._lock:
                endpoint.stats["current_in_flight"] -= 1

        def do_GET(self):
            if self.path == "/stats":
                with endpoint._lock:
                    self._send(200, dict(endpoint.stats))
            else:
                self._send(404, {"error": f"no route {self.path}"})

        def do_POST(self):
            self._track_enter()
            try:
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    req = json.loads(self.rfile.read(length) or b"{}")
                except ValueError:
                    self._send(400, {"error": "bad JSON"})
                    return
                if self.path == "/v1/chat/completions":
                    self._chat(req)
                elif self.path == "/v1/embeddings":
                    self._embed(req)
                else:
                    self._send(404, {"error": f"no route {self.path}"})
            finally:
                self._track_exit()

        def _chat(self, req: dict) -> None:
            messages = req.get("messages") or []
            user = [m for m in messages if m.get("role") == "user"]
            if not user:
                self._send(400, {"error": "no user message"})
                return
            paragraph = extract_paragraph(str(user[-1].get("content", "")))
            status, text = endpoint.completion_for(paragraph)
            if status != 200:
                self._send(status, {"error": text})
                return
            prompt_tokens = sum(len(str(m.get("content", "")).split()) for m in messages)
            completion_tokens = len(text.split())
            self._send(
                200,
                {
                    "id": "mock-chat",
                    "object": "chat.completion",
                    "model": req.get("model", "mock-model"),
                    "choices": [
                        {
                            "index": 0,
                            "message": {"role": "assistant", "content": text},
                            "finish_reason": "stop",
                        }
                    ],
                    "usage": {
                        "prompt_tokens": prompt_tokens,
                        "completion_tokens": completion_tokens,
                        "total_tokens": prompt_tokens + completion_tokens,
                    },
                },
            )

        def _embed(self, req: dict) -> None:
            inputs = req.get("input")
            if isinstance(inputs, str):
                inputs = [inputs]
            if not isinstance(inputs, list):
                self._send(400, {"error": "input must be a string or list"})
                return
            data = []
            for i, text in enumerate(inputs):
                if endpoint.embedding_mode == "basis":
                    vec = basis_embedding(i, endpoint.embed_dim)
                else:
                    vec = hash_embedding(str(text), endpoint.embed_dim)
                data.append({"index": i, "object": "embedding", "embedding": vec})
            self._send(
                200,
                {
                    "object": "list",
                    "model": req.get("model", "mock-embed"),
                    "data": data,
                    "usage": {"prompt_tokens": 0, "total_tokens": 0},
                },
            )

    return Handler
