"""Scriptable chat-completion server for offline integration tests.

The script maps request count (optionally per model) to canned completions
and failure injections:

    {
      "responses": [
        {"status": 500},
        {"content": "{\\"bid\\": 50.0, ...}", "delay_ms": 10},
        ...
      ],
      "default": {"content": "..."},
      "by_model": {"model-a": {"responses": [...], "default": {...}}}
    }

Entries are consumed in arrival order; when the sequence runs out the
default entry answers every further request.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional


class _ScriptState:
    def __init__(self, script: dict):
        self.script = script
        self.lock = threading.Lock()
        self.counts: dict[str, int] = {}
        self.total = 0

    def next_entry(self, model: str) -> dict:
        with self.lock:
            self.total += 1
            by_model = self.script.get("by_model", {})
            if model in by_model:
                block = by_model[model]
                key = model
            else:
                block = self.script
                key = ""
            index = self.counts.get(key, 0)
            self.counts[key] = index + 1
        responses = block.get("responses", [])
        if index < len(responses):
            return responses[index]
        return block.get("default", self.script.get("default", {"content": "{}"}))


class _Handler(BaseHTTPRequestHandler):
    state: _ScriptState

    def log_message(self, *args) -> None:  # keep test output quiet
        pass

    def do_POST(self) -> None:
        length = int(self.headers.get("Content-Length", "0"))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            body = {}
        model = body.get("model", "")
        entry = self.state.next_entry(model)
        delay = entry.get("delay_ms", 0)
        if delay:
            time.sleep(delay / 1000.0)
        status = entry.get("status", 200)
        if status != 200:
            payload = json.dumps({"error": {"message": f"injected status {status}"}})
            self._reply(status, payload)
            return
        if "body" in entry:
            self._reply(200, json.dumps(entry["body"]))
            return
        completion = {
            "id": f"mock-{self.state.total}",
            "object": "chat.completion",
            "model": model,
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": entry.get("content", "{}")},
                    "finish_reason": "stop",
                }
            ],
        }
        self._reply(200, json.dumps(completion))

    def _reply(self, status: int, payload: str) -> None:
        data = payload.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class MockChatServer:
    """A mock provider bound to localhost; port 0 picks a free port."""

    def __init__(self, port: int, script: dict, host: str = "127.0.0.1"):
        self.state = _ScriptState(script)
        handler = type("BoundHandler", (_Handler,), {"state": self.state})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._server.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    @property
    def request_count(self) -> int:
        return self.state.total

    def start(self) -> "MockChatServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "MockChatServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def load_script(path: Path | str) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def mock_serve(port: int, script: dict | Path | str) -> MockChatServer:
    """Start a scripted server in a background thread and return it."""
    if not isinstance(script, dict):
        script = load_script(script)
    return MockChatServer(port, script).start()
