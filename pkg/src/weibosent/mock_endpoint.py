"""Scripted chat-completion server for tests and offline demos.

Run ``python -m weibosent.mock_endpoint --script labels.ndjson`` to serve
replies from a ``{"post": ..., "label": ...}`` file; unknown posts get
``--default``.
"""

from __future__ import annotations

import argparse
import json
import threading
import time
from collections.abc import Callable
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

Responder = Callable[[str], "str | int"]


class MockEndpoint:
    """In-process HTTP server speaking the chat-completion schema.

    ``responder`` receives the user post (last message content) and returns
    either reply text or an int HTTP status to fail with. ``failures`` is a
    list of statuses served, in order, before the responder is consulted.
    The server tracks concurrent requests so callers can assert the peak.
    """

    def __init__(
        self,
        responder: Responder,
        failures: list[int] | None = None,
        delay: float = 0.0,
        model: str = "mock-model",
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.responder = responder
        self.failures = list(failures or [])
        self.delay = delay
        self.model = model
        self.requests = 0
        self.in_flight = 0
        self.peak_in_flight = 0
        self.bodies: list[dict] = []
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer((host, port), self._handler())
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1"

    def _handler(self):
        mock = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def _send(self, status: int, payload: dict) -> None:
                data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                try:
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (timeout tests)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with mock._lock:
                    mock.requests += 1
                    mock.in_flight += 1
                    mock.peak_in_flight = max(mock.peak_in_flight, mock.in_flight)
                    mock.bodies.append(body)
                    forced = mock.failures.pop(0) if mock.failures else None
                try:
                    if mock.delay:
                        time.sleep(mock.delay)
                    if not self.path.endswith("/chat/completions"):
                        self._send(404, {"error": "not found"})
                        return
                    if forced is not None:
                        self._send(forced, {"error": f"scripted {forced}"})
                        return
                    post = body["messages"][-1]["content"]
                    reply = mock.responder(post)
                    if isinstance(reply, int):
                        self._send(reply, {"error": f"scripted {reply}"})
                        return
                    self._send(
                        200,
                        {
                            "model": mock.model,
                            "choices": [{"index": 0, "message": {"role": "assistant", "content": reply}}],
                        },
                    )
                finally:
                    with mock._lock:
                        mock.in_flight -= 1

        return Handler

    def start(self) -> MockEndpoint:
        self._thread = threading.Thread(target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> MockEndpoint:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def scripted(labels: dict[str, str], default: str = "neutral") -> Responder:
    """Responder answering from a post→reply table."""

    def respond(post: str) -> str:
        return labels.get(post, default)

    return respond


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--script", help="NDJSON file of {post, label} replies")
    parser.add_argument("--default", default="neutral")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8099)
    args = parser.parse_args(argv)
    table: dict[str, str] = {}
    if args.script:
        with open(args.script, encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    row = json.loads(line)
                    table[row["post"]] = row["label"]
    mock = MockEndpoint(scripted(table, args.default), host=args.host, port=args.port)
    print(f"serving on {mock.base_url}", flush=True)
    try:
        mock._server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
