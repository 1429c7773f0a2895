"""Shared test utilities: a subprocess execution oracle and a
configurable local HTTP server for exercising the remote clients."""

from __future__ import annotations

import json
import subprocess
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def run_program(code: str, timeout: float = 20.0) -> tuple[int, str]:
    """Execute a program in a fresh interpreter; (exit status, stdout)."""
    proc = subprocess.run(
        [sys.executable, "-I", "-c", code],
        capture_output=True,
        text=True,
        timeout=timeout,
    )
    return proc.returncode, proc.stdout


def is_line_subsequence(needle: str, haystack: str) -> bool:
    """True if every line of ``needle`` appears in ``haystack`` in order
    (extra lines in ``haystack`` are allowed)."""
    it = iter(haystack.split("\n"))
    return all(line in it for line in needle.split("\n"))


class _Handler(BaseHTTPRequestHandler):
    server_version = "TestVictim/0"

    def log_message(self, *args):  # keep pytest output clean
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append((self.path, body, dict(self.headers)))
        route = self.server.routes.get(self.path)
        if route is None:
            self.send_response(404)
            self.end_headers()
            return
        status, payload = route(body)
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class LocalServer:
    """An in-process HTTP server with per-path handlers.

    Handlers take the request body and return (status, payload).
    """

    def __init__(self, routes: dict):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self.server.routes = routes
        self.server.requests = []
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.server.requests

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def flaky(fail_times: int, payload: dict, status_after: int = 200):
    """A route that fails with HTTP 500 ``fail_times`` times, then succeeds."""
    state = {"left": fail_times}

    def route(_body):
        if state["left"] > 0:
            state["left"] -= 1
            return 500, {"error": "transient"}
        return status_after, payload

    return route
