"""In-repo mock servers for the two external services.

MockModelServer implements the model wire contract (POST /generate) with
template reports, a configurable response delay, and deterministic fault
injection. MockLabelerServer implements the labeler contract (POST
/label) backed by the rule-based labeler or a fixed canned vector.

Both bind an ephemeral port and run on a daemon thread; use them as
context managers in tests.
"""

from __future__ import annotations

import json
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .labeler import Lexicon, label_report, load_lexicon
from .orchestrator.modelclient import render_template_report
from .taxonomy import DEFAULT_TAXONOMY, LabelVector

__all__ = ["MockModelServer", "MockLabelerServer"]


class _QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address) -> None:
        # clients that time out hang up mid-response; that is expected
        # in tests, so do not spam stderr for it
        exc = sys.exc_info()[1]
        if isinstance(exc, (BrokenPipeError, ConnectionResetError)):
            return
        super().handle_error(request, client_address)


class _MockServer:
    """Shared lifecycle: ephemeral port, daemon thread, request counter."""

    def __init__(self, latency_s: float = 0.0, fail_every: Optional[int] = None):
        if fail_every is not None and fail_every < 1:
            raise ValueError("fail_every must be >= 1")
        self.latency_s = latency_s
        self.fail_every = fail_every
        self._count = 0
        self._count_lock = threading.Lock()
        handler = self._make_handler()
        self._server = _QuietServer(("127.0.0.1", 0), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _next_request_index(self) -> int:
        with self._count_lock:
            self._count += 1
            return self._count

    def _should_fail(self, index: int) -> bool:
        return self.fail_every is not None and index % self.fail_every == 0

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def start(self) -> "_MockServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "_MockServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

    def _make_handler(self):  # pragma: no cover - overridden
        raise NotImplementedError


def _json_handler(path: str, compute):
    """Build a BaseHTTPRequestHandler serving one JSON POST route."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self) -> None:
            if self.path != path:
                self.send_error(404, "unknown route")
                return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                body = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError:
                self.send_error(400, "invalid JSON")
                return
            status, payload = compute(body)
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, fmt, *args) -> None:
            pass  # keep test output quiet

    return Handler


class MockModelServer(_MockServer):
    """Mock report-generation model: POST /generate."""

    def _make_handler(self):
        server = self

        def compute(body: dict) -> tuple[int, dict]:
            index = server._next_request_index()
            if server.latency_s > 0:
                time.sleep(server.latency_s)
            if server._should_fail(index):
                return 500, {"error": "injected fault"}
            case_id = str(body.get("case_id", ""))
            image_refs = body.get("image_refs") or []
            history = str(body.get("history_note", ""))
            return 200, render_template_report(case_id, image_refs, history)

        return _json_handler("/generate", compute)


class MockLabelerServer(_MockServer):
    """Mock LLM labeler: POST /label.

    By default it answers with the in-package rule labeler; supply
    ``fixed_labels`` to echo one canned vector, or ``truncate_labels`` to
    emit schema-violating short responses for contract tests.
    """

    def __init__(self, latency_s: float = 0.0, fail_every: Optional[int] = None,
                 fixed_labels: Optional[LabelVector] = None,
                 truncate_labels: bool = False,
                 lexicon: Optional[Lexicon] = None):
        self.fixed_labels = fixed_labels
        self.truncate_labels = truncate_labels
        self.lexicon = lexicon if lexicon is not None else load_lexicon()
        super().__init__(latency_s=latency_s, fail_every=fail_every)

    def _make_handler(self):
        server = self

        def compute(body: dict) -> tuple[int, dict]:
            index = server._next_request_index()
            if server.latency_s > 0:
                time.sleep(server.latency_s)
            if server._should_fail(index):
                return 500, {"error": "injected fault"}
            report_id = str(body.get("report_id", ""))
            text = str(body.get("text", ""))
            if server.fixed_labels is not None:
                labels = server.fixed_labels.as_strings()
            else:
                labels = label_report(text, server.lexicon).as_strings()
            if server.truncate_labels:
                drop = next(iter(labels))
                labels = {k: v for k, v in labels.items() if k != drop}
            return 200, {"report_id": report_id, "labels": labels}

        return _json_handler("/label", compute)
