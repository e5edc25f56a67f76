"""HTTP front for the store: JSON bodies, optimistic writes via If-Match.

Endpoints:

    GET  /workspaces                      index of all workspaces under the root
    GET  /workspaces/{path}               canonical document (ETag: revision)
    PUT  /workspaces/{path}               create (no If-Match) or replace (If-Match)
    POST /workspaces/{path}/commands      {"commands": [...]} mutation batch
    POST /workspaces/{path}/run           {"inputs": {...}, "maxTicks": n}
    GET  /runs/{id}/trace                 execution trace of a finished run
    POST /workspaces/{path}/generate      template set in, artifacts out
    GET  /workspaces/{path}/search?q=     node ids matching the query
    POST /animations/compile              animation script in, timeline out
    GET|PUT /session, POST /session/navigate
    GET  /dsls, GET /dsls/{uri}           registered DSL definitions (read-only)
    GET  /                                UI assets when serving a ui directory
"""

from __future__ import annotations

import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Optional
from urllib.parse import parse_qs, unquote, urlparse

from .animator import compile_timeline, script_from_plain, timeline_to_plain
from .canon import canon_bytes, loads_strict
from .codegen import generate, templateset_from_plain
from .dataflow import serialize_trace
from .dsl import definition_to_plain
from .errors import (
    CommandFailed,
    InvariantViolation,
    KernelError,
    MalformedDocument,
    NotFound,
    QuerySyntaxError,
    RevisionConflict,
    UndelayedCycle,
    UnresolvedDsl,
    ValidationFailed,
)
from .model import workspace_from_plain
from .search import evaluate, parse_query
from .store import WorkspaceStore

_STATUS_BY_CODE = {
    "NotFound": 404,
    "RevisionConflict": 409,
    "MalformedDocument": 400,
    "SyntaxError": 400,
    "PathEscape": 400,
}

_RESERVED_TAILS = ("commands", "run", "generate", "search")


def _error_body(exc: KernelError) -> dict:
    body: dict[str, Any] = {"error": exc.code, "message": exc.message}
    if isinstance(exc, RevisionConflict):
        body["expectedRevision"] = exc.expected
        body["actualRevision"] = exc.actual
    if isinstance(exc, CommandFailed):
        body["index"] = exc.index
        body["cause"] = {"error": exc.cause.code, "message": exc.cause.message}
    if isinstance(exc, InvariantViolation):
        body["rule"] = exc.rule
        body["elementId"] = exc.element_id
    if isinstance(exc, ValidationFailed):
        body["violations"] = [
            {"rule": v.rule, "elementId": v.element_id, "message": v.message}
            for v in exc.violations
        ]
    if isinstance(exc, UndelayedCycle):
        body["nodeIds"] = exc.node_ids
    if isinstance(exc, QuerySyntaxError):
        body["offset"] = exc.offset
        body["expected"] = exc.expected
    return body


class KernelRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "hgos"

    # set by make_server
    store: WorkspaceStore
    ui_dir: Optional[Path] = None

    def log_message(self, fmt, *args):  # quiet by default; tests assert responses
        pass

    # --- plumbing -----------------------------------------------------------

    def _send_json(self, status: int, obj: Any) -> None:
        data = canon_bytes(obj)
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send_bytes(self, status: int, data: bytes, content_type: str, etag: Optional[str] = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        if etag is not None:
            self.send_header("ETag", etag)
        self.end_headers()
        self.wfile.write(data)

    def _read_body(self) -> Any:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return None
        try:
            return loads_strict(raw)
        except ValueError as exc:
            raise MalformedDocument(f"request body is not valid JSON: {exc}") from exc

    def _if_match(self) -> Optional[int]:
        header = self.headers.get("If-Match")
        if header is None:
            return None
        header = header.strip().strip('"')
        try:
            return int(header)
        except ValueError as exc:
            raise MalformedDocument("If-Match must carry a revision integer") from exc

    def _dispatch(self, method: str) -> None:
        try:
            parsed = urlparse(self.path)
            segments = [unquote(s) for s in parsed.path.split("/") if s != ""]
            self._route(method, segments, parse_qs(parsed.query))
        except KernelError as exc:
            self._send_json(_STATUS_BY_CODE.get(exc.code, 422), _error_body(exc))
        except Exception as exc:  # never leak a stack trace as a raw 500 page
            self._send_json(500, {"error": "InternalError", "message": str(exc)})

    def do_GET(self):
        self._dispatch("GET")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_POST(self):
        self._dispatch("POST")

    # --- routing ---------------------------------------------------------------

    def _route(self, method: str, segments: list[str], query: dict) -> None:
        store = self.store
        if not segments:
            if method == "GET":
                return self._serve_ui(["index.html"])
            raise NotFound("nothing here")

        head = segments[0]
        if head == "workspaces":
            return self._route_workspaces(method, segments[1:], query)
        if head == "dsls" and method == "GET":
            if len(segments) == 1:
                return self._send_json(200, {"uris": store.registry.uris()})
            try:
                definition = store.registry.get("/".join(segments[1:]))
            except UnresolvedDsl as exc:
                raise NotFound(exc.message) from exc
            return self._send_json(200, definition_to_plain(definition))
        if head == "runs" and len(segments) == 3 and segments[2] == "trace" and method == "GET":
            trace = store.get_trace(segments[1])
            return self._send_bytes(200, serialize_trace(trace), "application/json; charset=utf-8")
        if head == "animations" and len(segments) == 2 and segments[1] == "compile" and method == "POST":
            script = script_from_plain(self._read_body())
            timeline = compile_timeline(script)
            return self._send_json(200, timeline_to_plain(timeline))
        if head == "session":
            return self._route_session(method, segments[1:])
        if method == "GET":
            return self._serve_ui(segments)
        raise NotFound(f"no route for {method} /{'/'.join(segments)}")

    def _route_workspaces(self, method: str, rest: list[str], query: dict) -> None:
        store = self.store
        if not rest:
            if method == "GET":
                return self._send_json(200, store.omnispace_index())
            raise NotFound("workspace index is read-only")

        tail = rest[-1]
        if len(rest) >= 2 and tail in _RESERVED_TAILS:
            uri = "/".join(rest[:-1])
            if tail == "commands" and method == "POST":
                body = self._read_body() or {}
                expected = self._if_match()
                if expected is None:
                    expected = body.get("expectedRevision")
                if not isinstance(expected, int) or isinstance(expected, bool):
                    raise MalformedDocument("commands need If-Match or expectedRevision")
                result = store.apply_commands(uri, body.get("commands", []), expected)
                return self._send_json(200, result)
            if tail == "run" and method == "POST":
                body = self._read_body() or {}
                limits = {}
                if "maxTicks" in body:
                    limits["maxTicks"] = body["maxTicks"]
                result = store.run_dataflow(uri, inputs=body.get("inputs"), limits=limits or None)
                status = 422 if isinstance(result["terminal"], dict) else 200
                return self._send_json(status, result)
            if tail == "generate" and method == "POST":
                templates = templateset_from_plain(self._read_body())
                doc = store.get_workspace(uri)
                defs = {ref: store.registry.get(ref) for ref in doc.dsl_refs}
                artifacts = generate(doc, defs, templates)
                return self._send_json(
                    200,
                    {
                        "artifacts": [
                            {
                                "path": a.path,
                                "content": a.content,
                                "lineCount": a.line_count,
                                "sourceElementIds": list(a.source_element_ids),
                            }
                            for a in artifacts
                        ]
                    },
                )
            if tail == "search" and method == "GET":
                q = (query.get("q") or [""])[0]
                doc = store.get_workspace(uri)
                return self._send_json(200, evaluate(doc, parse_query(q)))

        uri = "/".join(rest)
        if method == "GET":
            data, revision = store.get_workspace_bytes(uri)
            return self._send_bytes(200, data, "application/json; charset=utf-8", etag=str(revision))
        if method == "PUT":
            body = self._read_body()
            doc = workspace_from_plain(body)
            revision = store.put_workspace(uri, doc, self._if_match())
            return self._send_json(200, {"revision": revision})
        raise NotFound(f"no route for {method} on workspace {uri!r}")

    def _route_session(self, method: str, rest: list[str]) -> None:
        store = self.store
        if not rest:
            if method == "GET":
                return self._send_json(200, store.get_session())
            if method == "PUT":
                return self._send_json(200, store.put_session(self._read_body()))
        elif rest == ["navigate"] and method == "POST":
            body = self._read_body() or {}
            uri = body.get("uri")
            if not isinstance(uri, str) or not uri:
                raise MalformedDocument("navigate needs a uri")
            return self._send_json(200, store.record_navigation(uri))
        raise NotFound("no such session route")

    # --- static UI ---------------------------------------------------------------

    def _serve_ui(self, segments: list[str]) -> None:
        if self.ui_dir is None:
            if segments == ["index.html"]:
                return self._send_json(
                    200,
                    {
                        "service": "hgos",
                        "endpoints": [
                            "GET /workspaces",
                            "GET|PUT /workspaces/{path}",
                            "POST /workspaces/{path}/commands",
                            "POST /workspaces/{path}/run",
                            "GET /runs/{id}/trace",
                            "POST /workspaces/{path}/generate",
                            "GET /workspaces/{path}/search?q=",
                            "POST /animations/compile",
                            "GET|PUT /session",
                        ],
                    },
                )
            raise NotFound("no UI assets configured")
        base = self.ui_dir.resolve()
        target = (base / Path(*segments)).resolve()
        if not str(target).startswith(str(base)) or not target.is_file():
            # single-page app: unknown paths fall back to the index
            target = base / "index.html"
            if not target.is_file():
                raise NotFound("asset not found")
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self._send_bytes(200, target.read_bytes(), content_type)


def make_server(
    root: str | Path,
    port: int = 8077,
    bind: str = "127.0.0.1",
    ui_dir: Optional[str | Path] = None,
    store: Optional[WorkspaceStore] = None,
) -> ThreadingHTTPServer:
    """Build a ready-to-serve HTTP server bound to loopback by default."""
    handler = type(
        "BoundHandler",
        (KernelRequestHandler,),
        {
            "store": store or WorkspaceStore(root),
            "ui_dir": Path(ui_dir) if ui_dir is not None else None,
        },
    )
    return ThreadingHTTPServer((bind, port), handler)


class ServerThread:
    """Run a server on a background thread; used by tests and embedding."""

    def __init__(self, root: str | Path, port: int = 0, bind: str = "127.0.0.1", ui_dir=None, store=None):
        self.httpd = make_server(root, port=port, bind=bind, ui_dir=ui_dir, store=store)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def base_url(self) -> str:
        host = self.httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> "ServerThread":
        self.thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        self.thread.join(timeout=5)
