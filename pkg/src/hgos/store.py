"""Filesystem-backed workspace store with per-workspace serialized mutation.

No database: the storage root is a directory tree of canonical files. Every
write goes through a temp file and an atomic rename, so a workspace file on
disk is always a complete canonical document. Mutations are optimistic:
callers present the revision they saw and conflict if it moved.
"""

from __future__ import annotations

import os
import tempfile
import threading
import urllib.request
import uuid
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from . import model
from .canon import canon_bytes, loads_strict
from .dataflow import (
    TRACE_EXT,
    ExecutionTrace,
    _plain_value,
    build_dataflow,
    run as run_graph,
    serialize_trace,
)
from .dsl import DATAFLOW_URI, DslRegistry, validate_model
from .errors import (
    CommandFailed,
    KernelError,
    MalformedDocument,
    NotFound,
    PathEscape,
    RevisionConflict,
    ValidationFailed,
)
from .model import WORKSPACE_EXT, WorkspaceDoc, deserialize_workspace, serialize_workspace
from .values import from_tagged

SESSION_FILE = "session.hgsession.json"

COMMAND_OPS = (
    "createNode",
    "createLink",
    "deleteNode",
    "deleteLink",
    "setAttribute",
    "moveNode",
    "setViewport",
)


def _iso_mtime(path: Path) -> str:
    return datetime.fromtimestamp(path.stat().st_mtime, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


class WorkspaceStore:
    """Owns the storage root: workspaces, traces, the session, and DSL files."""

    def __init__(self, root: str | Path, registry: Optional[DslRegistry] = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.registry = registry or DslRegistry()
        self.registry.load_directory(self.root)
        self._global_lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._cache: dict[str, WorkspaceDoc] = {}
        self._traces: dict[str, ExecutionTrace] = {}

    # --- paths ------------------------------------------------------------

    def path_for(self, uri: str) -> Path:
        if not uri or uri.startswith(("/", "\\")) or "\\" in uri:
            raise PathEscape(f"workspace uri {uri!r} must be a relative path")
        parts = uri.split("/")
        if any(p in ("", ".", "..") for p in parts):
            raise PathEscape(f"workspace uri {uri!r} escapes the storage root")
        return self.root.joinpath(*parts).with_name(parts[-1] + WORKSPACE_EXT)

    def _lock_for(self, uri: str) -> threading.Lock:
        with self._global_lock:
            lock = self._locks.get(uri)
            if lock is None:
                lock = self._locks[uri] = threading.Lock()
            return lock

    @staticmethod
    def is_remote(uri: str) -> bool:
        return uri.startswith(("http://", "https://"))

    # --- workspace access ---------------------------------------------------

    def _load(self, uri: str) -> WorkspaceDoc:
        doc = self._cache.get(uri)
        if doc is not None:
            return doc
        path = self.path_for(uri)
        if not path.exists():
            raise NotFound(f"workspace {uri!r} does not exist")
        doc = deserialize_workspace(path.read_bytes())
        self._cache[uri] = doc
        return doc

    def _fetch_remote(self, uri: str) -> WorkspaceDoc:
        try:
            with urllib.request.urlopen(uri, timeout=10) as response:
                data = response.read()
        except OSError as exc:
            raise NotFound(f"remote workspace {uri!r} unreachable: {exc}") from exc
        return deserialize_workspace(data)

    def get_workspace(self, uri: str) -> WorkspaceDoc:
        if self.is_remote(uri):
            return self._fetch_remote(uri)
        with self._lock_for(uri):
            return self._load(uri)

    def get_workspace_bytes(self, uri: str) -> tuple[bytes, int]:
        doc = self.get_workspace(uri)
        return serialize_workspace(doc), doc.revision

    def exists(self, uri: str) -> bool:
        return self.path_for(uri).exists()

    def _write_doc(self, uri: str, doc: WorkspaceDoc) -> None:
        path = self.path_for(uri)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._write_atomic(path, serialize_workspace(doc))
        self._cache[uri] = doc

    @staticmethod
    def _write_atomic(path: Path, data: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def _validate_against_dsls(self, doc: WorkspaceDoc) -> None:
        defs = {ref: self.registry.get(ref) for ref in doc.dsl_refs}
        violations = validate_model(doc, defs)
        if violations:
            raise ValidationFailed(violations)

    def put_workspace(self, uri: str, doc: WorkspaceDoc, expected_revision: Optional[int]) -> int:
        """Create (no If-Match) or replace (If-Match equals current revision)."""
        if self.is_remote(uri):
            raise PathEscape("remote workspaces are read-only")
        with self._lock_for(uri):
            exists = self.exists(uri)
            if exists:
                current = self._load(uri)
                if expected_revision is None or expected_revision != current.revision:
                    raise RevisionConflict(
                        -1 if expected_revision is None else expected_revision, current.revision
                    )
                new_revision = current.revision + 1
            else:
                if expected_revision is not None:
                    raise RevisionConflict(expected_revision, -1)
                new_revision = doc.revision
            stored = replace(doc, uri=uri, revision=new_revision)
            self._validate_against_dsls(stored)
            self._write_doc(uri, stored)
            return new_revision

    def delete_from_cache(self, uri: str) -> None:
        with self._lock_for(uri):
            self._cache.pop(uri, None)

    # --- command batches ------------------------------------------------------

    def apply_commands(self, uri: str, commands: list[dict], expected_revision: int) -> dict:
        """Apply a batch atomically: all commands succeed, the model validates,
        revision bumps by exactly one, and the file is rewritten canonically."""
        if self.is_remote(uri):
            raise PathEscape("remote workspaces are read-only")
        if not isinstance(commands, list):
            raise MalformedDocument("commands must be a list")
        with self._lock_for(uri):
            current = self._load(uri)
            if expected_revision != current.revision:
                raise RevisionConflict(expected_revision, current.revision)
            dsls = [self.registry.get(ref) for ref in current.dsl_refs]
            working = current
            results = []
            for index, command in enumerate(commands):
                try:
                    working, result = self._apply_one(working, command, dsls)
                except KernelError as exc:
                    raise CommandFailed(index, exc) from exc
                results.append(result)
            new_doc = replace(working, revision=current.revision + 1)
            self._validate_against_dsls(new_doc)
            self._write_doc(uri, new_doc)
            return {"revision": new_doc.revision, "results": results}

    @staticmethod
    def _apply_one(ws: WorkspaceDoc, command: Any, dsls) -> tuple[WorkspaceDoc, dict]:
        if not isinstance(command, dict) or "op" not in command:
            raise MalformedDocument("command must be an object with an op")
        op = command["op"]
        if op == "createNode":
            spec = _decode_element_spec(command.get("spec") or {})
            ws, node_id = model.create_node(ws, spec, dsls=dsls)
            return ws, {"nodeId": node_id}
        if op == "createLink":
            spec = _decode_element_spec(command.get("spec") or {})
            ws, link_id = model.create_link(ws, spec, dsls=dsls)
            return ws, {"linkId": link_id}
        if op == "deleteNode":
            ws = model.delete_node(ws, _req(command, "id"), cascade=bool(command.get("cascade", False)))
            return ws, {"ok": True}
        if op == "deleteLink":
            ws = model.delete_link(ws, _req(command, "id"))
            return ws, {"ok": True}
        if op == "setAttribute":
            raw = command.get("value")
            value = None if raw is None else from_tagged(raw)
            ws = model.set_attribute(ws, _req(command, "id"), _req(command, "name"), value)
            return ws, {"ok": True}
        if op == "moveNode":
            ws = model.move_node(ws, _req(command, "id"), _num(command, "x"), _num(command, "y"))
            return ws, {"ok": True}
        if op == "setViewport":
            ws = model.set_viewport(ws, _num(command, "panX"), _num(command, "panY"), _num(command, "zoom"))
            return ws, {"ok": True}
        raise MalformedDocument(f"unknown command op {op!r}")

    # --- dataflow runs ----------------------------------------------------------

    def run_dataflow(self, uri: str, inputs: Optional[dict] = None, limits: Optional[dict] = None) -> dict:
        """Run against a snapshot; concurrent mutation does not affect the run."""
        with self._lock_for(uri):
            snapshot = model.copy_workspace(self._load(uri))
        graph = build_dataflow(snapshot, self.registry.get(DATAFLOW_URI))
        run_id = uuid.uuid4().hex
        outputs, trace = run_graph(graph, inputs=inputs, limits=limits, run_id=run_id)
        self._traces[run_id] = trace
        if not self.is_remote(uri):
            ws_path = self.path_for(uri)
            trace_path = ws_path.with_name(ws_path.name[: -len(WORKSPACE_EXT)] + TRACE_EXT)
            self._write_atomic(trace_path, serialize_trace(trace))
        return {
            "runId": run_id,
            "outputs": {nid: [_plain_value(v) for v in values] for nid, values in outputs.items()},
            "terminal": trace_to_terminal_json(trace),
        }

    def get_trace(self, run_id: str) -> ExecutionTrace:
        trace = self._traces.get(run_id)
        if trace is None:
            raise NotFound(f"no trace for run {run_id!r}")
        return trace

    # --- sessions -----------------------------------------------------------------

    def _session_path(self) -> Path:
        return self.root / SESSION_FILE

    def get_session(self) -> dict:
        path = self._session_path()
        if not path.exists():
            fresh = {
                "sessionId": uuid.uuid4().hex,
                "openWorkspaces": [],
                "history": [],
                "historyCursor": 0,
            }
            return self.put_session(fresh)
        session = loads_strict(path.read_bytes())
        _check_session(session)
        return session

    def put_session(self, session: dict) -> dict:
        _check_session(session)
        self._write_atomic(self._session_path(), canon_bytes(session))
        return session

    def record_navigation(self, uri: str, now: Optional[str] = None) -> dict:
        """Truncate forward history past the cursor, append, advance."""
        session = self.get_session()
        history = session["history"][: session["historyCursor"] + 1] if session["history"] else []
        history.append({"uri": uri, "enteredAt": now if now is not None else model.utc_now()})
        session["history"] = history
        session["historyCursor"] = len(history) - 1
        return self.put_session(session)

    # --- index ---------------------------------------------------------------------

    def omnispace_index(self) -> dict:
        """One entry per workspace file under the root."""
        entries = []
        for path in sorted(self.root.rglob(f"*{WORKSPACE_EXT}")):
            rel = path.relative_to(self.root).as_posix()
            uri = rel[: -len(WORKSPACE_EXT)]
            title, node_count, link_count = "", 0, 0
            try:
                obj = loads_strict(path.read_bytes())
                title = obj.get("title", "")
                node_count = len(obj.get("nodes", []))
                link_count = len(obj.get("links", []))
            except (ValueError, AttributeError):
                title = "(unreadable)"
            entries.append(
                {
                    "uri": uri,
                    "title": title,
                    "nodeCount": node_count,
                    "linkCount": link_count,
                    "modifiedAt": _iso_mtime(path),
                }
            )
        return {"entries": entries}


def trace_to_terminal_json(trace: ExecutionTrace) -> Any:
    if isinstance(trace.terminal, tuple):
        return {"error": {"nodeId": trace.terminal[1], "message": trace.terminal[2]}}
    return trace.terminal


def _decode_element_spec(spec: Any) -> dict:
    if not isinstance(spec, dict):
        raise MalformedDocument("spec must be an object")
    decoded = dict(spec)
    if "attributes" in decoded and decoded["attributes"] is not None:
        if not isinstance(decoded["attributes"], dict):
            raise MalformedDocument("attributes must be an object")
        decoded["attributes"] = {k: from_tagged(v) for k, v in decoded["attributes"].items()}
    return decoded


def _req(command: dict, key: str):
    if key not in command:
        raise MalformedDocument(f"command missing {key!r}")
    return command[key]


def _num(command: dict, key: str) -> float:
    value = _req(command, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedDocument(f"command field {key!r} must be a number")
    return float(value)


def _check_session(session: Any) -> None:
    if not isinstance(session, dict):
        raise MalformedDocument("session must be an object")
    required = {"sessionId", "openWorkspaces", "history", "historyCursor"}
    if set(session.keys()) != required:
        raise MalformedDocument(f"session keys must be exactly {sorted(required)}")
    if not isinstance(session["history"], list):
        raise MalformedDocument("session history must be a list")
    for entry in session["history"]:
        if not isinstance(entry, dict) or set(entry) != {"uri", "enteredAt"}:
            raise MalformedDocument("history entries must have exactly uri,enteredAt")
    cursor = session["historyCursor"]
    if not isinstance(cursor, int) or isinstance(cursor, bool):
        raise MalformedDocument("historyCursor must be an integer")
    if not (0 <= cursor < max(1, len(session["history"]))):
        raise MalformedDocument("historyCursor out of range")
    if not isinstance(session["openWorkspaces"], list):
        raise MalformedDocument("openWorkspaces must be a list")
