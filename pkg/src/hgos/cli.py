"""Command line entry points: serve the HTTP API or run code generation."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .codegen import deserialize_templateset, generate, write_artifacts
from .dsl import DslRegistry
from .errors import KernelError
from .model import deserialize_workspace
from .server import make_server


def _serve_parser(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--root", default="./workspaces", help="storage root directory")
    parser.add_argument("--port", type=int, default=8077)
    parser.add_argument("--bind", default="127.0.0.1")
    parser.add_argument("--ui", default=None, help="directory of built UI assets to serve at /")


def _run_serve(args: argparse.Namespace) -> int:
    root = os.environ.get("HGOS_ROOT") or args.root
    ui_dir = args.ui
    if ui_dir is None:
        # repo layout: src/hgos/cli.py -> repo root -> frontend/dist
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if bundled.is_dir():
            ui_dir = bundled
    httpd = make_server(root, port=args.port, bind=args.bind, ui_dir=ui_dir)
    host, port = httpd.server_address[0], httpd.server_address[1]
    print(f"serving workspaces from {Path(root).resolve()} at http://{host}:{port}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


def _run_generate(args: argparse.Namespace) -> int:
    workspace_path = Path(args.workspace)
    doc = deserialize_workspace(workspace_path.read_bytes())
    templates = deserialize_templateset(Path(args.templates).read_bytes())
    registry = DslRegistry()
    registry.load_directory(workspace_path.parent)
    defs = {ref: registry.get(ref) for ref in doc.dsl_refs}
    started = time.perf_counter()
    artifacts = generate(doc, defs, templates)
    elapsed = time.perf_counter() - started
    written = write_artifacts(artifacts, args.out)
    for artifact, path in zip(artifacts, written):
        print(f"wrote {path} ({artifact.line_count} lines)")
    print(f"generated {len(artifacts)} artifacts in {elapsed:.3f}s")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = argparse.ArgumentParser(prog="hgos", description="graph workspace kernel")
    sub = parser.add_subparsers(dest="command")

    serve = sub.add_parser("serve", help="run the HTTP server")
    _serve_parser(serve)

    gen = sub.add_parser("generate", help="render templates from a workspace file")
    gen.add_argument("--workspace", required=True, help="path to a .hgws.json file")
    gen.add_argument("--templates", required=True, help="path to a .hgtpl.json file")
    gen.add_argument("--out", required=True, help="output directory")

    # bare `hgos --root ... --port ...` serves, matching the documented flags
    if not argv or argv[0] not in ("serve", "generate", "-h", "--help"):
        argv = ["serve"] + argv

    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _run_generate(args)
        return _run_serve(args)
    except KernelError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
