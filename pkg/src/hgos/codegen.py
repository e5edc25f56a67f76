"""Template-based generation of text artifacts from a validated workspace.

A template selects node-type elements, link-type elements, or the workspace
itself; its body renders once per matching element in id order between a
header and a footer. Placeholders:

    ${id}       ${label}        ${attr.NAME}
    ${out.LINKTYPE.target.attr.NAME}   first outbound link of that type, id order
    ${#count}   match count; header, footer and outputPath only

Generation is whole-model and all-or-nothing: artifacts are rendered fully
in memory and nothing is written on any error.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .canon import canon_bytes, loads_strict
from .errors import (
    MalformedDocument,
    OutputPathCollision,
    PathEscape,
    UnresolvedPlaceholder,
    ValidationFailed,
)
from .dsl import validate_model
from .model import LinkRecord, NodeRecord, WorkspaceDoc
from .values import value_to_text

TEMPLATE_EXT = ".hgtpl.json"

_PLACEHOLDER = re.compile(r"\$\{([^}]*)\}")


@dataclass(frozen=True)
class Selector:
    kind: str  # node | link | workspace
    key: str = ""


@dataclass(frozen=True)
class Template:
    id: str
    selector: Selector
    header: str = ""
    body: str = ""
    footer: str = ""
    output_path: str = ""


@dataclass(frozen=True)
class TemplateSet:
    templates: tuple = ()


@dataclass(frozen=True)
class GeneratedArtifact:
    path: str
    content: str
    source_element_ids: tuple
    line_count: int


def line_count_of(content: str) -> int:
    """Logical LF-separated lines; a trailing newline does not add a line."""
    if content == "":
        return 0
    lines = content.split("\n")
    if lines[-1] == "":
        lines.pop()
    return len(lines)


def check_template(t: Template) -> None:
    if not t.id:
        raise MalformedDocument("template id must be non-empty")
    if t.selector.kind not in ("node", "link", "workspace"):
        raise MalformedDocument(f"template {t.id!r}: bad selector kind {t.selector.kind!r}")
    if t.selector.kind != "workspace" and not t.selector.key:
        raise MalformedDocument(f"template {t.id!r}: selector needs a type key")
    if not t.output_path:
        raise MalformedDocument(f"template {t.id!r}: outputPath must be non-empty")
    for name, text in (("header", t.header), ("body", t.body), ("footer", t.footer), ("outputPath", t.output_path)):
        cleaned = _PLACEHOLDER.sub("", text)
        if "${" in cleaned:
            raise MalformedDocument(f"template {t.id!r}: unterminated placeholder in {name}")


def _safe_relative_path(rendered: str, template_id: str) -> str:
    if not rendered or rendered.startswith(("/", "\\")) or "\\" in rendered:
        raise PathEscape(f"template {template_id!r}: outputPath {rendered!r} is not a relative path")
    parts = rendered.split("/")
    if any(p in ("", ".", "..") for p in parts):
        raise PathEscape(f"template {template_id!r}: outputPath {rendered!r} escapes the output root")
    return rendered


# --- placeholder resolution -----------------------------------------------------

def _node_resolver(t: Template, ws: WorkspaceDoc, expr: str) -> Callable[[NodeRecord], str]:
    if expr == "id":
        return lambda el: el.id
    if expr == "label":
        return lambda el: el.label
    if expr.startswith("attr."):
        name = expr[5:]

        def resolve_attr(el, name=name):
            if name not in el.attributes:
                raise UnresolvedPlaceholder(t.id, "${%s}" % expr, el.id)
            return value_to_text(el.attributes[name])

        return resolve_attr
    if expr.startswith("out."):
        rest = expr[4:].split(".")
        if len(rest) == 4 and rest[1] == "target" and rest[2] == "attr":
            link_type, attr_name = rest[0], rest[3]

            def resolve_out(el, link_type=link_type, attr_name=attr_name):
                for lid in sorted(ws.links):
                    link = ws.links[lid]
                    if link.type_key == link_type and link.from_node_id == el.id:
                        target = ws.nodes[link.to_node_id]
                        if attr_name not in target.attributes:
                            raise UnresolvedPlaceholder(t.id, "${%s}" % expr, el.id)
                        return value_to_text(target.attributes[attr_name])
                raise UnresolvedPlaceholder(t.id, "${%s}" % expr, el.id)

            return resolve_out
    raise UnresolvedPlaceholder(t.id, "${%s}" % expr, "")


def _link_resolver(t: Template, expr: str) -> Callable[[LinkRecord], str]:
    if expr == "id":
        return lambda el: el.id
    if expr == "label":
        return lambda el: el.label
    if expr.startswith("attr."):
        name = expr[5:]

        def resolve_attr(el, name=name):
            if name not in el.attributes:
                raise UnresolvedPlaceholder(t.id, "${%s}" % expr, el.id)
            return value_to_text(el.attributes[name])

        return resolve_attr
    raise UnresolvedPlaceholder(t.id, "${%s}" % expr, "")


def _compile_body(t: Template, ws: WorkspaceDoc) -> Callable[[Any], str]:
    """Compile the body into a fast per-element renderer."""
    parts: list = []
    pos = 0
    for m in _PLACEHOLDER.finditer(t.body):
        if m.start() > pos:
            parts.append(t.body[pos : m.start()])
        expr = m.group(1)
        if expr == "#count":
            raise UnresolvedPlaceholder(t.id, "${#count}", "")
        if t.selector.kind == "node":
            parts.append(_node_resolver(t, ws, expr))
        elif t.selector.kind == "link":
            parts.append(_link_resolver(t, expr))
        else:  # workspace pseudo-element
            if expr == "id":
                parts.append(ws.uri)
            elif expr == "label":
                parts.append(ws.title)
            else:
                raise UnresolvedPlaceholder(t.id, "${%s}" % expr, ws.uri)
        pos = m.end()
    if pos < len(t.body):
        parts.append(t.body[pos:])

    def render(el) -> str:
        return "".join(p if isinstance(p, str) else p(el) for p in parts)

    return render


def _render_edge_text(t: Template, ws: WorkspaceDoc, text: str, count: int, what: str) -> str:
    def sub(m: re.Match) -> str:
        expr = m.group(1)
        if expr == "#count":
            return str(count)
        if expr == "id":
            return ws.uri
        if expr == "label":
            return ws.title
        raise UnresolvedPlaceholder(t.id, "${%s}" % expr, ws.uri)

    return _PLACEHOLDER.sub(sub, text)


def _matching_elements(t: Template, ws: WorkspaceDoc) -> list:
    if t.selector.kind == "node":
        return [ws.nodes[nid] for nid in sorted(ws.nodes) if ws.nodes[nid].type_key == t.selector.key]
    if t.selector.kind == "link":
        return [ws.links[lid] for lid in sorted(ws.links) if ws.links[lid].type_key == t.selector.key]
    return [ws]


def _render(t: Template, ws: WorkspaceDoc) -> GeneratedArtifact:
    check_template(t)
    elements = _matching_elements(t, ws)
    count = len(elements)
    body = _compile_body(t, ws)
    pieces = [_render_edge_text(t, ws, t.header, count, "header")]
    pieces.extend(body(el) for el in elements)
    pieces.append(_render_edge_text(t, ws, t.footer, count, "footer"))
    content = "".join(pieces)
    path = _safe_relative_path(_render_edge_text(t, ws, t.output_path, count, "outputPath"), t.id)
    if t.selector.kind == "workspace":
        source_ids: tuple = (ws.uri,)
    else:
        source_ids = tuple(el.id for el in elements)
    return GeneratedArtifact(
        path=path,
        content=content,
        source_element_ids=source_ids,
        line_count=line_count_of(content),
    )


def render_template(t: Template, ws: WorkspaceDoc, defs: dict) -> GeneratedArtifact:
    violations = validate_model(ws, defs)
    if violations:
        raise ValidationFailed(violations)
    return _render(t, ws)


def generate(ws: WorkspaceDoc, defs: dict, templates: TemplateSet) -> list[GeneratedArtifact]:
    """Render every template; all-or-nothing, deterministic, template-id order."""
    violations = validate_model(ws, defs)
    if violations:
        raise ValidationFailed(violations)
    artifacts = []
    seen_paths: dict[str, str] = {}
    for t in sorted(templates.templates, key=lambda t: t.id):
        artifact = _render(t, ws)
        if artifact.path in seen_paths:
            raise OutputPathCollision(
                f"templates {seen_paths[artifact.path]!r} and {t.id!r} both render {artifact.path!r}"
            )
        seen_paths[artifact.path] = t.id
        artifacts.append(artifact)
    return artifacts


def write_artifacts(artifacts: list[GeneratedArtifact], out_dir: str | Path) -> list[Path]:
    """Write fully-rendered artifacts; files land via atomic rename."""
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    written = []
    with tempfile.TemporaryDirectory(dir=out_root) as staging:
        staged = []
        for i, artifact in enumerate(artifacts):
            tmp = Path(staging) / f"artifact-{i}"
            tmp.write_text(artifact.content, encoding="utf-8")
            staged.append((tmp, out_root / artifact.path))
        for tmp, final in staged:
            final.parent.mkdir(parents=True, exist_ok=True)
            os.replace(tmp, final)
            written.append(final)
    return written


# --- JSON form --------------------------------------------------------------------

def _selector_to_plain(s: Selector):
    if s.kind == "workspace":
        return "workspace"
    if s.kind == "node":
        return {"nodeTypeKey": s.key}
    return {"linkTypeKey": s.key}


def _selector_from_plain(obj: Any) -> Selector:
    if obj == "workspace":
        return Selector("workspace")
    if isinstance(obj, dict) and set(obj) == {"nodeTypeKey"}:
        return Selector("node", obj["nodeTypeKey"])
    if isinstance(obj, dict) and set(obj) == {"linkTypeKey"}:
        return Selector("link", obj["linkTypeKey"])
    raise MalformedDocument('selector must be "workspace", {nodeTypeKey}, or {linkTypeKey}')


def templateset_to_plain(ts: TemplateSet) -> dict:
    return {
        "templates": [
            {
                "id": t.id,
                "selector": _selector_to_plain(t.selector),
                "header": t.header,
                "body": t.body,
                "footer": t.footer,
                "outputPath": t.output_path,
            }
            for t in ts.templates
        ]
    }


def templateset_from_plain(obj: Any) -> TemplateSet:
    if not isinstance(obj, dict) or not isinstance(obj.get("templates"), list):
        raise MalformedDocument("template set must be {templates: [...]}")
    templates = []
    for raw in obj["templates"]:
        t = Template(
            id=raw.get("id", ""),
            selector=_selector_from_plain(raw.get("selector")),
            header=raw.get("header", ""),
            body=raw.get("body", ""),
            footer=raw.get("footer", ""),
            output_path=raw.get("outputPath", ""),
        )
        check_template(t)
        templates.append(t)
    return TemplateSet(templates=tuple(templates))


def serialize_templateset(ts: TemplateSet) -> bytes:
    return canon_bytes(templateset_to_plain(ts))


def deserialize_templateset(data: bytes | str) -> TemplateSet:
    try:
        obj = loads_strict(data)
    except ValueError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    return templateset_from_plain(obj)


def templates_from_workspace(ws: WorkspaceDoc) -> TemplateSet:
    """Extract a TemplateSet from a workspace authored with the codegen DSL."""
    templates = []
    for nid in sorted(ws.nodes):
        node = ws.nodes[nid]
        if node.type_key != "template":
            continue
        selector_text = str(node.attributes.get("selector", ""))
        if selector_text == "workspace":
            selector = Selector("workspace")
        elif selector_text.startswith("node:"):
            selector = Selector("node", selector_text[5:])
        elif selector_text.startswith("link:"):
            selector = Selector("link", selector_text[5:])
        else:
            raise MalformedDocument(f"template node {nid!r}: bad selector {selector_text!r}")
        t = Template(
            id=nid,
            selector=selector,
            header=str(node.attributes.get("header", "")),
            body=str(node.attributes.get("body", "")),
            footer=str(node.attributes.get("footer", "")),
            output_path=str(node.attributes.get("outputPath", "")),
        )
        check_template(t)
        templates.append(t)
    return TemplateSet(templates=tuple(templates))
