"""DSL definitions, registry, model validation, and the Meta-DSL compiler.

A DSL is a set of typed node/link definitions with visual and attribute
schemas. The Meta-DSL is itself a DSL whose workspaces describe other DSLs;
compiling such a workspace yields a DslDefinition, and the built-in Meta-DSL
is a fixed point of export-then-compile.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

from .canon import canon_bytes, loads_strict
from .errors import (
    EmptyDefinition,
    InvalidDefinition,
    MalformedDocument,
    MetaModelViolation,
    UnresolvedDsl,
)
from .model import WorkspaceDoc, create_link, create_node, new_workspace
from .values import KINDS, Uri, from_tagged, kind_of, to_tagged

DSL_EXT = ".hgdsl.json"

WILDCARD = "*"

SHAPES = ("rectangle", "ellipse", "diamond", "image", "container")
LINE_STYLES = ("solid", "dashed", "dotted")
ARROW_HEADS = ("none", "arrow", "diamond")
DIRECTIONS = ("in", "out")

_HEX_COLOR = re.compile(r"^#[0-9a-fA-F]{6}$")

META_URI = "builtin:meta"
DATAFLOW_URI = "builtin:dataflow"
CODEGEN_URI = "builtin:codegen"
WORKSPACE_NAV_URI = "builtin:workspace-nav"


@dataclass(frozen=True)
class AttrDef:
    name: str
    kind: str
    required: bool = False
    default: Any = None


@dataclass(frozen=True)
class PortDef:
    name: str
    direction: str


@dataclass(frozen=True)
class NodeVisual:
    shape: str = "rectangle"
    fill_color: str = "#ECEFF1"
    icon: Optional[str] = None
    label_template: str = "${label}"


@dataclass(frozen=True)
class LinkVisual:
    line_style: str = "solid"
    arrow_head: str = "arrow"
    color: str = "#333333"


@dataclass(frozen=True)
class NodeTypeDef:
    key: str
    display_name: str = ""
    visual: NodeVisual = NodeVisual()
    attribute_schema: tuple = ()
    ports: tuple = ()
    allows_containment: bool = False
    allowed_child_type_keys: Optional[tuple] = None


@dataclass(frozen=True)
class LinkTypeDef:
    key: str
    display_name: str = ""
    visual: LinkVisual = LinkVisual()
    source_type_keys: Any = WILDCARD  # "*" or tuple of node type keys
    target_type_keys: Any = WILDCARD
    max_out_per_source: Optional[int] = None
    max_in_per_target: Optional[int] = None

    def permits(self, source_type: str, target_type: str) -> bool:
        src_ok = self.source_type_keys == WILDCARD or source_type in self.source_type_keys
        dst_ok = self.target_type_keys == WILDCARD or target_type in self.target_type_keys
        return src_ok and dst_ok


@dataclass(frozen=True)
class DslDefinition:
    uri: str
    name: str
    version: str = "1"
    node_types: tuple = ()
    link_types: tuple = ()

    def node_type(self, key: str) -> Optional[NodeTypeDef]:
        for nt in self.node_types:
            if nt.key == key:
                return nt
        return None


@dataclass(frozen=True)
class Violation:
    rule: str  # unknown-type | missing-required-attr | attr-kind-mismatch | connection-rule | cardinality | containment
    element_id: str
    message: str


# --- definition validation -----------------------------------------------------

def check_definition(d: DslDefinition) -> None:
    """Raise InvalidDefinition naming the first broken invariant."""
    if not d.uri:
        raise InvalidDefinition("dsl uri must be non-empty")
    declared = [nt.key for nt in d.node_types]
    seen: set = set()
    for key in declared:
        if not key:
            raise InvalidDefinition("node type key must be non-empty")
        if key in seen:
            raise InvalidDefinition(f"duplicate node type key {key!r}")
        seen.add(key)
    for nt in d.node_types:
        if nt.visual.shape not in SHAPES:
            raise InvalidDefinition(f"node type {nt.key!r}: unknown shape {nt.visual.shape!r}")
        if not _HEX_COLOR.match(nt.visual.fill_color):
            raise InvalidDefinition(f"node type {nt.key!r}: fillColor must be #RRGGBB")
        attr_names = set()
        for attr in nt.attribute_schema:
            if attr.name in attr_names:
                raise InvalidDefinition(f"node type {nt.key!r}: duplicate attribute {attr.name!r}")
            attr_names.add(attr.name)
            if attr.kind not in KINDS:
                raise InvalidDefinition(f"node type {nt.key!r}: unknown kind {attr.kind!r}")
            if attr.default is not None and kind_of(attr.default) != attr.kind:
                raise InvalidDefinition(
                    f"node type {nt.key!r}: default for {attr.name!r} is not a {attr.kind}"
                )
        port_names = set()
        for port in nt.ports:
            if port.name in port_names:
                raise InvalidDefinition(f"node type {nt.key!r}: duplicate port {port.name!r}")
            port_names.add(port.name)
            if port.direction not in DIRECTIONS:
                raise InvalidDefinition(f"node type {nt.key!r}: bad port direction {port.direction!r}")
        if nt.allowed_child_type_keys is not None:
            for child in nt.allowed_child_type_keys:
                if child != WILDCARD and child not in seen:
                    raise InvalidDefinition(
                        f"node type {nt.key!r}: allowedChildTypeKeys names undeclared {child!r}"
                    )
    link_seen: set = set()
    for lt in d.link_types:
        if not lt.key:
            raise InvalidDefinition("link type key must be non-empty")
        if lt.key in link_seen:
            raise InvalidDefinition(f"duplicate link type key {lt.key!r}")
        link_seen.add(lt.key)
        if lt.visual.line_style not in LINE_STYLES:
            raise InvalidDefinition(f"link type {lt.key!r}: unknown lineStyle")
        if lt.visual.arrow_head not in ARROW_HEADS:
            raise InvalidDefinition(f"link type {lt.key!r}: unknown arrowHead")
        if not _HEX_COLOR.match(lt.visual.color):
            raise InvalidDefinition(f"link type {lt.key!r}: color must be #RRGGBB")
        for side, keys in (("source", lt.source_type_keys), ("target", lt.target_type_keys)):
            if keys == WILDCARD:
                continue
            for key in keys:
                if key not in seen:
                    raise InvalidDefinition(
                        f"link type {lt.key!r}: {side}TypeKeys names undeclared {key!r}"
                    )
        for bound_name, bound in (
            ("maxOutPerSource", lt.max_out_per_source),
            ("maxInPerTarget", lt.max_in_per_target),
        ):
            if bound is not None and bound < 1:
                raise InvalidDefinition(f"link type {lt.key!r}: {bound_name} must be >= 1")


def definitions_equal_up_to_identity(a: DslDefinition, b: DslDefinition) -> bool:
    """Field equality ignoring uri/name/version."""
    return replace(a, uri="", name="", version="") == replace(b, uri="", name="", version="")


# --- JSON form -------------------------------------------------------------------

def definition_to_plain(d: DslDefinition) -> dict:
    node_types = []
    for nt in d.node_types:
        obj: dict = {
            "key": nt.key,
            "displayName": nt.display_name,
            "visual": {
                "shape": nt.visual.shape,
                "fillColor": nt.visual.fill_color,
                "labelTemplate": nt.visual.label_template,
            },
            "attributeSchema": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "required": a.required,
                    **({"default": to_tagged(a.default)} if a.default is not None else {}),
                }
                for a in nt.attribute_schema
            ],
            "ports": [{"name": p.name, "direction": p.direction} for p in nt.ports],
            "allowsContainment": nt.allows_containment,
        }
        if nt.visual.icon is not None:
            obj["visual"]["icon"] = nt.visual.icon
        if nt.allowed_child_type_keys is not None:
            obj["allowedChildTypeKeys"] = list(nt.allowed_child_type_keys)
        node_types.append(obj)
    link_types = []
    for lt in d.link_types:
        obj = {
            "key": lt.key,
            "displayName": lt.display_name,
            "visual": {
                "lineStyle": lt.visual.line_style,
                "arrowHead": lt.visual.arrow_head,
                "color": lt.visual.color,
            },
            "sourceTypeKeys": WILDCARD if lt.source_type_keys == WILDCARD else list(lt.source_type_keys),
            "targetTypeKeys": WILDCARD if lt.target_type_keys == WILDCARD else list(lt.target_type_keys),
        }
        if lt.max_out_per_source is not None:
            obj["maxOutPerSource"] = lt.max_out_per_source
        if lt.max_in_per_target is not None:
            obj["maxInPerTarget"] = lt.max_in_per_target
        link_types.append(obj)
    return {
        "uri": d.uri,
        "name": d.name,
        "version": d.version,
        "nodeTypes": node_types,
        "linkTypes": link_types,
    }


def definition_from_plain(obj: Any) -> DslDefinition:
    if not isinstance(obj, dict):
        raise MalformedDocument("dsl definition must be an object")
    try:
        node_types = []
        for nt in obj.get("nodeTypes", []):
            visual = nt.get("visual", {})
            node_types.append(
                NodeTypeDef(
                    key=nt["key"],
                    display_name=nt.get("displayName", nt["key"]),
                    visual=NodeVisual(
                        shape=visual.get("shape", "rectangle"),
                        fill_color=visual.get("fillColor", "#ECEFF1"),
                        icon=visual.get("icon"),
                        label_template=visual.get("labelTemplate", "${label}"),
                    ),
                    attribute_schema=tuple(
                        AttrDef(
                            name=a["name"],
                            kind=a["kind"],
                            required=bool(a.get("required", False)),
                            default=from_tagged(a["default"]) if "default" in a else None,
                        )
                        for a in nt.get("attributeSchema", [])
                    ),
                    ports=tuple(
                        PortDef(name=p["name"], direction=p["direction"])
                        for p in nt.get("ports", [])
                    ),
                    allows_containment=bool(nt.get("allowsContainment", False)),
                    allowed_child_type_keys=(
                        tuple(nt["allowedChildTypeKeys"])
                        if nt.get("allowedChildTypeKeys") is not None
                        else None
                    ),
                )
            )
        link_types = []
        for lt in obj.get("linkTypes", []):
            visual = lt.get("visual", {})
            src = lt.get("sourceTypeKeys", WILDCARD)
            dst = lt.get("targetTypeKeys", WILDCARD)
            link_types.append(
                LinkTypeDef(
                    key=lt["key"],
                    display_name=lt.get("displayName", lt["key"]),
                    visual=LinkVisual(
                        line_style=visual.get("lineStyle", "solid"),
                        arrow_head=visual.get("arrowHead", "arrow"),
                        color=visual.get("color", "#333333"),
                    ),
                    source_type_keys=WILDCARD if src == WILDCARD else tuple(src),
                    target_type_keys=WILDCARD if dst == WILDCARD else tuple(dst),
                    max_out_per_source=lt.get("maxOutPerSource"),
                    max_in_per_target=lt.get("maxInPerTarget"),
                )
            )
        return DslDefinition(
            uri=obj["uri"],
            name=obj.get("name", obj["uri"]),
            version=obj.get("version", "1"),
            node_types=tuple(node_types),
            link_types=tuple(link_types),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedDocument(f"bad dsl definition: {exc}") from exc


def serialize_definition(d: DslDefinition) -> bytes:
    check_definition(d)
    return canon_bytes(definition_to_plain(d))


def deserialize_definition(data: bytes | str) -> DslDefinition:
    try:
        obj = loads_strict(data)
    except ValueError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    d = definition_from_plain(obj)
    check_definition(d)
    return d


# --- registry --------------------------------------------------------------------

class DslRegistry:
    """Read-mostly table of immutable definitions; registration is serialized."""

    def __init__(self, include_builtins: bool = True):
        self._lock = threading.Lock()
        self._defs: dict[str, DslDefinition] = {}
        if include_builtins:
            for d in (builtin_meta(), builtin_dataflow(), builtin_codegen(), builtin_workspace_nav()):
                self._defs[d.uri] = d

    def register(self, d: DslDefinition) -> str:
        check_definition(d)
        with self._lock:
            self._defs[d.uri] = d
        return d.uri

    def get(self, uri: str) -> DslDefinition:
        with self._lock:
            d = self._defs.get(uri)
        if d is None:
            raise UnresolvedDsl(f"no DSL registered at {uri!r}")
        return d

    def resolve(self, uris) -> list[DslDefinition]:
        return [self.get(u) for u in uris]

    def uris(self) -> list[str]:
        with self._lock:
            return sorted(self._defs)

    def load_directory(self, root: Path) -> int:
        """Register every *.hgdsl.json under root; returns the count."""
        count = 0
        for path in sorted(Path(root).rglob(f"*{DSL_EXT}")):
            self.register(deserialize_definition(path.read_bytes()))
            count += 1
        return count


# --- model validation --------------------------------------------------------------

def _lookup(defs: list[DslDefinition], attr: str, key: str):
    found = [t for d in defs for t in getattr(d, attr) if t.key == key]
    return found


def validate_model(ws: WorkspaceDoc, defs: dict[str, DslDefinition]) -> list[Violation]:
    """Structural validation of a workspace against its resolved DSLs.

    Returns [] iff every type resolves, required attributes are present with
    matching kinds, connection rules and cardinalities hold, and containment
    rules hold. Deterministically sorted by (elementId, rule).
    """
    for ref in ws.dsl_refs:
        if ref not in defs:
            raise UnresolvedDsl(f"workspace references unresolved DSL {ref!r}")
    refs = [defs[ref] for ref in ws.dsl_refs]
    out: list[Violation] = []

    node_types: dict[str, Optional[NodeTypeDef]] = {}
    for nid in sorted(ws.nodes):
        node = ws.nodes[nid]
        matches = _lookup(refs, "node_types", node.type_key)
        if len(matches) != 1:
            why = "unknown" if not matches else "ambiguous"
            out.append(Violation("unknown-type", nid, f"node type {node.type_key!r} {why}"))
            node_types[nid] = None
            continue
        nt = matches[0]
        node_types[nid] = nt
        if node.alias_of is not None:
            continue  # alias presents the target's attributes
        for attr in nt.attribute_schema:
            if attr.required and attr.name not in node.attributes:
                out.append(
                    Violation("missing-required-attr", nid, f"missing required attribute {attr.name!r}")
                )
            elif attr.name in node.attributes and kind_of(node.attributes[attr.name]) != attr.kind:
                out.append(
                    Violation(
                        "attr-kind-mismatch",
                        nid,
                        f"attribute {attr.name!r} is {kind_of(node.attributes[attr.name])}, expected {attr.kind}",
                    )
                )

    for nid in sorted(ws.nodes):
        node = ws.nodes[nid]
        if node.container_id is None:
            continue
        parent = ws.nodes.get(node.container_id)
        if parent is None:
            continue  # structural invariant, reported by the full-scan validator
        parent_type = node_types.get(parent.id)
        if parent_type is None:
            continue
        if not parent_type.allows_containment:
            out.append(
                Violation("containment", nid, f"type {parent.type_key!r} does not allow containment")
            )
        elif (
            parent_type.allowed_child_type_keys is not None
            and node.type_key not in parent_type.allowed_child_type_keys
            and WILDCARD not in parent_type.allowed_child_type_keys
        ):
            out.append(
                Violation(
                    "containment",
                    nid,
                    f"type {parent.type_key!r} does not admit children of type {node.type_key!r}",
                )
            )

    out_counts: dict[tuple, int] = {}
    in_counts: dict[tuple, int] = {}
    for lid in sorted(ws.links):
        link = ws.links[lid]
        matches = _lookup(refs, "link_types", link.type_key)
        if len(matches) != 1:
            why = "unknown" if not matches else "ambiguous"
            out.append(Violation("unknown-type", lid, f"link type {link.type_key!r} {why}"))
            continue
        lt = matches[0]
        src = ws.nodes.get(link.from_node_id)
        dst = ws.nodes.get(link.to_node_id)
        if src is None or dst is None:
            continue  # structural invariant
        if not lt.permits(src.type_key, dst.type_key):
            out.append(
                Violation(
                    "connection-rule",
                    lid,
                    f"{link.type_key!r} does not connect {src.type_key!r} to {dst.type_key!r}",
                )
            )
        if lt.max_out_per_source is not None:
            key = (link.type_key, link.from_node_id)
            out_counts[key] = out_counts.get(key, 0) + 1
            if out_counts[key] > lt.max_out_per_source:
                out.append(
                    Violation("cardinality", lid, f"maxOutPerSource={lt.max_out_per_source} exceeded")
                )
        if lt.max_in_per_target is not None:
            key = (link.type_key, link.to_node_id)
            in_counts[key] = in_counts.get(key, 0) + 1
            if in_counts[key] > lt.max_in_per_target:
                out.append(
                    Violation("cardinality", lid, f"maxInPerTarget={lt.max_in_per_target} exceeded")
                )

    return sorted(out, key=lambda v: (v.element_id, v.rule))


# --- Meta-DSL compiler ----------------------------------------------------------

def _text_attr(node, name: str, default: Optional[str] = None) -> Optional[str]:
    value = node.attributes.get(name, default)
    return None if value is None else str(value)


def _int_bound(node, name: str, node_id: str) -> Optional[int]:
    value = node.attributes.get(name)
    if value is None:
        return None
    if not isinstance(value, float) or not value.is_integer() or value < 1:
        raise MetaModelViolation(f"{node_id!r}: {name} must be an integer >= 1")
    return int(value)


def compile_meta_model(meta_ws: WorkspaceDoc) -> DslDefinition:
    """Compile a Meta-DSL workspace into a DslDefinition.

    NodeType meta-nodes become node types (attributes and ports gathered via
    hasAttribute/hasPort links); LinkType meta-nodes become link types with
    connection rules from `connects` links carrying a role attribute.
    Output ordering is canonical: everything sorted by key/name.
    """
    probe = replace(meta_ws, dsl_refs=(META_URI,))
    violations = validate_model(probe, {META_URI: builtin_meta()})
    if violations:
        first = violations[0]
        raise MetaModelViolation(f"{first.rule} on {first.element_id!r}: {first.message}")

    type_nodes = {nid: n for nid, n in meta_ws.nodes.items() if n.type_key == "NodeType"}
    if not type_nodes:
        raise EmptyDefinition("meta-workspace defines no NodeType nodes")
    link_type_nodes = {nid: n for nid, n in meta_ws.nodes.items() if n.type_key == "LinkType"}

    def outbound(nid: str, link_type: str):
        return [meta_ws.links[lid] for lid in sorted(meta_ws.links)
                if meta_ws.links[lid].type_key == link_type and meta_ws.links[lid].from_node_id == nid]

    key_by_meta_node: dict[str, str] = {}
    node_types = []
    for nid in sorted(type_nodes):
        node = type_nodes[nid]
        key = _text_attr(node, "key")
        if not key:
            raise MetaModelViolation(f"NodeType {nid!r} has an empty key")
        key_by_meta_node[nid] = key
        attrs = []
        for link in outbound(nid, "hasAttribute"):
            attr_node = meta_ws.nodes[link.to_node_id]
            kind = _text_attr(attr_node, "kind")
            name = _text_attr(attr_node, "name")
            default = attr_node.attributes.get("default")
            if default is not None and kind_of(default) != kind:
                raise MetaModelViolation(
                    f"Attribute {link.to_node_id!r}: default does not match kind {kind!r}"
                )
            attrs.append(
                AttrDef(
                    name=name,
                    kind=kind,
                    required=bool(attr_node.attributes.get("required", False)),
                    default=default,
                )
            )
        ports = []
        for link in outbound(nid, "hasPort"):
            port_node = meta_ws.nodes[link.to_node_id]
            ports.append(
                PortDef(
                    name=_text_attr(port_node, "name"),
                    direction=_text_attr(port_node, "direction"),
                )
            )
        children = node.attributes.get("allowedChildTypeKeys")
        node_types.append(
            NodeTypeDef(
                key=key,
                display_name=_text_attr(node, "displayName", key),
                visual=NodeVisual(
                    shape=_text_attr(node, "shape", "rectangle"),
                    fill_color=_text_attr(node, "fillColor", "#ECEFF1"),
                    icon=_text_attr(node, "icon"),
                    label_template=_text_attr(node, "labelTemplate", "${label}"),
                ),
                attribute_schema=tuple(sorted(attrs, key=lambda a: a.name)),
                ports=tuple(sorted(ports, key=lambda p: p.name)),
                allows_containment=bool(node.attributes.get("allowsContainment", False)),
                allowed_child_type_keys=(
                    tuple(sorted(str(c) for c in children)) if children is not None else None
                ),
            )
        )

    link_types = []
    for nid in sorted(link_type_nodes):
        node = link_type_nodes[nid]
        key = _text_attr(node, "key")
        if not key:
            raise MetaModelViolation(f"LinkType {nid!r} has an empty key")
        sources, targets = [], []
        for link in outbound(nid, "connects"):
            role = str(link.attributes.get("role", ""))
            end_key = key_by_meta_node.get(link.to_node_id)
            if end_key is None:
                raise MetaModelViolation(f"connects link {link.id!r} must point at a NodeType")
            if role == "source":
                sources.append(end_key)
            elif role == "target":
                targets.append(end_key)
            else:
                raise MetaModelViolation(f"connects link {link.id!r} needs role source|target")
        link_types.append(
            LinkTypeDef(
                key=key,
                display_name=_text_attr(node, "displayName", key),
                visual=LinkVisual(
                    line_style=_text_attr(node, "lineStyle", "solid"),
                    arrow_head=_text_attr(node, "arrowHead", "arrow"),
                    color=_text_attr(node, "color", "#333333"),
                ),
                source_type_keys=WILDCARD if not sources else tuple(sorted(sources)),
                target_type_keys=WILDCARD if not targets else tuple(sorted(targets)),
                max_out_per_source=_int_bound(node, "maxOutPerSource", nid),
                max_in_per_target=_int_bound(node, "maxInPerTarget", nid),
            )
        )

    compiled = DslDefinition(
        uri=f"compiled:{meta_ws.uri}",
        name=meta_ws.title or meta_ws.uri,
        version="1",
        node_types=tuple(sorted(node_types, key=lambda nt: nt.key)),
        link_types=tuple(sorted(link_types, key=lambda lt: lt.key)),
    )
    try:
        check_definition(compiled)
    except InvalidDefinition as exc:
        raise MetaModelViolation(f"compiled definition invalid: {exc.message}") from exc
    return compiled


def meta_workspace_from_dsl(d: DslDefinition, workspace_uri: str = "") -> WorkspaceDoc:
    """Export a definition as an editable Meta-DSL workspace (compile's inverse)."""
    ws = new_workspace(workspace_uri or f"meta/{d.name}", title=d.name, dsl_refs=(META_URI,))
    meta = [builtin_meta()]
    y = 0.0
    for nt in d.node_types:
        attrs: dict[str, Any] = {
            "key": nt.key,
            "displayName": nt.display_name,
            "shape": nt.visual.shape,
            "fillColor": nt.visual.fill_color,
            "labelTemplate": nt.visual.label_template,
            "allowsContainment": nt.allows_containment,
        }
        if nt.visual.icon is not None:
            attrs["icon"] = Uri(nt.visual.icon)
        if nt.allowed_child_type_keys is not None:
            attrs["allowedChildTypeKeys"] = list(nt.allowed_child_type_keys)
        ws, _ = create_node(
            ws,
            {
                "id": f"nt.{nt.key}",
                "typeKey": "NodeType",
                "label": nt.display_name,
                "attributes": attrs,
                "geometry": {"x": 0.0, "y": y},
            },
            dsls=meta,
            now="",
        )
        y += 100.0
        for a in nt.attribute_schema:
            attr_attrs: dict[str, Any] = {"name": a.name, "kind": a.kind, "required": a.required}
            if a.default is not None:
                attr_attrs["default"] = a.default
            ws, _ = create_node(
                ws,
                {
                    "id": f"attr.{nt.key}.{a.name}",
                    "typeKey": "Attribute",
                    "label": a.name,
                    "attributes": attr_attrs,
                    "geometry": {"x": 240.0, "y": y},
                },
                dsls=meta,
                now="",
            )
            ws, _ = create_link(
                ws,
                {
                    "id": f"ha.{nt.key}.{a.name}",
                    "typeKey": "hasAttribute",
                    "fromNodeId": f"nt.{nt.key}",
                    "toNodeId": f"attr.{nt.key}.{a.name}",
                },
                dsls=meta,
            )
            y += 40.0
        for p in nt.ports:
            ws, _ = create_node(
                ws,
                {
                    "id": f"port.{nt.key}.{p.name}",
                    "typeKey": "Port",
                    "label": p.name,
                    "attributes": {"name": p.name, "direction": p.direction},
                    "geometry": {"x": 480.0, "y": y},
                },
                dsls=meta,
                now="",
            )
            ws, _ = create_link(
                ws,
                {
                    "id": f"hp.{nt.key}.{p.name}",
                    "typeKey": "hasPort",
                    "fromNodeId": f"nt.{nt.key}",
                    "toNodeId": f"port.{nt.key}.{p.name}",
                },
                dsls=meta,
            )
            y += 40.0
    for lt in d.link_types:
        attrs = {
            "key": lt.key,
            "displayName": lt.display_name,
            "lineStyle": lt.visual.line_style,
            "arrowHead": lt.visual.arrow_head,
            "color": lt.visual.color,
        }
        if lt.max_out_per_source is not None:
            attrs["maxOutPerSource"] = float(lt.max_out_per_source)
        if lt.max_in_per_target is not None:
            attrs["maxInPerTarget"] = float(lt.max_in_per_target)
        ws, _ = create_node(
            ws,
            {
                "id": f"lt.{lt.key}",
                "typeKey": "LinkType",
                "label": lt.display_name,
                "attributes": attrs,
                "geometry": {"x": 720.0, "y": y},
            },
            dsls=meta,
            now="",
        )
        y += 100.0
        for role, keys in (("source", lt.source_type_keys), ("target", lt.target_type_keys)):
            if keys == WILDCARD:
                continue
            for key in keys:
                # fromPort carries the role too, keeping source/target links to
                # the same node type distinct under the link-tuple rule
                ws, _ = create_link(
                    ws,
                    {
                        "id": f"c{role[0]}.{lt.key}.{key}",
                        "typeKey": "connects",
                        "fromNodeId": f"lt.{lt.key}",
                        "fromPort": role,
                        "toNodeId": f"nt.{key}",
                        "attributes": {"role": role},
                    },
                    dsls=meta,
                )
    return ws


# --- built-in DSLs ---------------------------------------------------------------

def builtin_meta() -> DslDefinition:
    """The DSL whose workspaces describe other DSLs."""
    return DslDefinition(
        uri=META_URI,
        name="Meta",
        version="1",
        node_types=(
            NodeTypeDef(
                key="Attribute",
                display_name="Attribute",
                visual=NodeVisual(shape="ellipse", fill_color="#FFF3C4", label_template="${label}"),
                attribute_schema=(
                    AttrDef("kind", "text", required=True),
                    AttrDef("name", "text", required=True),
                    AttrDef("required", "flag", default=False),
                ),
            ),
            NodeTypeDef(
                key="LinkType",
                display_name="Link Type",
                visual=NodeVisual(shape="rectangle", fill_color="#C8E6C9", label_template="${label}"),
                attribute_schema=(
                    AttrDef("arrowHead", "text", default="arrow"),
                    AttrDef("color", "text", default="#333333"),
                    AttrDef("displayName", "text"),
                    AttrDef("key", "text", required=True),
                    AttrDef("lineStyle", "text", default="solid"),
                    AttrDef("maxInPerTarget", "number"),
                    AttrDef("maxOutPerSource", "number"),
                ),
            ),
            NodeTypeDef(
                key="NodeType",
                display_name="Node Type",
                visual=NodeVisual(shape="rectangle", fill_color="#BBDEFB", label_template="${label}"),
                attribute_schema=(
                    AttrDef("allowedChildTypeKeys", "list"),
                    AttrDef("allowsContainment", "flag", default=False),
                    AttrDef("displayName", "text"),
                    AttrDef("fillColor", "text", default="#ECEFF1"),
                    AttrDef("icon", "uri"),
                    AttrDef("key", "text", required=True),
                    AttrDef("labelTemplate", "text", default="${label}"),
                    AttrDef("shape", "text", default="rectangle"),
                ),
            ),
            NodeTypeDef(
                key="Port",
                display_name="Port",
                visual=NodeVisual(shape="ellipse", fill_color="#D1C4E9", label_template="${label}"),
                attribute_schema=(
                    AttrDef("direction", "text", required=True),
                    AttrDef("name", "text", required=True),
                ),
            ),
        ),
        link_types=(
            LinkTypeDef(
                key="connects",
                display_name="connects",
                visual=LinkVisual(line_style="dashed", arrow_head="arrow", color="#546E7A"),
                source_type_keys=("LinkType",),
                target_type_keys=("NodeType",),
            ),
            LinkTypeDef(
                key="hasAttribute",
                display_name="has attribute",
                visual=LinkVisual(line_style="solid", arrow_head="arrow", color="#00796B"),
                source_type_keys=("NodeType",),
                target_type_keys=("Attribute",),
            ),
            LinkTypeDef(
                key="hasPort",
                display_name="has port",
                visual=LinkVisual(line_style="solid", arrow_head="arrow", color="#5D4037"),
                source_type_keys=("NodeType",),
                target_type_keys=("Port",),
            ),
        ),
    )


def builtin_dataflow() -> DslDefinition:
    """Processors wired by data/delay channels; executed by the dataflow engine."""
    return DslDefinition(
        uri=DATAFLOW_URI,
        name="Dataflow",
        version="1",
        node_types=(
            NodeTypeDef(
                key="processor",
                display_name="Processor",
                visual=NodeVisual(shape="rectangle", fill_color="#B3E5FC", label_template="${label}"),
                attribute_schema=(
                    AttrDef("command", "list"),
                    AttrDef("inPorts", "list"),
                    AttrDef("op", "text"),
                    AttrDef("outPorts", "list"),
                    AttrDef("params", "map"),
                    AttrDef("timeoutMs", "number", default=5000.0),
                ),
                ports=(PortDef("in", "in"), PortDef("out", "out")),
            ),
        ),
        link_types=(
            LinkTypeDef(
                key="data",
                display_name="data",
                visual=LinkVisual(line_style="solid", arrow_head="arrow", color="#1565C0"),
                source_type_keys=("processor",),
                target_type_keys=("processor",),
            ),
            LinkTypeDef(
                key="delay",
                display_name="delay",
                visual=LinkVisual(line_style="dashed", arrow_head="arrow", color="#EF6C00"),
                source_type_keys=("processor",),
                target_type_keys=("processor",),
            ),
        ),
    )


def builtin_codegen() -> DslDefinition:
    """Template nodes so template sets can be authored as workspaces."""
    return DslDefinition(
        uri=CODEGEN_URI,
        name="CodeGeneration",
        version="1",
        node_types=(
            NodeTypeDef(
                key="template",
                display_name="Template",
                visual=NodeVisual(shape="rectangle", fill_color="#FFE0B2", label_template="${label}"),
                attribute_schema=(
                    AttrDef("body", "text", default=""),
                    AttrDef("footer", "text", default=""),
                    AttrDef("header", "text", default=""),
                    AttrDef("outputPath", "text", required=True),
                    AttrDef("selector", "text", required=True),
                ),
            ),
        ),
        link_types=(),
    )


def builtin_workspace_nav() -> DslDefinition:
    """Workspace-link nodes used for navigation across the workspace network."""
    return DslDefinition(
        uri=WORKSPACE_NAV_URI,
        name="WorkspaceNavigation",
        version="1",
        node_types=(
            NodeTypeDef(
                key="workspace-link",
                display_name="Workspace Link",
                visual=NodeVisual(shape="diamond", fill_color="#E1BEE7", label_template="${label}"),
                attribute_schema=(AttrDef("target", "uri", required=True),),
            ),
        ),
        link_types=(),
    )
