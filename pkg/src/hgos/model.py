"""Workspace data model: typed nodes and links with canonical serialization.

Operations are value-semantic: they never mutate their input workspace and
return an updated copy. Any failing operation therefore leaves the caller's
workspace untouched. Revision is only ever bumped by the store when a command
batch commits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Callable, Iterable, Optional

from .canon import canon_bytes, loads_strict
from .errors import (
    AliasDepthExceeded,
    BrokenAlias,
    ConnectionRuleViolation,
    ContainerCycle,
    DanglingEndpoint,
    DuplicateId,
    DuplicateLink,
    HasIncidentLinks,
    InvariantViolation,
    MalformedDocument,
    NotFound,
    UnknownTypeKey,
)
from .values import from_tagged, normalize_value, to_tagged

WORKSPACE_EXT = ".hgws.json"

MAX_ALIAS_DEPTH = 8

_DOC_KEYS = {"uri", "title", "revision", "dslRefs", "viewport", "nodes", "links"}
_NODE_KEYS_REQUIRED = {"id", "typeKey", "label", "attributes", "geometry", "createdAt", "modifiedAt"}
_NODE_KEYS_OPTIONAL = {"containerId", "contentRef", "aliasOf"}
_LINK_KEYS_REQUIRED = {"id", "typeKey", "fromNodeId", "toNodeId", "label", "attributes"}
_LINK_KEYS_OPTIONAL = {"fromPort", "toPort"}


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Geometry:
    x: float = 0.0
    y: float = 0.0
    w: float = 120.0
    h: float = 60.0


@dataclass(frozen=True)
class ContentRef:
    mime: str
    uri: str


@dataclass(frozen=True)
class AliasRef:
    workspace_uri: str
    node_id: str


@dataclass(frozen=True)
class Viewport:
    pan_x: float = 0.0
    pan_y: float = 0.0
    zoom: float = 1.0


@dataclass(frozen=True)
class NodeRecord:
    id: str
    type_key: str
    label: str = ""
    attributes: dict = field(default_factory=dict)
    geometry: Geometry = Geometry()
    container_id: Optional[str] = None
    content_ref: Optional[ContentRef] = None
    alias_of: Optional[AliasRef] = None
    created_at: str = ""
    modified_at: str = ""


@dataclass(frozen=True)
class LinkRecord:
    id: str
    type_key: str
    from_node_id: str
    to_node_id: str
    from_port: Optional[str] = None
    to_port: Optional[str] = None
    label: str = ""
    attributes: dict = field(default_factory=dict)

    def tuple_key(self):
        return (self.from_node_id, self.from_port, self.to_node_id, self.to_port, self.type_key)


@dataclass(frozen=True)
class WorkspaceDoc:
    uri: str
    title: str = ""
    revision: int = 0
    dsl_refs: tuple = ()
    viewport: Viewport = Viewport()
    nodes: dict = field(default_factory=dict)
    links: dict = field(default_factory=dict)


def new_workspace(uri: str, title: str = "", dsl_refs: Iterable[str] = ()) -> WorkspaceDoc:
    return WorkspaceDoc(uri=uri, title=title, dsl_refs=tuple(dsl_refs))


# --- invariants ---------------------------------------------------------------

def invariant_violations(ws: WorkspaceDoc) -> list[tuple[str, str]]:
    """Full-scan validator: every broken structural rule as (rule, elementId)."""
    out: list[tuple[str, str]] = []
    for nid in sorted(ws.nodes):
        node = ws.nodes[nid]
        if node.id == "":
            out.append(("id-nonempty", nid))
        if node.geometry.w < 0 or node.geometry.h < 0:
            out.append(("geometry-size", nid))
        if node.alias_of is not None and node.attributes:
            out.append(("alias-bare", nid))
        if node.container_id is not None and node.container_id not in ws.nodes:
            out.append(("container-exists", nid))
    # containment acyclicity over nodes whose parents resolve
    done: set[str] = set()
    for nid in sorted(ws.nodes):
        if nid in done:
            continue
        path: list[str] = []
        cur: Optional[str] = nid
        while cur is not None and cur in ws.nodes and cur not in done and cur not in path:
            path.append(cur)
            cur = ws.nodes[cur].container_id
        if cur is not None and cur in path:
            out.append(("containment-acyclic", cur))
        done.update(path)
    seen_tuples: dict[tuple, str] = {}
    for lid in sorted(ws.links):
        link = ws.links[lid]
        if link.id == "":
            out.append(("id-nonempty", lid))
        if link.from_node_id not in ws.nodes or link.to_node_id not in ws.nodes:
            out.append(("endpoint-exists", lid))
        key = link.tuple_key()
        if key in seen_tuples:
            out.append(("link-tuple-unique", lid))
        else:
            seen_tuples[key] = lid
    if not ws.viewport.zoom > 0:
        out.append(("zoom-positive", ws.uri))
    if ws.revision < 0:
        out.append(("revision-nonnegative", ws.uri))
    return out


def ensure_invariants(ws: WorkspaceDoc) -> None:
    violations = invariant_violations(ws)
    if violations:
        rule, element_id = violations[0]
        raise InvariantViolation(rule, element_id)


def _container_would_cycle(ws: WorkspaceDoc, node_id: str, container_id: str) -> bool:
    """True when attaching node_id under container_id closes a loop or the
    ancestry above container_id is itself cyclic."""
    cur: Optional[str] = container_id
    visited: set[str] = set()
    while cur is not None:
        if cur == node_id or cur in visited:
            return True
        visited.add(cur)
        node = ws.nodes.get(cur)
        cur = node.container_id if node else None
    return False


# --- DSL lookups (duck-typed; resolved definitions come from the registry) ----

def _resolve_node_type(dsls, type_key: str):
    found = [nt for d in dsls for nt in d.node_types if nt.key == type_key]
    return found[0] if len(found) == 1 else None


def _resolve_link_type(dsls, type_key: str):
    found = [lt for d in dsls for lt in d.link_types if lt.key == type_key]
    return found[0] if len(found) == 1 else None


# --- mutation operations -------------------------------------------------------

def _generate_id(existing: dict, prefix: str) -> str:
    n = len(existing) + 1
    while f"{prefix}{n}" in existing:
        n += 1
    return f"{prefix}{n}"


_NODE_SPEC_KEYS = {"id", "typeKey", "label", "attributes", "geometry", "containerId", "contentRef", "aliasOf"}
_LINK_SPEC_KEYS = {"id", "typeKey", "fromNodeId", "toNodeId", "fromPort", "toPort", "label", "attributes"}


def create_node(
    ws: WorkspaceDoc,
    spec: dict,
    dsls=None,
    now: Optional[str] = None,
) -> tuple[WorkspaceDoc, str]:
    """Insert a node described by a partial record; defaults come from the DSL
    attribute schema when resolved DSLs are supplied."""
    unknown = set(spec) - _NODE_SPEC_KEYS
    if unknown:
        raise MalformedDocument(f"createNode spec has unknown keys: {sorted(unknown)}")
    type_key = spec.get("typeKey", "")
    if not type_key:
        raise MalformedDocument("createNode requires a non-empty typeKey")
    node_id = spec.get("id")
    if node_id is not None:
        if not isinstance(node_id, str) or node_id == "":
            raise MalformedDocument("node id must be a non-empty string")
        if node_id in ws.nodes:
            raise DuplicateId(f"node id {node_id!r} already in use")
    else:
        node_id = _generate_id(ws.nodes, "n")

    node_type = None
    if dsls is not None:
        node_type = _resolve_node_type(dsls, type_key)
        if node_type is None:
            raise UnknownTypeKey(f"node type {type_key!r} not defined by the workspace DSLs")

    alias_of = None
    if spec.get("aliasOf") is not None:
        ref = spec["aliasOf"]
        alias_of = AliasRef(workspace_uri=ref["workspaceUri"], node_id=ref["nodeId"])
        if spec.get("attributes"):
            raise InvariantViolation("alias-bare", node_id)

    attributes = {k: normalize_value(v) for k, v in (spec.get("attributes") or {}).items()}
    if node_type is not None and alias_of is None:
        for attr in node_type.attribute_schema:
            if attr.name not in attributes and attr.default is not None:
                attributes[attr.name] = attr.default

    geometry = _geometry_from(spec.get("geometry"))
    container_id = spec.get("containerId")
    if container_id is not None:
        if container_id not in ws.nodes:
            raise NotFound(f"container {container_id!r} does not exist")
        if _container_would_cycle(ws, node_id, container_id):
            raise ContainerCycle(f"containing {node_id!r} in {container_id!r} forms a cycle")

    content_ref = None
    if spec.get("contentRef") is not None:
        ref = spec["contentRef"]
        content_ref = ContentRef(mime=ref["mime"], uri=ref["uri"])

    stamp = now if now is not None else utc_now()
    record = NodeRecord(
        id=node_id,
        type_key=type_key,
        label=spec.get("label", ""),
        attributes=attributes,
        geometry=geometry,
        container_id=container_id,
        content_ref=content_ref,
        alias_of=alias_of,
        created_at=stamp,
        modified_at=stamp,
    )
    return replace(ws, nodes={**ws.nodes, node_id: record}), node_id


def create_link(
    ws: WorkspaceDoc,
    spec: dict,
    dsls=None,
) -> tuple[WorkspaceDoc, str]:
    unknown = set(spec) - _LINK_SPEC_KEYS
    if unknown:
        raise MalformedDocument(f"createLink spec has unknown keys: {sorted(unknown)}")
    type_key = spec.get("typeKey", "")
    if not type_key:
        raise MalformedDocument("createLink requires a non-empty typeKey")
    link_id = spec.get("id")
    if link_id is not None:
        if not isinstance(link_id, str) or link_id == "":
            raise MalformedDocument("link id must be a non-empty string")
        if link_id in ws.links:
            raise DuplicateId(f"link id {link_id!r} already in use")
    else:
        link_id = _generate_id(ws.links, "l")

    from_id, to_id = spec.get("fromNodeId"), spec.get("toNodeId")
    if from_id not in ws.nodes:
        raise DanglingEndpoint(f"source node {from_id!r} does not exist")
    if to_id not in ws.nodes:
        raise DanglingEndpoint(f"target node {to_id!r} does not exist")

    record = LinkRecord(
        id=link_id,
        type_key=type_key,
        from_node_id=from_id,
        to_node_id=to_id,
        from_port=spec.get("fromPort"),
        to_port=spec.get("toPort"),
        label=spec.get("label", ""),
        attributes={k: normalize_value(v) for k, v in (spec.get("attributes") or {}).items()},
    )

    for other in ws.links.values():
        if other.tuple_key() == record.tuple_key():
            raise DuplicateLink(f"link tuple {record.tuple_key()!r} already present")

    if dsls is not None:
        link_type = _resolve_link_type(dsls, type_key)
        if link_type is None:
            raise UnknownTypeKey(f"link type {type_key!r} not defined by the workspace DSLs")
        src_type = ws.nodes[from_id].type_key
        dst_type = ws.nodes[to_id].type_key
        if not link_type.permits(src_type, dst_type):
            raise ConnectionRuleViolation(
                f"{type_key!r} does not connect {src_type!r} to {dst_type!r}"
            )
        if link_type.max_out_per_source is not None:
            existing = sum(
                1
                for l in ws.links.values()
                if l.type_key == type_key and l.from_node_id == from_id
            )
            if existing + 1 > link_type.max_out_per_source:
                raise ConnectionRuleViolation(
                    f"{type_key!r} exceeds maxOutPerSource={link_type.max_out_per_source} on {from_id!r}"
                )
        if link_type.max_in_per_target is not None:
            existing = sum(
                1
                for l in ws.links.values()
                if l.type_key == type_key and l.to_node_id == to_id
            )
            if existing + 1 > link_type.max_in_per_target:
                raise ConnectionRuleViolation(
                    f"{type_key!r} exceeds maxInPerTarget={link_type.max_in_per_target} on {to_id!r}"
                )

    return replace(ws, links={**ws.links, link_id: record}), link_id


def delete_node(ws: WorkspaceDoc, node_id: str, cascade: bool = False) -> WorkspaceDoc:
    node = ws.nodes.get(node_id)
    if node is None:
        raise NotFound(f"node {node_id!r} does not exist")
    incident = [l for l in ws.links.values() if node_id in (l.from_node_id, l.to_node_id)]
    if incident and not cascade:
        raise HasIncidentLinks(f"node {node_id!r} has {len(incident)} incident links")
    nodes = dict(ws.nodes)
    del nodes[node_id]
    # children re-parent to the deleted node's own container
    for cid, child in list(nodes.items()):
        if child.container_id == node_id:
            nodes[cid] = replace(child, container_id=node.container_id)
    links = {lid: l for lid, l in ws.links.items() if node_id not in (l.from_node_id, l.to_node_id)}
    return replace(ws, nodes=nodes, links=links)


def delete_link(ws: WorkspaceDoc, link_id: str) -> WorkspaceDoc:
    if link_id not in ws.links:
        raise NotFound(f"link {link_id!r} does not exist")
    links = dict(ws.links)
    del links[link_id]
    return replace(ws, links=links)


def set_attribute(
    ws: WorkspaceDoc,
    element_id: str,
    name: str,
    value: Any,
    now: Optional[str] = None,
) -> WorkspaceDoc:
    """Set (or with value=None remove) one attribute on a node or a link."""
    if element_id in ws.nodes:
        node = ws.nodes[element_id]
        if node.alias_of is not None and value is not None:
            raise InvariantViolation("alias-bare", element_id)
        attributes = dict(node.attributes)
        if value is None:
            attributes.pop(name, None)
        else:
            attributes[name] = normalize_value(value)
        stamp = now if now is not None else utc_now()
        updated = replace(node, attributes=attributes, modified_at=stamp)
        return replace(ws, nodes={**ws.nodes, element_id: updated})
    if element_id in ws.links:
        link = ws.links[element_id]
        attributes = dict(link.attributes)
        if value is None:
            attributes.pop(name, None)
        else:
            attributes[name] = normalize_value(value)
        return replace(ws, links={**ws.links, element_id: replace(link, attributes=attributes)})
    raise NotFound(f"element {element_id!r} does not exist")


def move_node(ws: WorkspaceDoc, node_id: str, x: float, y: float, now: Optional[str] = None) -> WorkspaceDoc:
    node = ws.nodes.get(node_id)
    if node is None:
        raise NotFound(f"node {node_id!r} does not exist")
    geometry = replace(node.geometry, x=float(x), y=float(y))
    stamp = now if now is not None else utc_now()
    updated = replace(node, geometry=geometry, modified_at=stamp)
    return replace(ws, nodes={**ws.nodes, node_id: updated})


def set_viewport(ws: WorkspaceDoc, pan_x: float, pan_y: float, zoom: float) -> WorkspaceDoc:
    if not zoom > 0:
        raise InvariantViolation("zoom-positive", ws.uri)
    return replace(ws, viewport=Viewport(pan_x=float(pan_x), pan_y=float(pan_y), zoom=float(zoom)))


# --- serialization -------------------------------------------------------------

def _geometry_from(obj) -> Geometry:
    if obj is None:
        return Geometry()
    g = Geometry(
        x=float(obj.get("x", 0.0)),
        y=float(obj.get("y", 0.0)),
        w=float(obj.get("w", 120.0)),
        h=float(obj.get("h", 60.0)),
    )
    if g.w < 0 or g.h < 0:
        raise InvariantViolation("geometry-size", "")
    return g


def node_to_plain(node: NodeRecord) -> dict:
    out = {
        "id": node.id,
        "typeKey": node.type_key,
        "label": node.label,
        "attributes": {k: to_tagged(v) for k, v in sorted(node.attributes.items())},
        "geometry": {
            "x": node.geometry.x,
            "y": node.geometry.y,
            "w": node.geometry.w,
            "h": node.geometry.h,
        },
        "createdAt": node.created_at,
        "modifiedAt": node.modified_at,
    }
    if node.container_id is not None:
        out["containerId"] = node.container_id
    if node.content_ref is not None:
        out["contentRef"] = {"mime": node.content_ref.mime, "uri": node.content_ref.uri}
    if node.alias_of is not None:
        out["aliasOf"] = {
            "workspaceUri": node.alias_of.workspace_uri,
            "nodeId": node.alias_of.node_id,
        }
    return out


def link_to_plain(link: LinkRecord) -> dict:
    out = {
        "id": link.id,
        "typeKey": link.type_key,
        "fromNodeId": link.from_node_id,
        "toNodeId": link.to_node_id,
        "label": link.label,
        "attributes": {k: to_tagged(v) for k, v in sorted(link.attributes.items())},
    }
    if link.from_port is not None:
        out["fromPort"] = link.from_port
    if link.to_port is not None:
        out["toPort"] = link.to_port
    return out


def workspace_to_plain(ws: WorkspaceDoc, include_timestamps: bool = True) -> dict:
    nodes = [node_to_plain(ws.nodes[nid]) for nid in sorted(ws.nodes)]
    if not include_timestamps:
        for n in nodes:
            n.pop("createdAt", None)
            n.pop("modifiedAt", None)
    return {
        "uri": ws.uri,
        "title": ws.title,
        "revision": ws.revision,
        "dslRefs": list(ws.dsl_refs),
        "viewport": {
            "panX": ws.viewport.pan_x,
            "panY": ws.viewport.pan_y,
            "zoom": ws.viewport.zoom,
        },
        "nodes": nodes,
        "links": [link_to_plain(ws.links[lid]) for lid in sorted(ws.links)],
    }


def serialize_workspace(ws: WorkspaceDoc) -> bytes:
    """Canonical bytes: identical workspaces yield identical bytes."""
    ensure_invariants(ws)
    return canon_bytes(workspace_to_plain(ws))


def _require_keys(obj: dict, required: set, optional: set, what: str) -> None:
    keys = set(obj.keys())
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise MalformedDocument(f"{what} missing keys: {sorted(missing)}")
    if unknown:
        raise MalformedDocument(f"{what} has unknown keys: {sorted(unknown)}")


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise MalformedDocument(message)


def node_from_plain(obj: Any) -> NodeRecord:
    _expect(isinstance(obj, dict), "node must be an object")
    _require_keys(obj, _NODE_KEYS_REQUIRED, _NODE_KEYS_OPTIONAL, "node")
    _expect(isinstance(obj["id"], str), "node id must be a string")
    _expect(isinstance(obj["typeKey"], str) and obj["typeKey"] != "", "node typeKey must be a non-empty string")
    _expect(isinstance(obj["label"], str), "node label must be a string")
    _expect(isinstance(obj["attributes"], dict), "node attributes must be an object")
    geometry_obj = obj["geometry"]
    _expect(isinstance(geometry_obj, dict) and set(geometry_obj) == {"x", "y", "w", "h"}, "node geometry must have exactly x,y,w,h")
    for f in ("x", "y", "w", "h"):
        _expect(isinstance(geometry_obj[f], (int, float)) and not isinstance(geometry_obj[f], bool), f"geometry {f} must be a number")
    _expect(isinstance(obj["createdAt"], str) and isinstance(obj["modifiedAt"], str), "timestamps must be strings")
    container_id = obj.get("containerId")
    if container_id is not None:
        _expect(isinstance(container_id, str), "containerId must be a string")
    content_ref = None
    if obj.get("contentRef") is not None:
        ref = obj["contentRef"]
        _expect(isinstance(ref, dict) and set(ref) == {"mime", "uri"}, "contentRef must have exactly mime,uri")
        _expect(isinstance(ref["mime"], str) and isinstance(ref["uri"], str), "contentRef fields must be strings")
        content_ref = ContentRef(mime=ref["mime"], uri=ref["uri"])
    alias_of = None
    if obj.get("aliasOf") is not None:
        ref = obj["aliasOf"]
        _expect(isinstance(ref, dict) and set(ref) == {"workspaceUri", "nodeId"}, "aliasOf must have exactly workspaceUri,nodeId")
        _expect(isinstance(ref["workspaceUri"], str) and isinstance(ref["nodeId"], str), "aliasOf fields must be strings")
        alias_of = AliasRef(workspace_uri=ref["workspaceUri"], node_id=ref["nodeId"])
    return NodeRecord(
        id=obj["id"],
        type_key=obj["typeKey"],
        label=obj["label"],
        attributes={k: from_tagged(v) for k, v in obj["attributes"].items()},
        geometry=Geometry(
            x=float(geometry_obj["x"]),
            y=float(geometry_obj["y"]),
            w=float(geometry_obj["w"]),
            h=float(geometry_obj["h"]),
        ),
        container_id=container_id,
        content_ref=content_ref,
        alias_of=alias_of,
        created_at=obj["createdAt"],
        modified_at=obj["modifiedAt"],
    )


def link_from_plain(obj: Any) -> LinkRecord:
    _expect(isinstance(obj, dict), "link must be an object")
    _require_keys(obj, _LINK_KEYS_REQUIRED, _LINK_KEYS_OPTIONAL, "link")
    for f in ("id", "typeKey", "fromNodeId", "toNodeId", "label"):
        _expect(isinstance(obj[f], str), f"link {f} must be a string")
    _expect(obj["typeKey"] != "", "link typeKey must be non-empty")
    _expect(isinstance(obj["attributes"], dict), "link attributes must be an object")
    for f in ("fromPort", "toPort"):
        if obj.get(f) is not None:
            _expect(isinstance(obj[f], str), f"link {f} must be a string")
    return LinkRecord(
        id=obj["id"],
        type_key=obj["typeKey"],
        from_node_id=obj["fromNodeId"],
        to_node_id=obj["toNodeId"],
        from_port=obj.get("fromPort"),
        to_port=obj.get("toPort"),
        label=obj["label"],
        attributes={k: from_tagged(v) for k, v in obj["attributes"].items()},
    )


def workspace_from_plain(obj: Any) -> WorkspaceDoc:
    _expect(isinstance(obj, dict), "workspace document must be an object")
    keys = set(obj.keys())
    if keys != _DOC_KEYS:
        extra, missing = sorted(keys - _DOC_KEYS), sorted(_DOC_KEYS - keys)
        raise MalformedDocument(f"workspace keys must be exactly {sorted(_DOC_KEYS)}; extra={extra} missing={missing}")
    _expect(isinstance(obj["uri"], str) and obj["uri"] != "", "uri must be a non-empty string")
    _expect(isinstance(obj["title"], str), "title must be a string")
    _expect(isinstance(obj["revision"], int) and not isinstance(obj["revision"], bool), "revision must be an integer")
    _expect(isinstance(obj["dslRefs"], list) and all(isinstance(x, str) for x in obj["dslRefs"]), "dslRefs must be a list of strings")
    vp = obj["viewport"]
    _expect(isinstance(vp, dict) and set(vp) == {"panX", "panY", "zoom"}, "viewport must have exactly panX,panY,zoom")
    for f in ("panX", "panY", "zoom"):
        _expect(isinstance(vp[f], (int, float)) and not isinstance(vp[f], bool), f"viewport {f} must be a number")
    _expect(isinstance(obj["nodes"], list), "nodes must be an array")
    _expect(isinstance(obj["links"], list), "links must be an array")

    nodes: dict[str, NodeRecord] = {}
    for raw in obj["nodes"]:
        node = node_from_plain(raw)
        if node.id == "":
            raise InvariantViolation("id-nonempty", "")
        if node.id in nodes:
            raise InvariantViolation("id-unique", node.id)
        nodes[node.id] = node
    links: dict[str, LinkRecord] = {}
    for raw in obj["links"]:
        link = link_from_plain(raw)
        if link.id == "":
            raise InvariantViolation("id-nonempty", "")
        if link.id in links:
            raise InvariantViolation("id-unique", link.id)
        links[link.id] = link

    ws = WorkspaceDoc(
        uri=obj["uri"],
        title=obj["title"],
        revision=obj["revision"],
        dsl_refs=tuple(obj["dslRefs"]),
        viewport=Viewport(pan_x=float(vp["panX"]), pan_y=float(vp["panY"]), zoom=float(vp["zoom"])),
        nodes=nodes,
        links=links,
    )
    ensure_invariants(ws)
    return ws


def deserialize_workspace(data: bytes | str) -> WorkspaceDoc:
    """Parse canonical bytes; reports the first violated rule on bad documents."""
    try:
        obj = loads_strict(data)
    except ValueError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    return workspace_from_plain(obj)


def copy_workspace(ws: WorkspaceDoc) -> WorkspaceDoc:
    """Deep value copy via the plain form (used for snapshots)."""
    return workspace_from_plain(workspace_to_plain(ws))


def structurally_equal(a: WorkspaceDoc, b: WorkspaceDoc) -> bool:
    """Equality over everything except timestamps (metadata only)."""
    return workspace_to_plain(a, include_timestamps=False) == workspace_to_plain(
        b, include_timestamps=False
    )


# --- aliases -------------------------------------------------------------------

def resolve_alias(
    ws: WorkspaceDoc,
    node_id: str,
    resolver: Callable[[str], WorkspaceDoc],
) -> NodeRecord:
    """Follow alias chains (depth <= 8) and present the target under the
    alias's own label and geometry."""
    node = ws.nodes.get(node_id)
    if node is None:
        raise NotFound(f"node {node_id!r} does not exist")
    origin = node
    current_ws = ws
    current = node
    hops = 0
    while current.alias_of is not None:
        hops += 1
        if hops > MAX_ALIAS_DEPTH:
            raise AliasDepthExceeded(f"alias chain from {node_id!r} exceeds depth {MAX_ALIAS_DEPTH}")
        target_uri = current.alias_of.workspace_uri
        if target_uri != current_ws.uri:
            try:
                current_ws = resolver(target_uri)
            except Exception as exc:
                raise BrokenAlias(f"workspace {target_uri!r} not reachable: {exc}") from exc
        target = current_ws.nodes.get(current.alias_of.node_id)
        if target is None:
            raise BrokenAlias(
                f"alias target {current.alias_of.node_id!r} missing in {target_uri!r}"
            )
        current = target
    if current is origin:
        return origin
    return replace(current, geometry=origin.geometry, label=origin.label)
