from __future__ import annotations

import random
import string
from dataclasses import replace

import pytest

from hgos.dsl import (
    AttrDef,
    DslDefinition,
    DslRegistry,
    LinkTypeDef,
    LinkVisual,
    NodeTypeDef,
    NodeVisual,
)
from hgos.model import WorkspaceDoc, create_link, create_node, new_workspace, set_viewport
from hgos.values import Uri

NOW = "2025-06-01T12:00:00Z"


def make_test_dsl() -> DslDefinition:
    return DslDefinition(
        uri="dsl:test",
        name="Test",
        version="1",
        node_types=(
            NodeTypeDef(
                key="container",
                display_name="Container",
                visual=NodeVisual(shape="container", fill_color="#ECEFF1"),
                allows_containment=True,
                allowed_child_type_keys=("container", "item"),
            ),
            NodeTypeDef(
                key="item",
                display_name="Item",
                visual=NodeVisual(fill_color="#FFFFFF"),
            ),
            NodeTypeDef(
                key="note",
                display_name="Note",
                visual=NodeVisual(fill_color="#FFF59D"),
                attribute_schema=(
                    AttrDef("done", "flag", default=False),
                    AttrDef("name", "text"),
                    AttrDef("priority", "number"),
                ),
            ),
            NodeTypeDef(
                key="task",
                display_name="Task",
                visual=NodeVisual(fill_color="#C5E1A5"),
                attribute_schema=(
                    AttrDef("name", "text", required=True),
                    AttrDef("priority", "number"),
                ),
            ),
        ),
        link_types=(
            LinkTypeDef(key="contains", source_type_keys=("container",), target_type_keys=("item",)),
            LinkTypeDef(key="flow", visual=LinkVisual(color="#1565C0")),
            LinkTypeDef(key="single-in", max_in_per_target=1),
            LinkTypeDef(key="single-out", max_out_per_source=1),
        ),
    )


@pytest.fixture
def dsl():
    return make_test_dsl()


@pytest.fixture
def registry():
    reg = DslRegistry()
    reg.register(make_test_dsl())
    return reg


@pytest.fixture
def dsls(dsl):
    return [dsl]


# --- dataflow workspace builder -------------------------------------------------

def dataflow_ws(uri, processors, channels) -> WorkspaceDoc:
    """processors: [(id, attrs)], channels: [(id, src, srcPort, dst, dstPort, typeKey, attrs)]."""
    ws = new_workspace(uri, dsl_refs=("builtin:dataflow",))
    for nid, attrs in processors:
        ws, _ = create_node(
            ws, {"id": nid, "typeKey": "processor", "label": nid, "attributes": attrs}, now=NOW
        )
    for lid, src, src_port, dst, dst_port, type_key, attrs in channels:
        spec = {
            "id": lid,
            "typeKey": type_key,
            "fromNodeId": src,
            "toNodeId": dst,
            "attributes": attrs,
        }
        if src_port is not None:
            spec["fromPort"] = src_port
        if dst_port is not None:
            spec["toPort"] = dst_port
        ws, _ = create_link(ws, spec)
    return ws


def chain_ws() -> WorkspaceDoc:
    """constant -> add <- constant, per the arithmetic example."""
    return dataflow_ws(
        "ws/chain",
        [
            ("c1", {"op": "constant", "params": {"value": 2.0}}),
            ("c2", {"op": "constant", "params": {"value": 3.0}}),
            ("sum", {"op": "add"}),
        ],
        [
            ("l1", "c1", "out", "sum", "in1", "data", {}),
            ("l2", "c2", "out", "sum", "in2", "data", {}),
        ],
    )


def counter_ws() -> WorkspaceDoc:
    """add-one delay cycle seeded with 0, per the counter example."""
    return dataflow_ws(
        "ws/counter",
        [("acc", {"op": "add", "params": {"in2": 1.0}})],
        [("loop", "acc", "out", "acc", "in1", "delay", {"initialToken": 0.0})],
    )


# --- seeded random workspaces ------------------------------------------------------

_ATTR_POOL = ("name", "priority", "weight", "kind", "tags", "meta", "flag", "w", "h", "ref")
_WORDS = ("alpha", "beta", "gamma", "delta", "node", "task", "Zebra", "émile", "日本語", "")
_TIMES = ("2025-01-01T00:00:00Z", "2025-02-02T02:02:02Z", "2025-03-03T03:03:03Z")


def random_value(rng: random.Random, depth: int = 0):
    kinds = ["text", "number", "flag", "uri"]
    if depth < 2:
        kinds += ["list", "map"]
    kind = rng.choice(kinds)
    if kind == "text":
        return rng.choice(_WORDS) + rng.choice(("", "-x", "!"))
    if kind == "number":
        style = rng.random()
        if style < 0.3:
            return float(rng.randint(-100, 100))
        if style < 0.6:
            return rng.random() * 1000.0 - 500.0
        if style < 0.8:
            return rng.random() * 1e-8
        return rng.random() * 1e17
    if kind == "flag":
        return rng.random() < 0.5
    if kind == "uri":
        return Uri(f"ws/{rng.choice(_WORDS) or 'w'}#{rng.randint(0, 99)}")
    if kind == "list":
        return [random_value(rng, depth + 1) for _ in range(rng.randint(0, 3))]
    return {
        "".join(rng.choice(string.ascii_lowercase) for _ in range(3)): random_value(rng, depth + 1)
        for _ in range(rng.randint(0, 3))
    }


def random_workspace(seed: int, node_count: int = None, link_count: int = None) -> WorkspaceDoc:
    rng = random.Random(seed)
    n = node_count if node_count is not None else rng.randint(0, 12)
    ws = new_workspace(f"ws/gen{seed}", title=f"generated {seed}")
    ws = replace(ws, revision=rng.randint(0, 100))
    ws = set_viewport(ws, rng.random() * 100, rng.random() * 100, 0.25 + rng.random() * 3)
    ids = [f"n{idx:03d}" for idx in range(n)]
    rng.shuffle(ids)
    placed: list[str] = []
    for nid in ids:
        spec = {
            "id": nid,
            "typeKey": rng.choice(("note", "task", "container", "item")),
            "label": rng.choice(_WORDS),
            "geometry": {
                "x": rng.random() * 2000 - 1000,
                "y": rng.random() * 2000 - 1000,
                "w": rng.random() * 300,
                "h": rng.random() * 200,
            },
        }
        roll = rng.random()
        if roll < 0.1:
            spec["aliasOf"] = {"workspaceUri": ws.uri, "nodeId": rng.choice(placed) if placed else nid}
        else:
            spec["attributes"] = {
                name: random_value(rng)
                for name in rng.sample(_ATTR_POOL, rng.randint(0, 4))
            }
            if roll < 0.2:
                spec["contentRef"] = {"mime": "text/plain", "uri": f"files/{nid}.txt"}
        if placed and rng.random() < 0.3:
            spec["containerId"] = rng.choice(placed)
        ws, _ = create_node(ws, spec, now=rng.choice(_TIMES))
        placed.append(nid)
    m = link_count if link_count is not None else rng.randint(0, n * 2 if n else 0)
    used = set()
    for idx in range(m):
        if not placed:
            break
        src, dst = rng.choice(placed), rng.choice(placed)
        port = f"p{idx}" if rng.random() < 0.5 else None
        key = (src, port, dst, None, "flow")
        if key in used:
            continue
        used.add(key)
        spec = {
            "id": f"l{idx:03d}",
            "typeKey": "flow",
            "fromNodeId": src,
            "toNodeId": dst,
            "label": rng.choice(_WORDS),
            "attributes": {
                name: random_value(rng) for name in rng.sample(_ATTR_POOL, rng.randint(0, 2))
            },
        }
        if port is not None:
            spec["fromPort"] = port
        ws, _ = create_link(ws, spec)
    return ws


# --- seeded random dataflow DAGs ----------------------------------------------------

def statechart_dsl() -> DslDefinition:
    """Parallel state-flow shape used by the generation-scale synthetic model."""
    return DslDefinition(
        uri="dsl:statechart",
        name="Statechart",
        version="1",
        node_types=(
            NodeTypeDef(key="entry", attribute_schema=(AttrDef("name", "text", required=True),)),
            NodeTypeDef(key="intent", attribute_schema=(AttrDef("name", "text", required=True),)),
            NodeTypeDef(key="misc", attribute_schema=(AttrDef("name", "text"),)),
        ),
        link_types=(
            LinkTypeDef(key="wire"),
            LinkTypeDef(key="flow"),
        ),
    )


def generation_scale_workspace() -> WorkspaceDoc:
    """4246 nodes / 3890 links: 2016 entry + 1200 intent + 1030 misc nodes,
    2325 wire + 1565 flow links. Direct construction keeps setup fast."""
    from hgos.model import Geometry, LinkRecord, NodeRecord, Viewport

    counts = (("entry", 2016), ("intent", 1200), ("misc", 1030))
    nodes = {}
    ids = []
    serial = 0
    for type_key, count in counts:
        for _ in range(count):
            nid = f"d{serial:04d}"
            serial += 1
            nodes[nid] = NodeRecord(
                id=nid,
                type_key=type_key,
                label=f"{type_key} {nid}",
                attributes={"name": f"{type_key}_{nid}"},
                geometry=Geometry(float(serial % 211) * 10.0, float(serial % 97) * 12.0, 120.0, 60.0),
                created_at=NOW,
                modified_at=NOW,
            )
            ids.append(nid)
    links = {}
    for idx in range(3890):
        type_key = "wire" if idx < 2325 else "flow"
        lid = f"w{idx:04d}"
        links[lid] = LinkRecord(
            id=lid,
            type_key=type_key,
            from_node_id=ids[idx % len(ids)],
            to_node_id=ids[(idx * 7 + 1) % len(ids)],
            from_port=f"p{idx}",
            attributes={"weight": float(idx % 13) / 4.0} if type_key == "wire" else {},
        )
    return WorkspaceDoc(
        uri="ws/generation-scale",
        title="generation scale model",
        revision=0,
        dsl_refs=("dsl:statechart",),
        viewport=Viewport(),
        nodes=nodes,
        links=links,
    )


def large_dataflow_workspace(seed: int = 414355) -> WorkspaceDoc:
    """414 processors / 355 channels: 59 constant sources feeding chains."""
    rng = random.Random(seed)
    processors = []
    channels = []
    for idx in range(59):
        processors.append((f"s{idx:03d}", {"op": "constant", "params": {"value": float(idx)}}))
    for idx in range(355):
        nid = f"p{idx:03d}"
        upstream = rng.choice(processors[: len(processors)])[0]
        op = rng.choice(("passthrough", "log", "add", "multiply"))
        if op in ("add", "multiply"):
            attrs = {"op": op, "params": {"in2": float(rng.randint(1, 5))}}
            port = "in1"
        else:
            attrs = {"op": op}
            port = "in"
        processors.append((nid, attrs))
        channels.append((f"c{idx:03d}", upstream, "out", nid, port, "data", {}))
    return dataflow_ws("ws/large-dataflow", processors, channels)


def random_dag_workspace(seed: int, max_nodes: int = 12) -> WorkspaceDoc:
    """Random acyclic dataflow model over the builtin ops the oracle knows.

    Tracks each node's output kind so numeric ops only consume numbers; the
    wiring picks earlier nodes only, keeping the graph acyclic by construction.
    """
    rng = random.Random(seed)
    n = rng.randint(1, max_nodes)
    processors = []
    channels = []
    kind_of_node: dict[str, str] = {}

    for idx in range(n):
        nid = f"p{idx:02d}"
        upstream = [p for p, _ in processors]
        numeric_upstream = [p for p in upstream if kind_of_node[p] == "num"]
        choices = ["constant"]
        if upstream:
            choices += ["passthrough", "log", "compare", "merge"]
        if numeric_upstream:
            choices += ["add", "multiply"]
        op = rng.choice(choices)
        if op == "constant":
            processors.append((nid, {"op": "constant", "params": {"value": float(rng.randint(-5, 20))}}))
            kind_of_node[nid] = "num"
            continue
        if op in ("passthrough", "log"):
            wiring = [("in", rng.choice(upstream))]
            attrs = {"op": op}
            kind_of_node[nid] = kind_of_node[wiring[0][1]]
        elif op == "merge":
            wiring = [(p, rng.choice(upstream)) for p in rng.sample(["in1", "in2"], rng.randint(1, 2))]
            attrs = {"op": op}
            kind_of_node[nid] = "list"
        elif op == "compare":
            wiring = [(p, rng.choice(upstream)) for p in rng.sample(["in1", "in2"], rng.randint(1, 2))]
            attrs = {"op": op, "params": {"in1": float(rng.randint(0, 9)), "in2": float(rng.randint(0, 9))}}
            kind_of_node[nid] = "flag"
        else:  # add | multiply over numeric sources only
            wiring = [(p, rng.choice(numeric_upstream)) for p in rng.sample(["in1", "in2"], rng.randint(1, 2))]
            attrs = {"op": op, "params": {"in1": float(rng.randint(0, 9)), "in2": float(rng.randint(0, 9))}}
            kind_of_node[nid] = "num"
        processors.append((nid, attrs))
        for port, src in wiring:
            lid = f"ch{len(channels):03d}"
            channels.append((lid, src, "out", nid, port, "data", {}))
    return dataflow_ws(f"ws/dag{seed}", processors, channels)
