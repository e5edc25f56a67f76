import sys
import threading
import time

import pytest

from hgos.dsl import DslRegistry
from hgos.errors import (
    CommandFailed,
    MalformedDocument,
    NotFound,
    PathEscape,
    RevisionConflict,
)
from hgos.model import create_node, deserialize_workspace, new_workspace, structurally_equal
from hgos.store import WorkspaceStore
from hgos.values import to_tagged

from conftest import NOW, make_test_dsl


def make_store(tmp_path) -> WorkspaceStore:
    registry = DslRegistry()
    registry.register(make_test_dsl())
    return WorkspaceStore(tmp_path, registry=registry)


def seed_workspace(store: WorkspaceStore, uri="proj/demo"):
    ws = new_workspace(uri, title="Demo", dsl_refs=("dsl:test",))
    ws, _ = create_node(ws, {"id": "seed", "typeKey": "note"}, now=NOW)
    store.put_workspace(uri, ws, None)
    return uri


def tagged(value):
    return to_tagged(value)


# --- put/get ----------------------------------------------------------------------

def test_put_then_get_round_trip(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    doc = store.get_workspace(uri)
    assert doc.revision == 0
    updated = new_workspace(uri, title="Demo v2", dsl_refs=("dsl:test",))
    new_rev = store.put_workspace(uri, updated, expected_revision=0)
    assert new_rev == 1
    again = store.get_workspace(uri)
    assert again.title == "Demo v2"
    assert again.revision == 1
    assert structurally_equal(
        again, new_workspace(uri, title="Demo v2", dsl_refs=("dsl:test",))
    ) is False  # revision differs
    data, revision = store.get_workspace_bytes(uri)
    assert revision == 1
    assert deserialize_workspace(data).title == "Demo v2"


def test_put_requires_matching_revision(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    doc = store.get_workspace(uri)
    with pytest.raises(RevisionConflict):
        store.put_workspace(uri, doc, expected_revision=7)
    with pytest.raises(RevisionConflict):
        store.put_workspace(uri, doc, expected_revision=None)


def test_get_missing_workspace(tmp_path):
    store = make_store(tmp_path)
    with pytest.raises(NotFound):
        store.get_workspace("nope/none")


def test_path_traversal_rejected(tmp_path):
    store = make_store(tmp_path)
    for bad in ("../etc/passwd", "/abs", "a/../b", "a//b", "..", "a\\b"):
        with pytest.raises(PathEscape):
            store.path_for(bad)


# --- command batches ------------------------------------------------------------------

def test_apply_commands_batch(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    result = store.apply_commands(
        uri,
        [
            {"op": "createNode", "spec": {"id": "a", "typeKey": "note"}},
            {"op": "createNode", "spec": {"id": "b", "typeKey": "note",
                                          "attributes": {"name": tagged("beta")}}},
            {"op": "createLink", "spec": {"id": "l1", "typeKey": "flow",
                                          "fromNodeId": "a", "toNodeId": "b"}},
        ],
        expected_revision=0,
    )
    assert result["revision"] == 1
    assert result["results"][0] == {"nodeId": "a"}
    assert result["results"][2] == {"linkId": "l1"}
    doc = store.get_workspace(uri)
    assert doc.nodes["b"].attributes["name"] == "beta"
    assert doc.revision == 1


def test_apply_commands_revision_conflict_leaves_file(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    before = store.path_for(uri).read_bytes()
    with pytest.raises(RevisionConflict):
        store.apply_commands(uri, [{"op": "createNode", "spec": {"typeKey": "note"}}], expected_revision=4)
    assert store.path_for(uri).read_bytes() == before


def test_apply_commands_batch_atomic_on_failure(tmp_path):
    # third command breaks the contains rule; the whole batch must be rejected
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    before = store.path_for(uri).read_bytes()
    with pytest.raises(CommandFailed) as err:
        store.apply_commands(
            uri,
            [
                {"op": "createNode", "spec": {"id": "c1", "typeKey": "container"}},
                {"op": "createNode", "spec": {"id": "i1", "typeKey": "item"}},
                {"op": "createLink", "spec": {"id": "bad", "typeKey": "contains",
                                              "fromNodeId": "i1", "toNodeId": "c1"}},
            ],
            expected_revision=0,
        )
    assert err.value.index == 2
    assert store.path_for(uri).read_bytes() == before
    assert store.get_workspace(uri).revision == 0


def test_other_commands(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    store.apply_commands(
        uri,
        [
            {"op": "setAttribute", "id": "seed", "name": "priority", "value": tagged(4.0)},
            {"op": "moveNode", "id": "seed", "x": 15, "y": -3},
            {"op": "setViewport", "panX": 1.0, "panY": 2.0, "zoom": 0.5},
        ],
        expected_revision=0,
    )
    doc = store.get_workspace(uri)
    assert doc.nodes["seed"].attributes["priority"] == 4.0
    assert doc.nodes["seed"].geometry.x == 15.0
    assert doc.viewport.zoom == 0.5
    store.apply_commands(
        uri,
        [
            {"op": "setAttribute", "id": "seed", "name": "priority", "value": None},
            {"op": "deleteNode", "id": "seed", "cascade": True},
        ],
        expected_revision=1,
    )
    assert store.get_workspace(uri).nodes == {}


def test_unknown_command_rejected(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    with pytest.raises(CommandFailed) as err:
        store.apply_commands(uri, [{"op": "explode"}], expected_revision=0)
    assert err.value.cause.code == "MalformedDocument"


# --- dataflow runs ----------------------------------------------------------------------

def dataflow_store(tmp_path):
    store = WorkspaceStore(tmp_path)
    ws = new_workspace("flows/chain", dsl_refs=("builtin:dataflow",))
    ws, _ = create_node(ws, {"id": "c1", "typeKey": "processor",
                             "attributes": {"op": "constant", "params": {"value": 2.0}}}, now=NOW)
    ws, _ = create_node(ws, {"id": "c2", "typeKey": "processor",
                             "attributes": {"op": "constant", "params": {"value": 3.0}}}, now=NOW)
    ws, _ = create_node(ws, {"id": "sum", "typeKey": "processor", "attributes": {"op": "add"}}, now=NOW)
    from hgos.model import create_link

    ws, _ = create_link(ws, {"id": "l1", "typeKey": "data", "fromNodeId": "c1",
                             "toNodeId": "sum", "fromPort": "out", "toPort": "in1"})
    ws, _ = create_link(ws, {"id": "l2", "typeKey": "data", "fromNodeId": "c2",
                             "toNodeId": "sum", "fromPort": "out", "toPort": "in2"})
    store.put_workspace("flows/chain", ws, None)
    return store


def test_run_dataflow_delegates_and_persists_trace(tmp_path):
    store = dataflow_store(tmp_path)
    result = store.run_dataflow("flows/chain", limits={"maxTicks": 10})
    assert result["outputs"]["sum"] == [5.0]
    assert result["terminal"] == "completed"
    trace = store.get_trace(result["runId"])
    assert [e.node_id for e in trace.events] == ["c1", "c2", "sum"]
    assert (tmp_path / "flows" / "chain.hgtrace.json").exists()


def test_unknown_run_id(tmp_path):
    store = dataflow_store(tmp_path)
    with pytest.raises(NotFound):
        store.get_trace("nope")


def test_snapshot_isolation_under_concurrent_mutation(tmp_path):
    # ext sleeps mid-run while the adder's params are mutated; the run must
    # keep computing on the snapshot it captured at start
    store = WorkspaceStore(tmp_path)
    ws = new_workspace("flows/slow", dsl_refs=("builtin:dataflow",))
    sleeper = [
        sys.executable,
        "-c",
        (
            "import sys, json, time; line = sys.stdin.readline(); time.sleep(0.4);"
            "print(json.dumps({'outputs': {'out': json.loads(line)['inputs']['in'] * 2}}))"
        ),
    ]
    ws, _ = create_node(ws, {"id": "c1", "typeKey": "processor",
                             "attributes": {"op": "constant", "params": {"value": 5.0}}}, now=NOW)
    ws, _ = create_node(ws, {"id": "ext", "typeKey": "processor",
                             "attributes": {"command": sleeper, "timeoutMs": 5000.0}}, now=NOW)
    ws, _ = create_node(ws, {"id": "plus", "typeKey": "processor",
                             "attributes": {"op": "add", "params": {"in2": 1.0}}}, now=NOW)
    from hgos.model import create_link

    ws, _ = create_link(ws, {"id": "l1", "typeKey": "data", "fromNodeId": "c1",
                             "toNodeId": "ext", "fromPort": "out", "toPort": "in"})
    ws, _ = create_link(ws, {"id": "l2", "typeKey": "data", "fromNodeId": "ext",
                             "toNodeId": "plus", "fromPort": "out", "toPort": "in1"})
    store.put_workspace("flows/slow", ws, None)

    results = {}

    def run_it():
        results["run"] = store.run_dataflow("flows/slow", limits={"maxTicks": 10})

    thread = threading.Thread(target=run_it)
    thread.start()
    time.sleep(0.15)  # run is inside the external sleep; adder has not fired
    store.apply_commands(
        "flows/slow",
        [{"op": "setAttribute", "id": "plus", "name": "params",
          "value": tagged({"in2": 100.0})}],
        expected_revision=0,
    )
    thread.join(timeout=10)
    assert results["run"]["outputs"]["plus"] == [11.0]  # 5*2 + 1, not +100
    assert store.get_workspace("flows/slow").nodes["plus"].attributes["params"] == {"in2": 100.0}


# --- sessions --------------------------------------------------------------------------

def test_fresh_session(tmp_path):
    store = make_store(tmp_path)
    session = store.get_session()
    assert session["history"] == []
    assert session["historyCursor"] == 0
    assert store.get_session()["sessionId"] == session["sessionId"]


def test_navigation_history_semantics(tmp_path):
    # navigate a, b, c; go back once; navigate d => history [a, b, d]
    store = make_store(tmp_path)
    for uri in ("a", "b", "c"):
        session = store.record_navigation(uri, now=NOW)
    assert [h["uri"] for h in session["history"]] == ["a", "b", "c"]
    assert session["historyCursor"] == 2
    session["historyCursor"] = 1  # back
    store.put_session(session)
    session = store.record_navigation("d", now=NOW)
    assert [h["uri"] for h in session["history"]] == ["a", "b", "d"]
    assert session["historyCursor"] == 2


def test_session_survives_restart(tmp_path):
    store = make_store(tmp_path)
    store.record_navigation("a", now=NOW)
    expected = store.get_session()
    reopened = WorkspaceStore(tmp_path)
    assert reopened.get_session() == expected


def test_session_cursor_validation(tmp_path):
    store = make_store(tmp_path)
    session = store.get_session()
    session["historyCursor"] = 5
    with pytest.raises(MalformedDocument):
        store.put_session(session)


# --- index and persistence ----------------------------------------------------------------

def test_omnispace_index(tmp_path):
    store = make_store(tmp_path)
    seed_workspace(store, "proj/demo")
    seed_workspace(store, "notes")
    index = store.omnispace_index()
    assert [e["uri"] for e in index["entries"]] == ["notes", "proj/demo"]
    entry = index["entries"][0]
    assert entry["nodeCount"] == 1
    assert entry["linkCount"] == 0
    assert entry["title"] == "Demo"
    assert entry["modifiedAt"].endswith("Z")


def test_store_reload_after_restart(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    store.apply_commands(uri, [{"op": "createNode", "spec": {"id": "x", "typeKey": "note"}}], 0)
    reopened = make_store(tmp_path)
    doc = reopened.get_workspace(uri)
    assert set(doc.nodes) == {"seed", "x"}
    assert doc.revision == 1


# --- concurrency smoke (the full criterion runs in the acceptance suite) -------------------

def test_concurrent_writers_and_reader(tmp_path):
    store = make_store(tmp_path)
    uri = seed_workspace(store)
    writers, batches = 4, 10
    stop = threading.Event()
    snapshots = {"count": 0, "bad": 0}

    def reader():
        path = store.path_for(uri)
        while not stop.is_set():
            try:
                deserialize_workspace(path.read_bytes())
                snapshots["count"] += 1
            except Exception:
                snapshots["bad"] += 1

    def writer(w):
        for i in range(batches):
            command = {"op": "createNode", "spec": {"id": f"w{w}-{i}", "typeKey": "note"}}
            while True:
                revision = store.get_workspace(uri).revision
                try:
                    store.apply_commands(uri, [command], revision)
                    break
                except RevisionConflict:
                    continue

    reader_thread = threading.Thread(target=reader)
    reader_thread.start()
    threads = [threading.Thread(target=writer, args=(w,)) for w in range(writers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    stop.set()
    reader_thread.join()

    final = store.get_workspace(uri)
    assert final.revision == writers * batches
    expected = {"seed"} | {f"w{w}-{i}" for w in range(writers) for i in range(batches)}
    assert set(final.nodes) == expected
    assert snapshots["bad"] == 0
    assert snapshots["count"] > 0
