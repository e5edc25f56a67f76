import pytest

from hgos.codegen import (
    Selector,
    Template,
    TemplateSet,
    deserialize_templateset,
    generate,
    line_count_of,
    render_template,
    serialize_templateset,
    templates_from_workspace,
    write_artifacts,
)
from hgos.errors import (
    MalformedDocument,
    OutputPathCollision,
    PathEscape,
    UnresolvedPlaceholder,
    ValidationFailed,
)
from hgos.model import create_link, create_node, new_workspace

from conftest import NOW, make_test_dsl

DSL = make_test_dsl()
DEFS = {"dsl:test": DSL}


def three_note_ws():
    ws = new_workspace("ws/gen", title="Gen", dsl_refs=("dsl:test",))
    for i in (1, 2, 3):
        ws, _ = create_node(
            ws,
            {
                "id": f"n{i}",
                "typeKey": "note",
                "label": f"Note {i}",
                "attributes": {"name": f"name{i}", "done": False},
            },
            now=NOW,
        )
    return ws


def test_body_renders_per_element_in_id_order():
    t = Template(id="t", selector=Selector("node", "note"), body="${id}:${label}\n", output_path="out.txt")
    artifact = render_template(t, three_note_ws(), DEFS)
    assert artifact.content == "n1:Note 1\nn2:Note 2\nn3:Note 3\n"
    assert artifact.line_count == 3
    assert artifact.source_element_ids == ("n1", "n2", "n3")


def test_missing_attribute_is_unresolved():
    t = Template(id="t", selector=Selector("node", "note"), body="${attr.missing}", output_path="out.txt")
    with pytest.raises(UnresolvedPlaceholder) as err:
        render_template(t, three_note_ws(), DEFS)
    assert err.value.placeholder == "${attr.missing}"
    assert err.value.element_id == "n1"


def test_outbound_traversal_uses_first_link_in_id_order():
    # s has two outbound flow links; la sorts before lb, so the target is t1
    ws = new_workspace("ws/gen", dsl_refs=("dsl:test",))
    ws, _ = create_node(ws, {"id": "s", "typeKey": "task", "attributes": {"name": "src"}}, now=NOW)
    ws, _ = create_node(ws, {"id": "t1", "typeKey": "note", "attributes": {"name": "first"}}, now=NOW)
    ws, _ = create_node(ws, {"id": "t2", "typeKey": "note", "attributes": {"name": "second"}}, now=NOW)
    ws, _ = create_link(ws, {"id": "la", "typeKey": "flow", "fromNodeId": "s", "toNodeId": "t1"})
    ws, _ = create_link(ws, {"id": "lb", "typeKey": "flow", "fromNodeId": "s", "toNodeId": "t2"})
    t = Template(
        id="t",
        selector=Selector("node", "task"),
        body="${out.flow.target.attr.name}\n",
        output_path="out.txt",
    )
    artifact = render_template(t, ws, DEFS)
    assert artifact.content == "first\n"


def test_traversal_without_link_is_unresolved():
    t = Template(
        id="t", selector=Selector("node", "note"), body="${out.flow.target.attr.name}", output_path="o.txt"
    )
    with pytest.raises(UnresolvedPlaceholder):
        render_template(t, three_note_ws(), DEFS)


def test_count_in_header_and_footer_only():
    t = Template(
        id="t",
        selector=Selector("node", "note"),
        header="count=${#count}\n",
        body="- ${id}\n",
        footer="end ${#count}\n",
        output_path="notes-${#count}.txt",
    )
    artifact = render_template(t, three_note_ws(), DEFS)
    assert artifact.content == "count=3\n- n1\n- n2\n- n3\nend 3\n"
    assert artifact.path == "notes-3.txt"
    bad = Template(id="b", selector=Selector("node", "note"), body="${#count}", output_path="o.txt")
    with pytest.raises(UnresolvedPlaceholder):
        render_template(bad, three_note_ws(), DEFS)


def test_workspace_selector():
    t = Template(
        id="t",
        selector=Selector("workspace"),
        body="workspace ${id} titled ${label}\n",
        output_path="ws.txt",
    )
    artifact = render_template(t, three_note_ws(), DEFS)
    assert artifact.content == "workspace ws/gen titled Gen\n"
    assert artifact.source_element_ids == ("ws/gen",)


def test_link_selector_renders_link_attributes():
    ws = three_note_ws()
    ws, _ = create_link(
        ws,
        {"id": "l1", "typeKey": "flow", "fromNodeId": "n1", "toNodeId": "n2", "attributes": {"weight": 2.5}},
    )
    t = Template(
        id="t", selector=Selector("link", "flow"), body="${id} ${attr.weight}\n", output_path="w.txt"
    )
    artifact = render_template(t, ws, DEFS)
    assert artifact.content == "l1 2.5\n"


def test_generate_empty_set():
    assert generate(three_note_ws(), DEFS, TemplateSet()) == []


def test_generate_requires_valid_model():
    ws = new_workspace("ws/gen", dsl_refs=("dsl:test",))
    ws, _ = create_node(ws, {"id": "t1", "typeKey": "task"}, now=NOW)  # missing required name
    with pytest.raises(ValidationFailed):
        generate(ws, DEFS, TemplateSet())


def test_generate_path_collision_writes_nothing(tmp_path):
    ts = TemplateSet(
        templates=(
            Template(id="a", selector=Selector("node", "note"), body="x", output_path="same.txt"),
            Template(id="b", selector=Selector("node", "note"), body="y", output_path="same.txt"),
        )
    )
    with pytest.raises(OutputPathCollision):
        generate(three_note_ws(), DEFS, ts)
    assert list(tmp_path.iterdir()) == []


def test_path_escape_rejected():
    for bad in ("../x.txt", "/abs.txt", "a/../b.txt", "a//b.txt"):
        t = Template(id="t", selector=Selector("node", "note"), body="x", output_path=bad)
        with pytest.raises(PathEscape):
            render_template(t, three_note_ws(), DEFS)


def test_generate_is_deterministic_and_order_independent():
    ts = TemplateSet(
        templates=(
            Template(id="t2", selector=Selector("node", "note"), body="${id}\n", output_path="b.txt"),
            Template(id="t1", selector=Selector("node", "note"), body="${attr.name}\n", output_path="a.txt"),
        )
    )
    first = generate(three_note_ws(), DEFS, ts)
    second = generate(three_note_ws(), DEFS, ts)
    assert first == second
    assert [a.path for a in first] == ["a.txt", "b.txt"]  # template-id order

    # artifact bytes do not depend on node insertion order
    from dataclasses import replace

    ws = three_note_ws()
    reordered = replace(ws, nodes={nid: ws.nodes[nid] for nid in reversed(sorted(ws.nodes))})
    assert generate(reordered, DEFS, ts) == first


def test_write_artifacts_nested_paths(tmp_path):
    ts = TemplateSet(
        templates=(
            Template(id="t", selector=Selector("node", "note"), body="${id}\n", output_path="deep/dir/out.txt"),
        )
    )
    artifacts = generate(three_note_ws(), DEFS, ts)
    written = write_artifacts(artifacts, tmp_path)
    assert written[0].read_text() == "n1\nn2\nn3\n"


def test_line_count_definition():
    assert line_count_of("") == 0
    assert line_count_of("a") == 1
    assert line_count_of("a\n") == 1
    assert line_count_of("a\nb") == 2
    assert line_count_of("a\nb\n") == 2


def test_unterminated_placeholder_rejected():
    t = Template(id="t", selector=Selector("node", "note"), body="${id", output_path="o.txt")
    with pytest.raises(MalformedDocument):
        render_template(t, three_note_ws(), DEFS)


def test_templateset_json_round_trip():
    ts = TemplateSet(
        templates=(
            Template(
                id="t1",
                selector=Selector("node", "note"),
                header="h\n",
                body="${id}\n",
                footer="f\n",
                output_path="o.txt",
            ),
            Template(id="t2", selector=Selector("workspace"), body="w", output_path="w.txt"),
            Template(id="t3", selector=Selector("link", "flow"), body="${id}", output_path="l.txt"),
        )
    )
    data = serialize_templateset(ts)
    assert deserialize_templateset(data) == ts


def test_templates_from_codegen_workspace():
    ws = new_workspace("ws/tpl", dsl_refs=("builtin:codegen",))
    ws, _ = create_node(
        ws,
        {
            "id": "tpl1",
            "typeKey": "template",
            "attributes": {
                "selector": "node:note",
                "body": "${id}\n",
                "outputPath": "notes.txt",
            },
        },
        now=NOW,
    )
    ts = templates_from_workspace(ws)
    assert len(ts.templates) == 1
    assert ts.templates[0].selector == Selector("node", "note")
    assert ts.templates[0].output_path == "notes.txt"
