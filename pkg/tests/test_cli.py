import json
import subprocess
import sys
import time
import urllib.request

from hgos.cli import main
from hgos.codegen import serialize_templateset, templateset_from_plain
from hgos.dsl import serialize_definition
from hgos.model import create_node, new_workspace, serialize_workspace

from conftest import NOW, make_test_dsl


def test_generate_subcommand(tmp_path, capsys):
    ws = new_workspace("proj/demo", dsl_refs=("dsl:test",))
    for i in range(3):
        ws, _ = create_node(
            ws,
            {"id": f"n{i}", "typeKey": "note", "attributes": {"name": f"name{i}"}},
            now=NOW,
        )
    ws_path = tmp_path / "demo.hgws.json"
    ws_path.write_bytes(serialize_workspace(ws))
    (tmp_path / "test.hgdsl.json").write_bytes(serialize_definition(make_test_dsl()))
    templates = templateset_from_plain(
        {
            "templates": [
                {
                    "id": "names",
                    "selector": {"nodeTypeKey": "note"},
                    "header": "",
                    "body": "${attr.name}\n",
                    "footer": "total ${#count}\n",
                    "outputPath": "names.txt",
                }
            ]
        }
    )
    tpl_path = tmp_path / "set.hgtpl.json"
    tpl_path.write_bytes(serialize_templateset(templates))
    out_dir = tmp_path / "out"

    code = main(
        ["generate", "--workspace", str(ws_path), "--templates", str(tpl_path), "--out", str(out_dir)]
    )
    assert code == 0
    assert (out_dir / "names.txt").read_text() == "name0\nname1\nname2\ntotal 3\n"
    captured = capsys.readouterr()
    assert "names.txt" in captured.out


def test_generate_error_exit_code(tmp_path, capsys):
    code = main(
        ["generate", "--workspace", str(tmp_path / "missing.hgws.json"), "--templates", "x", "--out", "y"]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_serve_subcommand_over_real_process(tmp_path):
    env_root = tmp_path / "rootdir"
    env_root.mkdir()
    proc = subprocess.Popen(
        [sys.executable, "-m", "hgos.cli", "serve", "--root", str(tmp_path / "ignored"), "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        env={"HGOS_ROOT": str(env_root), "PATH": "/usr/bin:/bin"},
        text=True,
    )
    try:
        line = proc.stdout.readline()
        # HGOS_ROOT wins over --root
        assert str(env_root) in line
        port = int(line.rsplit(":", 1)[1].strip().rstrip("/"))
        deadline = time.time() + 5
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/workspaces") as response:
                    assert json.loads(response.read()) == {"entries": []}
                break
            except OSError:
                time.sleep(0.05)
        else:
            raise AssertionError("server did not come up")
    finally:
        proc.terminate()
        proc.wait(timeout=5)
