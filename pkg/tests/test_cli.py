"""End-to-end CLI behavior."""

import json
import sys
import textwrap
import xml.etree.ElementTree as ET

import pytest

from ciukit.cli import main

LINEAR_BRIDGE = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        outs = [[0.3 * r[0] + 0.7 * r[1]] for r in req["inputs"]]
        sys.stdout.write(json.dumps({"outputs": outs}) + "\\n")
        sys.stdout.flush()
    """
)

CONSTANT_BRIDGE = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        sys.stdout.write(json.dumps({"outputs": [[0.5] for _ in req["inputs"]]}) + "\\n")
        sys.stdout.flush()
    """
)

UNIT_SPACE = json.dumps(
    {
        "features": [
            {"name": "x1", "kind": "numeric", "range": [0, 1]},
            {"name": "x2", "kind": "numeric", "range": [0, 1]},
        ],
        "outputs": [{"name": "y", "range": [0, 1]}],
    }
)


def run(args):
    return main(args)


def read_records(path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestExplain:
    def test_builtin_linear_json(self, tmp_path):
        out = tmp_path / "records.json"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu,influence", "--out", str(out),
        ]) == 0
        records = read_records(out)
        ciu_by_feature = {
            r["feature_set"][0]: r for r in records if r["method"] == "ciu"
        }
        assert ciu_by_feature["x1"]["ci"] == pytest.approx(0.3, abs=1e-9)
        assert ciu_by_feature["x2"]["ci"] == pytest.approx(0.7, abs=1e-9)
        assert ciu_by_feature["x1"]["cu"] == pytest.approx(0.7, abs=1e-9)
        influence = {
            r["feature_set"][0]: r for r in records if r["method"] == "influence"
        }
        assert influence["x1"]["influence"] == pytest.approx(0.12, abs=1e-9)
        assert influence["x2"]["influence"] == pytest.approx(0.42, abs=1e-9)
        assert all(r["seed"] == 42 for r in records)

    def test_xor_instance(self, tmp_path):
        out = tmp_path / "records.json"
        assert run([
            "explain", "--model", "xor", "--instance", "1,1",
            "--methods", "ciu", "--out", str(out),
        ]) == 0
        records = read_records(out)
        assert [r["ci"] for r in records] == [1.0, 1.0]
        assert [r["cu"] for r in records] == [0.0, 0.0]

    def test_joint_feature_set(self, tmp_path):
        out = tmp_path / "records.json"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--features", "x1+x2", "--methods", "ciu", "--out", str(out),
        ]) == 0
        records = read_records(out)
        assert records[0]["feature_set"] == ["x1", "x2"]
        assert records[0]["ci"] == 1.0

    def test_target_concept(self, tmp_path):
        out = tmp_path / "records.json"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--features", "x1", "--target-concept", "x1+x2",
            "--methods", "ciu", "--out", str(out),
        ]) == 0
        records = read_records(out)
        assert records[0]["target_set"] == ["x1", "x2"]
        assert records[0]["ci"] == pytest.approx(0.3, abs=1e-9)

    def test_shapley_and_surrogate_records(self, tmp_path):
        out = tmp_path / "records.json"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "shapley,surrogate", "--grid-step", "0.05",
            "--out", str(out),
        ]) == 0
        records = read_records(out)
        shap = {r["feature_set"][0]: r for r in records if r["method"] == "shapley"}
        assert shap["x1"]["phi"] == pytest.approx(0.06, abs=1e-9)
        assert shap["x2"]["phi"] == pytest.approx(0.21, abs=1e-9)
        assert shap["x1"]["mode"] == "exact"
        assert shap["x1"]["background_rows"] == 441
        surrogate = [r for r in records if r["method"] == "surrogate"]
        assert len(surrogate) == 2
        assert all(r["fit_quality"] > 0.999 for r in surrogate)

    def test_csv_format(self, tmp_path):
        out = tmp_path / "records.csv"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu", "--format", "csv", "--out", str(out),
        ]) == 0
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        header = lines[0].split(",")
        assert "ci" in header and "seed" in header
        assert len(lines) == 3

    def test_text_bars_format(self, capsys):
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu", "--format", "text-bars",
        ]) == 0
        captured = capsys.readouterr().out
        assert "CI=0.300" in captured and "favorable" in captured

    def test_svg_format(self, tmp_path):
        out = tmp_path / "chart.svg"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu,influence", "--format", "svg", "--out", str(out),
        ]) == 0
        ET.fromstring(out.read_text(encoding="utf-8"))

    def test_out_of_range_instance_fails_cleanly(self, capsys):
        assert run([
            "explain", "--model", "linear", "--instance", "1.5,0.5",
        ]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_method_fails_cleanly(self, capsys):
        assert run([
            "explain", "--model", "linear", "--instance", "0.5,0.5",
            "--methods", "lime",
        ]) == 1
        assert "unknown methods" in capsys.readouterr().err


class TestDeterminism:
    def test_json_artifacts_byte_identical(self, tmp_path):
        args = [
            "explain", "--model", "sombrero", "--instance=-7.5,-1.5",
            "--methods", "ciu,influence,shapley,surrogate",
            "--grid-step", "0.51", "--seed", "7",
        ]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_svg_artifacts_byte_identical(self, tmp_path):
        args = [
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu", "--format", "svg",
        ]
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestBridgeCommand:
    def bridge_arg(self, script):
        quoted = script.replace('"', '\\"')
        return f'{sys.executable} -c "{quoted}"'

    def test_linear_bridge_matches_builtin(self, tmp_path):
        script = (
            "import json,sys\n"
            "for line in sys.stdin:\n"
            "    req=json.loads(line)\n"
            "    outs=[[0.3*r[0]+0.7*r[1]] for r in req['inputs']]\n"
            "    sys.stdout.write(json.dumps({'outputs': outs})+chr(10)); sys.stdout.flush()\n"
        )
        path = tmp_path / "bridge.py"
        path.write_text(script, encoding="utf-8")
        out = tmp_path / "records.json"
        assert run([
            "explain", "--bridge-cmd", f"{sys.executable} {path}",
            "--space", UNIT_SPACE, "--instance", "0.7,0.8",
            "--methods", "ciu", "--out", str(out),
        ]) == 0
        records = read_records(out)
        by_feature = {r["feature_set"][0]: r for r in records}
        assert by_feature["x1"]["ci"] == pytest.approx(0.3, abs=1e-9)
        assert by_feature["x2"]["ci"] == pytest.approx(0.7, abs=1e-9)
        assert by_feature["x1"]["model"] == "bridge"

    def test_constant_bridge_reports_degenerate_not_error(self, tmp_path):
        path = tmp_path / "bridge.py"
        path.write_text(
            "import json,sys\n"
            "for line in sys.stdin:\n"
            "    req=json.loads(line)\n"
            "    sys.stdout.write(json.dumps({'outputs': [[0.5] for _ in req['inputs']]})+chr(10))\n"
            "    sys.stdout.flush()\n",
            encoding="utf-8",
        )
        out = tmp_path / "records.json"
        assert run([
            "explain", "--bridge-cmd", f"{sys.executable} {path}",
            "--space", UNIT_SPACE, "--instance", "0.7,0.8",
            "--methods", "ciu", "--out", str(out),
        ]) == 0
        records = read_records(out)
        assert all(r["ci"] is None for r in records)
        assert all(r["degenerate_target"] for r in records)

    def test_bridge_requires_space(self, capsys):
        assert run([
            "explain", "--bridge-cmd", "whatever", "--instance", "0.5,0.5",
        ]) == 1
        assert "--space" in capsys.readouterr().err

    def test_protocol_violation_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "bridge.py"
        path.write_text("print('hello')\n", encoding="utf-8")
        assert run([
            "explain", "--bridge-cmd", f"{sys.executable} {path}",
            "--space", UNIT_SPACE, "--instance", "0.5,0.5", "--methods", "ciu",
        ]) == 1
        assert "error:" in capsys.readouterr().err


class TestOtherCommands:
    def test_reproduce_table_text(self, capsys):
        assert run(["reproduce-table", "--table", "1"]) == 0
        out = capsys.readouterr().out
        assert "table 1" in out
        assert "24/24" in out

    def test_reproduce_table_json(self, tmp_path):
        out = tmp_path / "table.json"
        assert run(["reproduce-table", "--table", "2", "--format", "json",
                    "--out", str(out)]) == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["all_within"] is True

    def test_render_from_file(self, tmp_path, capsys):
        records = tmp_path / "records.json"
        assert run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu,influence", "--out", str(records),
        ]) == 0
        assert run(["render", "--in", str(records), "--method", "ciu"]) == 0
        out = capsys.readouterr().out
        assert "== ciu" in out and "== influence" not in out

    def test_render_svg_to_file(self, tmp_path):
        records = tmp_path / "records.json"
        run([
            "explain", "--model", "linear", "--instance", "0.7,0.8",
            "--methods", "ciu", "--out", str(records),
        ])
        chart = tmp_path / "chart.svg"
        assert run(["render", "--in", str(records), "--format", "svg",
                    "--out", str(chart)]) == 0
        ET.fromstring(chart.read_text(encoding="utf-8"))

    def test_render_empty_selection_fails(self, tmp_path, capsys):
        records = tmp_path / "records.json"
        records.write_text("[]", encoding="utf-8")
        assert run(["render", "--in", str(records)]) == 1
        assert "empty record set" in capsys.readouterr().err

    def test_ingest_reports_schema(self, tmp_path, capsys):
        csv_path = tmp_path / "data.csv"
        csv_path.write_text("x1,x2\n0,0.5\n1,0.25\n0.5,0.75\n", encoding="utf-8")
        assert run(["ingest", "--in", str(csv_path)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["rows"] == 3
        assert report["features"][0] == {
            "kind": "numeric", "name": "x1", "range": [0.0, 1.0],
        }

    def test_ingest_degenerate_column_fails(self, tmp_path, capsys):
        csv_path = tmp_path / "data.csv"
        csv_path.write_text("x1,x2\n1,5\n2,5\n", encoding="utf-8")
        assert run(["ingest", "--in", str(csv_path)]) == 1
        assert "degenerate" in capsys.readouterr().err
