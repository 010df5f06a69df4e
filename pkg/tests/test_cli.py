"""CLI: exit codes, schema, golden reports and artifacts.

Regenerate the golden reports with ``python tests/test_cli.py`` after an
intentional change to report contents.
"""
import json
import re
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from pseudolem.cli import (EXIT_INDETERMINATE, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK, load_schema, main,
                           run_job, run_reproduction)
from pseudolem.errors import InternalInconsistency
from pseudolem.render import render_svg

ROOT = Path(__file__).resolve().parents[1]
JOBS = ROOT / "jobs"
GOLDEN = Path(__file__).resolve().parent / "golden"

EXPECTED_CODES = {
    "bad_syntax": EXIT_INPUT,
    "blaschke_fit": EXIT_OK,
    "classify_blaschke": EXIT_OK,
    "count_z3": EXIT_OK,
    "locate_z2m1": EXIT_OK,
    "nonjordan_exp_tall": EXIT_OK,
    "nonjordan_z2_tangent": EXIT_INDETERMINATE,
    "trace_branch": EXIT_OK,
    "trace_z2": EXIT_OK,
}


def _job(name):
    return json.loads((JOBS / f"{name}.json").read_text())


def _report_path(out, name):
    outputs = _job(name).get("outputs", {})
    return out / outputs.get("json", "report.json")


@pytest.mark.parametrize("name", sorted(EXPECTED_CODES))
def test_job_exit_codes_and_schema(name, tmp_path):
    code, report = run_job(JOBS / f"{name}.json", tmp_path)
    assert code == EXPECTED_CODES[name]
    jsonschema.validate(report, load_schema())
    on_disk = json.loads(_report_path(tmp_path, name).read_text())
    assert on_disk == report


@pytest.mark.parametrize("name", sorted(EXPECTED_CODES))
def test_golden_reports(name, tmp_path):
    run_job(JOBS / f"{name}.json", tmp_path)
    assert _report_path(tmp_path, name).read_bytes() == (GOLDEN / f"{name}.json").read_bytes()


def test_verdicts(tmp_path):
    _, rep = run_job(JOBS / "classify_blaschke.json", tmp_path)
    assert rep["verdict"]["kind"] == "PseudoLemniscate"
    _, rep = run_job(JOBS / "bad_syntax.json", tmp_path)
    assert rep["verdict"]["error"] == "ExprSyntaxError" and rep["verdict"]["position"] == 4
    _, rep = run_job(JOBS / "nonjordan_exp_tall.json", tmp_path)
    assert rep["verdict"]["kind"] == "ImageNotJordan"


def test_trace_svg_has_one_closed_curve(tmp_path):
    run_job(JOBS / "trace_z2.json", tmp_path)
    svg = (tmp_path / "trace_z2.svg").read_text()
    lines = re.findall(r'<polyline[^>]*points="([^"]*)"', svg)
    assert len(lines) == 1
    pts = lines[0].split()
    assert pts[0] == pts[-1]
    header, *rows = (tmp_path / "trace_z2.csv").read_text().splitlines()
    assert header.split(",")[:2] == ["component", "theta"]
    assert {r.split(",")[0] for r in rows} == {"0"}


def test_locate_csv_has_two_rows(tmp_path):
    run_job(JOBS / "locate_z2m1.json", tmp_path)
    header, *rows = (tmp_path / "locate_z2m1.csv").read_text().splitlines()
    assert len(rows) == 2
    assert [r.split(",")[3] for r in rows] == ["Zero", "Zero"]


def test_branch_markers(tmp_path):
    run_job(JOBS / "trace_branch.json", tmp_path)
    svg = (tmp_path / "trace_branch.svg").read_text()
    assert "<circle" in svg


def test_render_svg_scenes(tmp_path):
    empty = render_svg(path=tmp_path / "empty.svg")
    assert empty.startswith("<?xml") and "<svg" in empty and empty.rstrip().endswith("</svg>")
    assert "<polyline" not in empty
    two = render_svg(curves=[("S", [0, 1, 1j, 0]), ("f(S)", [0, 2, 2j, 0])])
    assert two.count("<polyline") == 2 and ">S<" in two and ">f(S)<" in two


def test_seed_override_changes_samples(tmp_path):
    _, a = run_job(JOBS / "classify_blaschke.json", tmp_path / "a")
    _, b = run_job(JOBS / "classify_blaschke.json", tmp_path / "b", seed=11)
    assert a["verdict"] == b["verdict"]
    assert a["samples"] != b["samples"]
    _, c = run_job(JOBS / "classify_blaschke.json", tmp_path / "c", seed=11)
    assert b == c


def test_input_errors(tmp_path):
    code, rep = run_job({"command": "count", "function": "z"}, tmp_path)
    assert code == EXIT_INPUT and rep["verdict"]["kind"] == "Error"
    code, rep = run_job({"command": "nope", "function": "z"}, tmp_path)
    assert code == EXIT_INPUT
    code, rep = run_job(tmp_path / "missing.json", tmp_path, command="count")
    assert code == EXIT_INPUT
    jsonschema.validate(rep, load_schema())


def test_internal_inconsistency_exit_code(tmp_path, monkeypatch):
    from pseudolem import cli

    def boom(job):
        raise InternalInconsistency("forced")
    monkeypatch.setitem(cli.RUNNERS, "count", boom)
    code, rep = run_job(_job("count_z3"), tmp_path)
    assert code == EXIT_INTERNAL and rep["verdict"]["error"] == "InternalInconsistency"


def test_timings_flag(tmp_path):
    _, rep = run_job(JOBS / "count_z3.json", tmp_path, with_timings=True)
    assert rep["timings"]["total_s"] >= 0
    _, rep = run_job(JOBS / "count_z3.json", tmp_path)
    assert rep["timings"] == {}


def test_reproduce(tmp_path):
    code, summary = run_reproduction(tmp_path)
    assert code == EXIT_OK
    geo = summary["geometries"]
    assert geo["tall"]["counts"] == [1, 2, 0] and geo["tall"]["verdict"]["kind"] == "ImageNotJordan"
    assert max(geo["literal"]["counts"]) <= 1 and geo["literal"]["verdict"]["kind"] == "Inconclusive"
    for name in ("reproduction.json", "reproduction_tall.json", "reproduction_literal.json",
                 "reproduction_tall.svg", "reproduction_literal.svg"):
        assert (tmp_path / name).exists()


def test_main_entry_point(tmp_path, capsys):
    assert main(["count", "--job", str(JOBS / "count_z3.json"), "--out", str(tmp_path)]) == EXIT_OK
    assert main(["classify", "--job", str(JOBS / "bad_syntax.json"), "--out", str(tmp_path)]) == EXIT_INPUT
    capsys.readouterr()


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pseudolem.cli", "locate", "--job",
                           str(JOBS / "locate_z2m1.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert (tmp_path / "locate_z2m1.csv").exists()


def test_job_values():
    from pseudolem import INF
    from pseudolem.errors import ConfigError
    from pseudolem.jobs import box_from_spec, complex_value, curve_from_spec
    assert complex_value("1+8i") == 1 + 8j
    assert complex_value([0.5, -1]) == 0.5 - 1j
    assert complex_value("e^2*i") == pytest.approx(7.38905609893065j)
    assert complex_value("inf", allow_inf=True) is INF
    for bad in ["inf", "z+1", True, [1, 2, 3], "1/0"]:
        with pytest.raises(ConfigError):
            complex_value(bad)
    c = curve_from_spec({"circle": {"center": [1, 0], "radius": 2}})
    assert abs(abs(c.points - 1) - 2).max() < 1e-12
    p = curve_from_spec({"polygon": {"vertices": ["0", "1", "1+i", "i"], "fillet_radius": 0.1}})
    assert p.orientation == 1
    s = curve_from_spec({"samples": [[0, 0], [0, 1], [1, 1], [1, 0], [0, 0]]})
    assert s.orientation == 1
    with pytest.raises(ConfigError):
        curve_from_spec({"circle": {}, "samples": []})
    with pytest.raises(ConfigError):
        box_from_spec([0, 1, 2])


if __name__ == "__main__":
    import tempfile
    GOLDEN.mkdir(exist_ok=True)
    for name in sorted(EXPECTED_CODES):
        with tempfile.TemporaryDirectory() as tmp:
            run_job(JOBS / f"{name}.json", tmp)
            (GOLDEN / f"{name}.json").write_bytes(_report_path(Path(tmp), name).read_bytes())
            print("wrote", name)
