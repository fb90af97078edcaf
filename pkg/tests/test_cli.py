import json
import subprocess
import sys

import pytest

from odum.cli import main, slug
from odum.io import fixture_dir

DEMO = str(fixture_dir("demo"))


def run(*args):
    return main([str(a) for a in args])


def test_validate_builtin(capsys):
    assert run("validate") == 0
    out = capsys.readouterr().out
    assert "WARNING: dimension h computed max 21 vs published 18" in out


def test_validate_broken_schema_is_invalid(tmp_path, capsys):
    doc = {"profile_name": "x", "dimensions": []}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert run("validate", "--schema", path) == 2


def test_unparseable_schema_is_io_error(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text("{")
    assert run("validate", "--schema", path) == 1
    assert run("validate", "--schema", tmp_path / "missing.json") == 1


def test_score_writes_scorecards_and_matrix(tmp_path, capsys):
    assert run("score", "--assessments", DEMO, "--out", tmp_path) == 0
    assert len(list((tmp_path / "scorecards").glob("*.json"))) == 16
    header = (tmp_path / "matrix.csv").read_text().splitlines()[0]
    assert header.startswith("portal,a1,a2")


def test_rank_outputs(tmp_path, capsys):
    assert run("rank", "--assessments", DEMO, "--out", tmp_path) == 0
    assert (tmp_path / "ranking.csv").exists() and (tmp_path / "ranking.md").exists()
    assert "| 1 | demo-13 (probe) | 154 |" in capsys.readouterr().out


def test_cluster_fixed_k(tmp_path, capsys):
    assert run("cluster", "--assessments", DEMO, "--out", tmp_path, "--k", "3", "--features", "weighted") == 0
    merged = json.loads((tmp_path / "clusters" / "merged.json").read_text())
    assert merged["k"] == 3 and merged["features"] == "weighted" and merged["elbow"] is None


def test_report_without_clusters(tmp_path, capsys):
    assert run("report", "--assessments", DEMO, "--out", tmp_path) == 0
    assert "## Clusters\n\nnot computed" in (tmp_path / "report.md").read_text()
    assert run("report", "--assessments", DEMO, "--out", tmp_path / "c", "--format", "csv") == 0
    assert (tmp_path / "c" / "ranking.csv").exists()


def test_report_ignores_stale_cluster_outputs(tmp_path, capsys):
    assert run("cluster", "--assessments", DEMO, "--out", tmp_path) == 0
    reg = str(fixture_dir("registry"))
    assert run("report", "--assessments", reg, "--out", tmp_path) == 0
    assert "## Clusters\n\nnot computed" in (tmp_path / "report.md").read_text()


@pytest.mark.parametrize(
    "args,code",
    [
        (["score"], 2),
        (["score", "--assessments", "/nonexistent/dir"], 1),
        (["cluster", "--assessments", DEMO, "--k", "0"], 2),
        (["cluster", "--assessments", DEMO, "--k", "40"], 2),
        (["score", "--assessments", DEMO, "--trials", "0"], 2),
    ],
)
def test_exit_codes(tmp_path, capsys, args, code):
    assert run(*args, "--out", tmp_path) == code
    assert "odum: error:" in capsys.readouterr().err


def test_bad_record_is_invalid_input(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    (src / "x.json").write_text(json.dumps({"portal": "x", "url": "https://x", "observations": {"q1": {"kind": "bool", "value": True}}}))
    assert run("score", "--assessments", src, "--out", tmp_path / "o") == 2
    assert "q1" in capsys.readouterr().err
    (src / "x.json").write_text("[1, 2")
    assert run("score", "--assessments", src, "--out", tmp_path / "o") == 1


def _probe_input(tmp_path, url, endpoints=None):
    src = tmp_path / "in"
    src.mkdir(exist_ok=True)
    doc = {"portal": "Mock Portal", "country": "Mockland", "region": "Other", "url": url,
           "observations": {"a1": {"kind": "bool", "value": True}, "f12": {"kind": "bool", "value": True}}}
    if endpoints:
        doc["endpoints"] = endpoints
    (src / "mock.json").write_text(json.dumps(doc))
    return src


@pytest.mark.network
def test_probe_writes_results_and_fragments(portal, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ODUM_CHECKER_URL", portal.url + "/checker")
    src = _probe_input(tmp_path, portal.url + "/", {"api": portal.url + "/status/401", "sparql": portal.url + "/sparql"})
    out = tmp_path / "out"
    assert run("probe", "--assessments", src, "--out", out, "--trials", "1") == 0
    lines = [json.loads(x) for x in (out / "probes" / "results.jsonl").read_text().splitlines()]
    assert sorted(r["check"] for r in lines) == ["c1", "c4", "f12", "f13"]
    frag = json.loads((out / "probes" / "fragments" / f"{slug('Mock Portal')}.json").read_text())
    assert frag["observations"]["f12"] == {"kind": "bool", "value": True}
    assert frag["provenance"]["f12"] == "manual"
    assert frag["provenance"]["c1"] == "probe"
    assert run("score", "--assessments", out / "probes" / "fragments", "--out", out) == 0


@pytest.mark.network
def test_probe_nothing_reachable(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("ODUM_CHECKER_URL", raising=False)
    src = _probe_input(tmp_path, "http://127.0.0.1:9/")
    assert run("probe", "--assessments", src, "--out", tmp_path / "o", "--trials", "1", "--timeout", "2") == 3


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "odum.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "odum" in proc.stdout


def test_slug():
    assert slug("Saudi Arabia") == "saudi-arabia"
    assert slug("???") == "portal"
