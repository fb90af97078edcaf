import json

import pytest

from odum.io import InputParseError, dump_record, fixture_dir, load_assessments, record_from_dict
from odum.report import ReportBundle, render_markdown, run_clustering, write_cluster_outputs, write_report
from odum.scoring import (
    AssessmentError,
    Boolean,
    build_score_matrix,
    rank_portals,
    regional_aggregates,
    score_portal,
)

DOC = {
    "portal": "demo",
    "country": "Demoland",
    "region": "EU",
    "url": "https://data.demo",
    "assessed_on": "2024-03-01",
    "observations": {"a1": {"kind": "bool", "value": True}, "c1": {"kind": "measured", "value": 2.5, "unit": "s"}},
    "provenance": {"c1": "probe"},
    "catalog": {"base_url": "https://data.demo/api", "flavor": "ckan"},
}


def test_record_round_trip(schema):
    profile, record, targets = record_from_dict(DOC, schema)
    assert profile.region == "EU" and record.observations["a1"] == Boolean(True)
    assert record.provenance == {"a1": "manual", "c1": "probe"}
    assert targets["catalog"]["flavor"] == "ckan"
    again = record_from_dict(json.loads(dump_record(profile, record, targets)), schema)
    assert again == (profile, record, targets)


@pytest.mark.parametrize(
    "patch,message",
    [
        ({"observations": {"zz": {"kind": "bool", "value": True}}}, "unknown sub-dimension id zz"),
        ({"observations": {"a1": {"kind": "bool", "value": 1}}}, "a1"),
        ({"region": "Asia"}, "region"),
        ({"provenance": {"a1": "guess"}}, "provenance"),
        ({"assessed_on": "March"}, "assessed_on"),
    ],
)
def test_record_rejections(schema, patch, message):
    with pytest.raises(AssessmentError, match=message):
        record_from_dict({**DOC, **patch}, schema)


def test_missing_portal_field(schema):
    doc = dict(DOC)
    del doc["portal"]
    with pytest.raises(AssessmentError, match="portal"):
        record_from_dict(doc, schema)


def test_load_assessments_sorted_and_checked(schema, tmp_path):
    for name in ("b", "a"):
        (tmp_path / f"{name}.json").write_text(json.dumps({**DOC, "portal": name}))
    assert [p.portal for p, _ in load_assessments(tmp_path, schema)] == ["a", "b"]
    (tmp_path / "c.json").write_text(json.dumps({**DOC, "portal": "a"}))
    with pytest.raises(AssessmentError, match="duplicate portal"):
        load_assessments(tmp_path, schema)


def test_load_assessments_names_broken_file(schema, tmp_path):
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(InputParseError, match="bad.json"):
        load_assessments(tmp_path, schema)
    with pytest.raises(InputParseError):
        load_assessments(tmp_path / "absent", schema)


def test_registry_fixture(schema):
    loaded = load_assessments(fixture_dir("registry"), schema)
    assert len(loaded) == 33
    regions = [p.region for p, _ in loaded]
    assert regions.count("GCC") == 6 and regions.count("EU") == 27
    assert all(p.url.startswith("https://") and " " not in p.url for p, _ in loaded)


def _demo_bundle(schema, with_clusters=True):
    loaded = load_assessments(fixture_dir("demo"), schema)
    cards = [score_portal(schema, r) for _, r in loaded]
    profiles = [p for p, _ in loaded]
    clusters = None
    if with_clusters:
        clusters = run_clustering(build_score_matrix(schema, cards), cards, schema, "auto", "binary", 42)
    return ReportBundle(
        cards, rank_portals(cards), regional_aggregates(cards, profiles), None, profiles, schema.letters, clusters
    )


def test_demo_fixture_recovers_planted_groups(schema):
    bundle = _demo_bundle(schema)
    cs = bundle.clusters
    assert cs.k == 4
    assert all(not c.kmeans_only and not c.hier_only for c in cs.merged.clusters)
    assert [c.label for c in cs.merged.clusters] == ["green", "blue", "yellow", "red"]


def test_markdown_marks_missing_sections(schema):
    text = render_markdown(_demo_bundle(schema, with_clusters=False))
    assert "## Validation\n\nnot computed" in text
    assert "## Clusters\n\nnot computed" in text
    assert "(probe)" in text
    assert "- demo-06: i6" in text


def test_report_writers(schema, tmp_path):
    bundle = _demo_bundle(schema)
    md = write_report(bundle, tmp_path / "md", "md")
    assert [p.name for p in md] == ["report.md"]
    csvs = write_report(bundle, tmp_path / "csv", "csv")
    assert sorted(p.name for p in csvs) == ["cluster_profiles.csv", "dimensions.csv", "ranking.csv", "regional.csv"]
    ranking = (tmp_path / "csv" / "ranking.csv").read_text().splitlines()
    assert ranking[0] == "rank,portal,total,source"
    with pytest.raises(ValueError):
        write_report(bundle, tmp_path, "html")
    write_cluster_outputs(bundle.clusters, tmp_path / "cl")
    merged = json.loads((tmp_path / "cl" / "clusters" / "merged.json").read_text())
    assert merged["k"] == 4 and len(merged["clusters"]) == 4
