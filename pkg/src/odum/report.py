"""Report bundle assembly and deterministic CSV / Markdown rendering."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .cluster import (
    ElbowCurve,
    FeatureMatrix,
    LinkageMatrix,
    MergedClusters,
    Partition,
    cluster_dimension_profile,
    cut_dendrogram,
    elbow_curve,
    kmeans,
    merge_partitions,
    ward_linkage,
)
from .schema import FrameworkSchema, ValidationReport
from .scoring import PortalProfile, PortalScorecard, RegionalAggregates, ScoreMatrix


@dataclass
class ClusterSummary:
    k: int
    features: str
    seed: int
    elbow: ElbowCurve | None
    kmeans_partition: Partition
    hier_partition: Partition
    linkage: LinkageMatrix
    merged: MergedClusters
    profiles: dict[str, dict[str, float]]
    matrix_digest: str

    def partition_rows(self) -> list[tuple[str, int, int, str]]:
        core, km_side, hi_side = {}, {}, {}
        for c in self.merged.clusters:
            for p in c.core:
                core[p] = c.label
            for p in c.kmeans_only:
                km_side[p] = c.label
            for p in c.hier_only:
                hi_side[p] = c.label
        rows = []
        for portal in self.linkage.labels:
            if portal in core:
                label = core[portal]
            else:
                label = f"kmeans:{km_side.get(portal, '-')}|hier:{hi_side.get(portal, '-')}"
            rows.append((portal, self.kmeans_partition.assignment[portal], self.hier_partition.assignment[portal], label))
        return rows

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "features": self.features,
            "seed": self.seed,
            "matrix_digest": self.matrix_digest,
            "elbow": None
            if self.elbow is None
            else {
                "k": self.elbow.ks,
                "wcss": [round(w, 6) for w in self.elbow.wcss],
                "suggested_k": self.elbow.suggested_k,
                "degenerate": self.elbow.degenerate,
            },
            "clusters": [
                {
                    "label": c.label,
                    "kmeans_cluster": c.kmeans_cluster,
                    "hier_cluster": c.hier_cluster,
                    "both": c.core,
                    "kmeans_only": c.kmeans_only,
                    "hierarchical_only": c.hier_only,
                }
                for c in self.merged.clusters
            ],
            "profiles": self.profiles,
        }


def matrix_digest(matrix: ScoreMatrix) -> str:
    return hashlib.sha256(matrix.to_csv().encode("utf-8")).hexdigest()[:16]


def run_clustering(
    matrix: ScoreMatrix,
    scorecards: Sequence[PortalScorecard],
    schema: FrameworkSchema,
    k: int | str = "auto",
    features: str = "binary",
    seed: int = 42,
    k_max: int = 10,
) -> ClusterSummary:
    """K-means and Ward on the same features, cut to the same k, then merged."""
    fm = FeatureMatrix.from_score_matrix(matrix, schema, features)
    elbow = None
    if k == "auto":
        elbow = elbow_curve(fm, min(k_max, len(fm.rows)), seed=seed)
        k = elbow.suggested_k
    km = kmeans(fm, int(k), seed=seed)
    linkage = ward_linkage(fm)
    hier = cut_dendrogram(linkage, k=int(k))
    totals = {c.portal: c.total for c in scorecards}
    merged = merge_partitions(km.partition, hier, totals)
    profiles = cluster_dimension_profile(merged, scorecards)
    return ClusterSummary(int(k), features, seed, elbow, km.partition, hier, linkage, merged, profiles, matrix_digest(matrix))


@dataclass
class ReportBundle:
    scorecards: list[PortalScorecard]
    ranking: list[tuple[int, str, int]]
    regional: RegionalAggregates | None
    validation: ValidationReport | None = None
    profiles: list[PortalProfile] = field(default_factory=list)
    dimension_letters: list[str] = field(default_factory=list)
    clusters: ClusterSummary | None = None


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _md_table(header: Sequence[str], rows: Sequence[Sequence]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(x) for x in row) + " |" for row in rows]
    return lines


def _probe_sourced(card: PortalScorecard) -> bool:
    return any(v == "probe" for v in card.provenance.values())


def _name(card: PortalScorecard) -> str:
    return f"{card.portal} (probe)" if _probe_sourced(card) else card.portal


def _fmt1(x) -> str:
    return "n/a" if x is None else f"{x:.1f}"


def ranking_csv(bundle: ReportBundle) -> str:
    cards = {c.portal: c for c in bundle.scorecards}
    rows = [["rank", "portal", "total", "source"]]
    for rank, portal, total in bundle.ranking:
        card = cards.get(portal)
        source = "probe" if card is not None and _probe_sourced(card) else "manual"
        rows.append([rank, portal, total, source])
    return _csv(rows)


def ranking_markdown(bundle: ReportBundle) -> str:
    cards = {c.portal: c for c in bundle.scorecards}
    rows = []
    for rank, portal, total in bundle.ranking:
        name = _name(cards[portal]) if portal in cards else portal
        rows.append((rank, name, total))
    return "\n".join(_md_table(("Rank", "Portal", "Total"), rows)) + "\n"


def regional_csv(reg: RegionalAggregates) -> str:
    rows = [["group", "portals", "mean_total"], ["overall", sum(reg.per_region_count.values()), _fmt1(reg.overall_mean)]]
    for region, mean in reg.per_region_mean.items():
        rows.append([region, reg.per_region_count.get(region, ""), _fmt1(mean)])
    for t, n in reg.counts_above.items():
        rows.append([f"above_{t:g}", n, ""])
    for t, n in reg.counts_below.items():
        rows.append([f"below_{t:g}", n, ""])
    return _csv(rows)


def dimensions_csv(bundle: ReportBundle) -> str:
    letters = bundle.dimension_letters or (list(bundle.scorecards[0].dimension_scores) if bundle.scorecards else [])
    rows = [["portal", *letters, "total"]]
    for card in sorted(bundle.scorecards, key=lambda c: c.portal):
        rows.append([_name(card), *(card.dimension_scores[x] for x in letters), card.total])
    return _csv(rows)


def profiles_csv(summary: ClusterSummary) -> str:
    letters = list(next(iter(summary.profiles.values()))) if summary.profiles else []
    rows = [["cluster", *letters]]
    for label, means in summary.profiles.items():
        rows.append([label, *(f"{means[x]:.2f}" for x in letters)])
    return _csv(rows)


def partition_csv(summary: ClusterSummary) -> str:
    return _csv([["portal", "kmeans_cluster", "hier_cluster", "merged_label"], *summary.partition_rows()])


def elbow_csv(summary: ClusterSummary) -> str:
    if summary.elbow is None:
        return _csv([["k", "wcss"]])
    return _csv([["k", "wcss"], *([k, f"{w:.6f}"] for k, w in zip(summary.elbow.ks, summary.elbow.wcss))])


def render_markdown(bundle: ReportBundle) -> str:
    out = ["# OGD portal usability report", ""]

    out += ["## Validation", ""]
    if bundle.validation is None:
        out.append("not computed")
    else:
        v = bundle.validation
        out.append(f"Profile `{v.profile_name}`: {v.dimension_count} dimensions, {v.sub_dimension_count} sub-dimensions, maximum {v.total} points.")
        out.append("")
        out += [f"- error: {e}" for e in v.errors]
        out += [f"- warning: {w}" for w in v.warnings]
        if not v.errors and not v.warnings:
            out.append("- no findings")
    out.append("")

    out += ["## Ranking", ""]
    if bundle.ranking:
        out.append(ranking_markdown(bundle).rstrip("\n"))
    else:
        out.append("no portals")
    out.append("")

    out += ["## Regional", ""]
    reg = bundle.regional
    if reg is None:
        out.append("not computed")
    else:
        rows = [("overall", sum(reg.per_region_count.values()) or "", _fmt1(reg.overall_mean))]
        rows += [(r, reg.per_region_count.get(r, ""), _fmt1(m)) for r, m in reg.per_region_mean.items()]
        out += _md_table(("Group", "Portals", "Mean total"), rows)
        out.append("")
        for t, n in reg.counts_above.items():
            out.append(f"- portals above {t:g}: {n}")
        for t, n in reg.counts_below.items():
            out.append(f"- portals below {t:g}: {n}")
    out.append("")

    out += ["## Dimensions", ""]
    if bundle.scorecards:
        letters = bundle.dimension_letters or list(bundle.scorecards[0].dimension_scores)
        rows = [
            (_name(c), *(c.dimension_scores[x] for x in letters), c.total)
            for c in sorted(bundle.scorecards, key=lambda c: c.portal)
        ]
        out += _md_table(("Portal", *letters, "Total"), rows)
        flagged = [c for c in sorted(bundle.scorecards, key=lambda c: c.portal) if c.flags]
        if flagged:
            out += ["", "Unobserved sub-dimensions (scored 0):", ""]
            for c in flagged:
                ids = ", ".join(f.split(":", 1)[0] for f in c.flags)
                out.append(f"- {c.portal}: {ids}")
    else:
        out.append("not computed")
    out.append("")

    out += ["## Clusters", ""]
    cs = bundle.clusters
    if cs is None:
        out.append("not computed")
    else:
        head = f"k = {cs.k} on {cs.features} features, seed {cs.seed}"
        if cs.elbow is not None:
            head += f"; elbow suggested {cs.elbow.suggested_k}" + (" (degenerate curve)" if cs.elbow.degenerate else "")
        out += [head, ""]
        for c in cs.merged.clusters:
            out.append(f"### {c.label.capitalize()} cluster")
            out.append("")
            out += _md_table(
                ("Both methods", "Only K-means", "Only hierarchical"),
                [(", ".join(c.core) or "-", ", ".join(c.kmeans_only) or "-", ", ".join(c.hier_only) or "-")],
            )
            out.append("")
        letters = list(next(iter(cs.profiles.values()))) if cs.profiles else []
        out += ["### Dimension profiles", ""]
        out += _md_table(("Cluster", *letters), [(label, *(f"{m[x]:.2f}" for x in letters)) for label, m in cs.profiles.items()])
    out.append("")
    return "\n".join(out)


def write_cluster_outputs(summary: ClusterSummary, out_dir: Path) -> None:
    target = Path(out_dir) / "clusters"
    target.mkdir(parents=True, exist_ok=True)
    (target / "partition.csv").write_text(partition_csv(summary), encoding="utf-8")
    (target / "linkage.csv").write_text(summary.linkage.to_csv(), encoding="utf-8")
    (target / "dendrogram.json").write_text(json.dumps(summary.linkage.to_tree(), indent=1) + "\n", encoding="utf-8")
    (target / "profiles.csv").write_text(profiles_csv(summary), encoding="utf-8")
    (target / "elbow.csv").write_text(elbow_csv(summary), encoding="utf-8")
    (target / "merged.json").write_text(json.dumps(summary.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def write_report(bundle: ReportBundle, out_dir: str | Path, fmt: str = "md") -> list[Path]:
    """Write the bundle as ``report.md`` or as a set of CSV tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "md":
        path = out_dir / "report.md"
        path.write_text(render_markdown(bundle), encoding="utf-8")
        written.append(path)
    elif fmt == "csv":
        files = {"ranking.csv": ranking_csv(bundle), "dimensions.csv": dimensions_csv(bundle)}
        if bundle.regional is not None:
            files["regional.csv"] = regional_csv(bundle.regional)
        if bundle.clusters is not None:
            files["cluster_profiles.csv"] = profiles_csv(bundle.clusters)
        for name, text in files.items():
            (out_dir / name).write_text(text, encoding="utf-8")
            written.append(out_dir / name)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return written
