"""``odum`` command line: validate, score, rank, cluster, probe, report.

Exit codes: 0 success, 1 I/O or parse failure, 2 invalid input,
3 network subcommand that reached no target.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .io import InputParseError, dump_record, load_assessments
from .report import (
    ReportBundle,
    matrix_digest,
    ranking_csv,
    ranking_markdown,
    run_clustering,
    write_cluster_outputs,
    write_report,
)
from .schema import SchemaParseError, load_schema, validate_schema
from .scoring import build_score_matrix, rank_portals, regional_aggregates, score_portal

log = logging.getLogger("odum")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_UNREACHABLE = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    schema_path: Path | None = None
    assessments_dir: Path | None = None
    output_dir: Path = Path("odum-out")
    k: str | int = "auto"
    features: str = "binary"
    seed: int = 42
    trials: int = 3
    timeout: float = 15.0
    checker_url: str | None = None
    fmt: str | None = None
    today: dt.date | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k != "auto":
            self.k = int(self.k)
            if self.k < 1:
                raise CliError("--k must be at least 1", EXIT_INVALID)
        if self.features not in ("binary", "weighted"):
            raise CliError("--features must be binary or weighted", EXIT_INVALID)
        if self.trials < 1:
            raise CliError("--trials must be at least 1", EXIT_INVALID)


def slug(portal: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", portal.lower()).strip("-") or "portal"


def _schema(cfg: RunConfig):
    try:
        schema = load_schema(cfg.schema_path)
    except OSError as exc:
        raise CliError(f"cannot read schema: {exc}", EXIT_IO) from exc
    report = validate_schema(schema)
    return schema, report


def _valid_schema(cfg: RunConfig):
    schema, report = _schema(cfg)
    if not report.ok:
        raise CliError("schema is structurally invalid:\n" + "\n".join(report.errors), EXIT_INVALID)
    return schema, report


def _assessments(cfg: RunConfig, schema, with_targets=False):
    if cfg.assessments_dir is None:
        raise CliError("--assessments DIR is required for this subcommand", EXIT_INVALID)
    return load_assessments(cfg.assessments_dir, schema, with_targets)


def _scored(cfg: RunConfig):
    schema, report = _valid_schema(cfg)
    loaded = _assessments(cfg, schema)
    cards = [score_portal(schema, record) for _, record in loaded]
    profiles = [p for p, _ in loaded]
    return schema, report, profiles, cards


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_validate(cfg: RunConfig) -> int:
    _, report = _schema(cfg)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_score(cfg: RunConfig) -> int:
    schema, _, profiles, cards = _scored(cfg)
    out = cfg.output_dir
    for card in cards:
        _write(out / "scorecards" / f"{slug(card.portal)}.json", json.dumps(card.to_dict(), indent=2, ensure_ascii=False) + "\n")
    matrix = build_score_matrix(schema, cards)
    _write(out / "matrix.csv", matrix.to_csv())
    for card in cards:
        print(f"{card.portal}\t{card.total}")
    return EXIT_OK


def cmd_rank(cfg: RunConfig) -> int:
    _, _, profiles, cards = _scored(cfg)
    countries = {p.portal: p.country for p in profiles}
    bundle = ReportBundle(cards, rank_portals(cards, countries), None)
    fmts = [cfg.fmt] if cfg.fmt else ["csv", "md"]
    if "csv" in fmts:
        _write(cfg.output_dir / "ranking.csv", ranking_csv(bundle))
    if "md" in fmts:
        _write(cfg.output_dir / "ranking.md", ranking_markdown(bundle))
    sys.stdout.write(ranking_markdown(bundle))
    return EXIT_OK


def cmd_cluster(cfg: RunConfig) -> int:
    schema, _, _, cards = _scored(cfg)
    matrix = build_score_matrix(schema, cards)
    if len(cards) < 2:
        raise CliError("clustering needs at least 2 portals", EXIT_INVALID)
    if cfg.k == "auto" and len(cards) < 3:
        raise CliError("--k auto needs at least 3 portals", EXIT_INVALID)
    summary = run_clustering(matrix, cards, schema, cfg.k, cfg.features, cfg.seed)
    _write(cfg.output_dir / "matrix.csv", matrix.to_csv())
    write_cluster_outputs(summary, cfg.output_dir)
    for c in summary.merged.clusters:
        print(f"{c.label}\tboth={len(c.core)}\tkmeans_only={len(c.kmeans_only)}\thier_only={len(c.hier_only)}")
    return EXIT_OK


def _stored_clusters(cfg: RunConfig, matrix, cards, schema):
    meta = cfg.output_dir / "clusters" / "merged.json"
    if not meta.exists():
        return None
    try:
        stored = json.loads(meta.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{meta}: cannot parse ({exc})", EXIT_IO) from exc
    if stored.get("matrix_digest") != matrix_digest(matrix):
        log.warning("cluster outputs in %s were computed from another score matrix; skipped", meta.parent)
        return None
    k = "auto" if stored.get("elbow") else stored["k"]
    return run_clustering(matrix, cards, schema, k, stored["features"], stored["seed"])


def cmd_report(cfg: RunConfig) -> int:
    schema, validation, profiles, cards = _scored(cfg)
    matrix = build_score_matrix(schema, cards)
    countries = {p.portal: p.country for p in profiles}
    bundle = ReportBundle(
        scorecards=cards,
        ranking=rank_portals(cards, countries),
        regional=regional_aggregates(cards, profiles) if cards else None,
        validation=validation,
        profiles=profiles,
        dimension_letters=schema.letters,
        clusters=_stored_clusters(cfg, matrix, cards, schema),
    )
    write_report(bundle, cfg.output_dir, cfg.fmt or "md")
    return EXIT_OK


def cmd_probe(cfg: RunConfig) -> int:
    from .probes import (
        CatalogEndpoint,
        HarvestError,
        HostPolicy,
        ProbeClient,
        HttpChecker,
        accessibility_score,
        auto_observe,
        fragment_from_results,
        harvest_sample,
        probe_endpoint,
        probe_load_time,
    )

    schema, _ = _valid_schema(cfg)
    loaded = _assessments(cfg, schema, with_targets=True)
    client = ProbeClient(timeout=cfg.timeout, policy=HostPolicy())
    checker = HttpChecker(cfg.checker_url) if cfg.checker_url else None
    today = cfg.today or dt.date.today()
    all_results = []
    reached = 0
    for profile, record, targets in loaded:
        results = [probe_load_time(profile.url, cfg.trials, client, schema)]
        for kind, url in sorted((targets.get("endpoints") or {}).items()):
            results.append(probe_endpoint(url, kind, client))
        if checker is not None:
            results.append(accessibility_score(checker, profile.url, schema))
        fragment = fragment_from_results(results, profile.portal, today)
        catalog = targets.get("catalog")
        if catalog:
            try:
                harvest = harvest_sample(CatalogEndpoint(catalog["base_url"], catalog.get("flavor", "ckan")), client)
            except HarvestError as exc:
                log.warning("%s: catalog harvest failed: %s", profile.portal, exc)
            else:
                reached += 1
                observed = auto_observe(harvest.datasets, today, client, profile.portal)
                fragment = fragment.merged_with(observed)
        reached += sum(r.outcome != "error" for r in results)
        all_results += results
        merged = record.merged_with(fragment)
        _write(cfg.output_dir / "probes" / "fragments" / f"{slug(profile.portal)}.json", dump_record(profile, merged, targets))
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in sorted(all_results, key=lambda r: (r.target, r.check))]
    _write(cfg.output_dir / "probes" / "results.jsonl", "\n".join(lines) + ("\n" if lines else ""))
    for r in sorted(all_results, key=lambda r: (r.target, r.check)):
        print(f"{r.check}\t{r.outcome}\t{r.target}\t{r.evidence}")
    if loaded and reached == 0:
        raise CliError("no probe target was reachable", EXIT_UNREACHABLE)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "rank": cmd_rank,
    "cluster": cmd_cluster,
    "probe": cmd_probe,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odum", description="OGD portal usability workbench")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--schema", type=Path, help="schema document (default: builtin rubric)")
    parser.add_argument("--assessments", type=Path, help="directory of per-portal assessment JSON files")
    parser.add_argument("--out", type=Path, default=Path("odum-out"), help="output directory")
    parser.add_argument("--k", default="auto", help="cluster count or 'auto' (elbow)")
    parser.add_argument("--features", default="binary", choices=("binary", "weighted"))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--trials", type=int, default=3, help="load-time trials per portal")
    parser.add_argument("--timeout", type=float, default=15.0, help="per-request timeout in seconds")
    parser.add_argument("--format", dest="fmt", choices=("csv", "md"))
    parser.add_argument("--today", type=dt.date.fromisoformat, help="reference date for update-frequency checks")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    import os

    from .probes.accessibility import CHECKER_ENV

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig(
            schema_path=args.schema,
            assessments_dir=args.assessments,
            output_dir=args.out,
            k=args.k,
            features=args.features,
            seed=args.seed,
            trials=args.trials,
            timeout=args.timeout,
            checker_url=os.environ.get(CHECKER_ENV),
            fmt=args.fmt,
            today=args.today,
        )
        return COMMANDS[args.command](cfg)
    except SchemaParseError as exc:
        print(f"odum: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # SchemaError, AssessmentError, ObservationError, ClusteringError
        print(f"odum: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CliError as exc:
        print(f"odum: error: {exc}", file=sys.stderr)
        return exc.code
    except (InputParseError, OSError) as exc:
        print(f"odum: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
