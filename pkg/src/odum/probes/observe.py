"""Turn harvested metadata and probe results into assessment observations."""

from __future__ import annotations

import datetime as dt
from typing import Sequence

from ..sampling import AccuracyVerdict, UpdateFrequency, accuracy_check, tally_sample
from ..scoring import AssessmentRecord, Boolean, Measured
from .harvest import DatasetMetadata
from .http import ProbeClient, ProbeResult, probe_endpoint

MACHINE_READABLE = frozenset({"CSV", "JSON", "XML", "RDF", "GEOJSON", "XLSX", "PARQUET"})

_MEDIA_TYPES = {
    "TEXT/CSV": "CSV",
    "APPLICATION/JSON": "JSON",
    "APPLICATION/XML": "XML",
    "TEXT/XML": "XML",
    "APPLICATION/RDF+XML": "RDF",
    "APPLICATION/LD+JSON": "RDF",
    "TEXT/TURTLE": "RDF",
    "APPLICATION/GEO+JSON": "GEOJSON",
    "APPLICATION/VND.GEO+JSON": "GEOJSON",
    "APPLICATION/VND.OPENXMLFORMATS-OFFICEDOCUMENT.SPREADSHEETML.SHEET": "XLSX",
    "APPLICATION/VND.APACHE.PARQUET": "PARQUET",
}


def normalize_format(value: str) -> str:
    text = value.strip().upper()
    text = text.rsplit("/FILE-TYPE/", 1)[-1] if "/FILE-TYPE/" in text else text
    text = _MEDIA_TYPES.get(text, text).lstrip(".")
    return _ALIASES.get(text, text)


_ALIASES = {"TTL": "RDF", "TURTLE": "RDF", "JSON-LD": "RDF", "JSONLD": "RDF", "N-TRIPLES": "RDF", "GEO JSON": "GEOJSON"}


def machine_readable(meta: DatasetMetadata) -> bool:
    return any(normalize_format(f) in MACHINE_READABLE for f in meta.formats)


def basic_metadata_complete(meta: DatasetMetadata) -> bool:
    fields = (meta.title, meta.description, meta.category, meta.publisher, meta.license, meta.modification_date)
    return all(f not in (None, "") for f in fields)


def frequency_verdict(meta: DatasetMetadata, today: dt.date) -> AccuracyVerdict | None:
    """None when no frequency is stated; unverifiable when stated but uncheckable."""
    if meta.update_frequency is UpdateFrequency.UNSPECIFIED:
        return None
    if meta.modification_date is None or meta.modification_date > today:
        return AccuracyVerdict.UNVERIFIABLE
    return accuracy_check(meta.update_frequency, meta.modification_date, today)


def auto_observe(
    metadata: Sequence[DatasetMetadata],
    today: dt.date,
    client: ProbeClient | None = None,
    portal: str = "",
) -> AssessmentRecord:
    """Sampled e1-e4, f10 and, when a client is given, f11 observations.

    Without a client no download is attempted and f11 is left out.
    """
    fragment = AssessmentRecord(portal, today)
    if not metadata:
        return fragment
    obs = fragment.observations
    obs["e1"] = tally_sample([machine_readable(m) for m in metadata])
    obs["e2"] = tally_sample([basic_metadata_complete(m) for m in metadata])
    obs["e3"] = tally_sample([m.update_frequency is not UpdateFrequency.UNSPECIFIED for m in metadata])
    obs["e4"] = tally_sample([frequency_verdict(m, today) for m in metadata])
    obs["f10"] = tally_sample([bool(m.tags) for m in metadata])
    if client is not None:
        downloadable = []
        for m in metadata:
            ok = False
            for url in m.download_urls:
                if probe_endpoint(url, "download", client).outcome == "pass":
                    ok = True
                    break
            downloadable.append(ok)
        obs["f11"] = tally_sample(downloadable)
    fragment.provenance.update({key: "probe" for key in obs})
    return fragment


def result_to_observation(result: ProbeResult):
    """Observation carried by a finished probe, or None for errors."""
    if result.outcome == "error":
        return None
    if result.check in ("c1", "c4"):
        return Measured(result.measured, result.unit)
    return Boolean(result.outcome == "pass")


def fragment_from_results(results: Sequence[ProbeResult], portal: str = "", today: dt.date | None = None) -> AssessmentRecord:
    fragment = AssessmentRecord(portal, today)
    for r in sorted(results, key=lambda r: (r.target, r.check)):
        obs = result_to_observation(r)
        if obs is not None and r.check not in fragment.observations:
            fragment.observations[r.check] = obs
            fragment.provenance[r.check] = "probe"
    return fragment
