"""Assessment record files and bundled fixture corpora."""

from __future__ import annotations

import datetime as dt
import json
from importlib import resources
from pathlib import Path
from typing import Mapping

from .schema import FrameworkSchema
from .scoring import (
    PROVENANCES,
    AssessmentError,
    AssessmentRecord,
    ObservationError,
    PortalProfile,
    observation_from_dict,
    observation_to_dict,
)


class InputParseError(Exception):
    """A file could not be read or decoded."""


def record_from_dict(doc: Mapping, schema: FrameworkSchema, source: str = "<memory>") -> tuple[PortalProfile, AssessmentRecord, dict]:
    """Parse one assessment document; the third item holds optional probe targets."""
    try:
        portal = str(doc["portal"])
        profile = PortalProfile(portal, str(doc.get("country", portal)), str(doc.get("region", "Other")), str(doc.get("url", "")))
    except KeyError as exc:
        raise AssessmentError(f"{source}: missing field {exc.args[0]!r}") from None
    except AssessmentError as exc:
        raise AssessmentError(f"{source}: {exc}") from None
    raw_obs = doc.get("observations") or {}
    known = set(schema.ids)
    unknown = sorted(k for k in raw_obs if k not in known)
    if unknown:
        raise AssessmentError(f"{source}: unknown sub-dimension id {', '.join(unknown)}")
    observations = {}
    for key, value in raw_obs.items():
        try:
            observations[key] = observation_from_dict(value)
        except (ObservationError, TypeError, ValueError) as exc:
            raise AssessmentError(f"{source}: observation {key}: {exc}") from None
    provenance = {k: str(v) for k, v in (doc.get("provenance") or {}).items()}
    for key, value in provenance.items():
        if key not in known:
            raise AssessmentError(f"{source}: unknown sub-dimension id {key} in provenance")
        if value not in PROVENANCES:
            raise AssessmentError(f"{source}: provenance {value!r} for {key} not one of {PROVENANCES}")
    for key in observations:
        provenance.setdefault(key, "manual")
    assessed_on = doc.get("assessed_on")
    try:
        assessed = dt.date.fromisoformat(assessed_on) if assessed_on else None
    except ValueError:
        raise AssessmentError(f"{source}: assessed_on {assessed_on!r} is not YYYY-MM-DD") from None
    targets = {k: doc[k] for k in ("catalog", "endpoints") if k in doc}
    record = AssessmentRecord(portal, assessed, observations, provenance)
    return profile, record, targets


def record_to_dict(profile: PortalProfile, record: AssessmentRecord, targets: Mapping | None = None) -> dict:
    doc = {
        "portal": profile.portal,
        "country": profile.country,
        "region": profile.region,
        "url": profile.url,
        "assessed_on": record.assessed_on.isoformat() if record.assessed_on else None,
        "observations": {k: observation_to_dict(v) for k, v in record.observations.items()},
        "provenance": dict(record.provenance),
    }
    doc.update(targets or {})
    return doc


def dump_record(profile: PortalProfile, record: AssessmentRecord, targets: Mapping | None = None) -> str:
    return json.dumps(record_to_dict(profile, record, targets), indent=2, ensure_ascii=False) + "\n"


def load_assessments(directory: str | Path, schema: FrameworkSchema, with_targets: bool = False) -> list:
    """Parse every ``*.json`` in ``directory``, sorted by portal id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputParseError(f"{directory}: not a directory")
    loaded = []
    seen: dict[str, Path] = {}
    for path in sorted(directory.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InputParseError(f"{path}: cannot parse ({exc})") from exc
        if not isinstance(doc, dict):
            raise InputParseError(f"{path}: expected a JSON object")
        profile, record, targets = record_from_dict(doc, schema, str(path))
        if profile.portal in seen:
            raise AssessmentError(f"duplicate portal {profile.portal!r} in {seen[profile.portal].name} and {path.name}")
        seen[profile.portal] = path
        loaded.append((profile, record, targets) if with_targets else (profile, record))
    loaded.sort(key=lambda item: item[0].portal)
    return loaded


def fixture_dir(name: str) -> Path:
    """Path of a bundled fixture corpus: ``registry`` or ``demo``."""
    return Path(str(resources.files("odum.data").joinpath(name)))
