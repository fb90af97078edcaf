"""Binarization of observations and weighted aggregation into scorecards."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .schema import (
    DependentAccuracy,
    ExternalScore,
    FrameworkSchema,
    Manual,
    Sampled,
    SubDimensionSpec,
    TimedLoad,
    load_schema,
)

REGIONS = ("EU", "GCC", "Other")
PROVENANCES = ("manual", "probe", "override")


class ObservationError(ValueError):
    """An observation does not fit the criterion it is scored against."""


class AssessmentError(ValueError):
    pass


# --- observations ------------------------------------------------------------


@dataclass(frozen=True)
class Boolean:
    value: bool
    kind = "bool"


@dataclass(frozen=True)
class SampleCount:
    satisfied: int
    total: int
    kind = "sample"

    def __post_init__(self):
        if self.satisfied < 0 or self.total < 0:
            raise ObservationError("sample counts must be non-negative")
        if self.satisfied > self.total:
            raise ObservationError(f"satisfied {self.satisfied} exceeds total {self.total}")


@dataclass(frozen=True)
class AccuracyCount:
    accurate: int
    frequency_specified: int
    kind = "accuracy"

    def __post_init__(self):
        if self.accurate < 0 or self.frequency_specified < 0:
            raise ObservationError("accuracy counts must be non-negative")
        if self.accurate > self.frequency_specified:
            raise ObservationError(
                f"accurate {self.accurate} exceeds frequency_specified {self.frequency_specified}"
            )


@dataclass(frozen=True)
class Measured:
    value: float
    unit: str = ""
    kind = "measured"


@dataclass(frozen=True)
class Unobserved:
    kind = "unobserved"


Observation = Union[Boolean, SampleCount, AccuracyCount, Measured, Unobserved]


def observation_from_dict(doc: Mapping) -> Observation:
    kind = doc.get("kind")
    try:
        if kind == "bool":
            if not isinstance(doc["value"], bool):
                raise ObservationError(f"bool observation needs true/false, got {doc['value']!r}")
            return Boolean(doc["value"])
        if kind == "sample":
            return SampleCount(int(doc["satisfied"]), int(doc["total"]))
        if kind == "accuracy":
            return AccuracyCount(int(doc["accurate"]), int(doc["frequency_specified"]))
        if kind == "measured":
            return Measured(float(doc["value"]), str(doc.get("unit", "")))
        if kind == "unobserved":
            return Unobserved()
    except KeyError as exc:
        raise ObservationError(f"{kind} observation lacks field {exc.args[0]!r}") from None
    raise ObservationError(f"unknown observation kind {kind!r}")


def observation_to_dict(obs: Observation) -> dict:
    if isinstance(obs, Boolean):
        return {"kind": "bool", "value": obs.value}
    if isinstance(obs, SampleCount):
        return {"kind": "sample", "satisfied": obs.satisfied, "total": obs.total}
    if isinstance(obs, AccuracyCount):
        return {"kind": "accuracy", "accurate": obs.accurate, "frequency_specified": obs.frequency_specified}
    if isinstance(obs, Measured):
        out = {"kind": "measured", "value": obs.value}
        if obs.unit:
            out["unit"] = obs.unit
        return out
    return {"kind": "unobserved"}


@dataclass(frozen=True)
class PortalProfile:
    portal: str
    country: str
    region: str
    url: str

    def __post_init__(self):
        if not self.url:
            raise AssessmentError(f"{self.portal}: url must not be empty")
        if self.region not in REGIONS:
            raise AssessmentError(f"{self.portal}: region {self.region!r} not one of {REGIONS}")


@dataclass
class AssessmentRecord:
    portal: str
    assessed_on: dt.date | None = None
    observations: dict[str, Observation] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def merged_with(self, fragment: "AssessmentRecord") -> "AssessmentRecord":
        """Fill gaps from ``fragment``; existing manual entries always win."""
        obs = dict(self.observations)
        prov = dict(self.provenance)
        for key, value in fragment.observations.items():
            if key in obs and not isinstance(obs[key], Unobserved) and prov.get(key, "manual") != "probe":
                continue
            obs[key] = value
            prov[key] = fragment.provenance.get(key, "probe")
        return AssessmentRecord(self.portal, self.assessed_on, obs, prov)


# --- binarization ------------------------------------------------------------


def sample_threshold(criterion: Sampled, total: int) -> int:
    """Number of satisfying datasets needed out of ``total`` sampled."""
    if total >= criterion.pass_denominator:
        return criterion.pass_numerator
    return math.ceil(Fraction(criterion.ratio) * total)


def _expect(spec: SubDimensionSpec, obs, kinds) -> None:
    if not isinstance(obs, kinds):
        names = "/".join(k.kind for k in kinds) if isinstance(kinds, tuple) else kinds.kind
        raise ObservationError(
            f"{spec.id}: {spec.criterion.kind} criterion expects a {names} observation, got {obs.kind}"
        )


def binarize(
    spec: SubDimensionSpec,
    obs: Observation,
    record: AssessmentRecord | None = None,
    schema: FrameworkSchema | None = None,
    flags: list[str] | None = None,
) -> int:
    """Reduce one observation to 0 or 1 under its sub-dimension's criterion.

    ``record`` is only consulted by dependent criteria (e4 looks up e3).
    Unobserved entries score 0 and, if ``flags`` is given, leave a note there.
    """
    crit = spec.criterion
    if isinstance(obs, Unobserved):
        if flags is not None:
            flags.append(f"{spec.id}: unobserved, scored 0")
        return 0

    if isinstance(crit, Manual):
        _expect(spec, obs, Boolean)
        return int(obs.value)

    if isinstance(crit, Sampled):
        _expect(spec, obs, SampleCount)
        if obs.total == 0:
            return 0
        return int(obs.satisfied >= sample_threshold(crit, obs.total))

    if isinstance(crit, DependentAccuracy):
        _expect(spec, obs, AccuracyCount)
        if record is None or crit.depends_on not in record.observations:
            raise ObservationError(f"{spec.id}: needs the {crit.depends_on} observation")
        schema = schema or load_schema()
        parent = binarize(schema[crit.depends_on], record.observations[crit.depends_on], record, schema)
        if not parent or obs.frequency_specified == 0:
            return 0
        return int(obs.accurate >= math.ceil(Fraction(crit.ratio) * obs.frequency_specified))

    if isinstance(crit, ExternalScore):
        _expect(spec, obs, Measured)
        return int(obs.value >= crit.min_pass)

    if isinstance(crit, TimedLoad):
        _expect(spec, obs, Measured)
        seconds = obs.value / 1000.0 if obs.unit == "ms" else obs.value
        return int(seconds < crit.max_seconds)

    raise ObservationError(f"{spec.id}: unsupported criterion {crit!r}")


# --- scorecards --------------------------------------------------------------


@dataclass
class PortalScorecard:
    portal: str
    binary: dict[str, int]
    dimension_scores: dict[str, int]
    total: int
    flags: list[str] = field(default_factory=list)
    provenance: dict[str, str] = field(default_factory=dict)
    schema_fingerprint: str = ""

    def to_dict(self) -> dict:
        return {
            "portal": self.portal,
            "total": self.total,
            "dimension_scores": dict(self.dimension_scores),
            "binary": dict(self.binary),
            "provenance": dict(self.provenance),
            "flags": list(self.flags),
            "schema_fingerprint": self.schema_fingerprint,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PortalScorecard":
        return cls(
            portal=doc["portal"],
            binary={k: int(v) for k, v in doc["binary"].items()},
            dimension_scores={k: int(v) for k, v in doc["dimension_scores"].items()},
            total=int(doc["total"]),
            flags=list(doc.get("flags", [])),
            provenance=dict(doc.get("provenance", {})),
            schema_fingerprint=doc.get("schema_fingerprint", ""),
        )


def score_portal(schema: FrameworkSchema, record: AssessmentRecord) -> PortalScorecard:
    """Weighted sum of binarized sub-dimension scores, per dimension and overall."""
    unknown = sorted(set(record.observations) - set(schema.ids))
    if unknown:
        raise AssessmentError(f"{record.portal}: unknown sub-dimension ids {', '.join(unknown)}")
    flags: list[str] = []
    binary: dict[str, int] = {}
    dimension_scores: dict[str, int] = {}
    for dim in schema.dimensions:
        subtotal = 0
        for spec in dim.sub_dimensions:
            obs = record.observations.get(spec.id, Unobserved())
            bit = binarize(spec, obs, record, schema, flags)
            binary[spec.id] = bit
            subtotal += bit * schema.tier_values[spec.weight]
        dimension_scores[dim.letter] = subtotal
    return PortalScorecard(
        portal=record.portal,
        binary=binary,
        dimension_scores=dimension_scores,
        total=sum(dimension_scores.values()),
        flags=flags,
        provenance={k: record.provenance[k] for k in schema.ids if k in record.provenance},
        schema_fingerprint=schema.fingerprint(),
    )


def rank_portals(
    scorecards: Sequence[PortalScorecard],
    countries: Mapping[str, str] | None = None,
) -> list[tuple[int, str, int]]:
    """Competition ranking (1, 2, 2, 4) by descending total.

    Ties are ordered by country name, falling back to the portal id when no
    country mapping is given.
    """
    ids = [s.portal for s in scorecards]
    dupes = sorted({p for p in ids if ids.count(p) > 1})
    if dupes:
        raise AssessmentError(f"duplicate portal id {', '.join(dupes)}")
    countries = countries or {}
    ordered = sorted(scorecards, key=lambda s: (-s.total, countries.get(s.portal, s.portal), s.portal))
    ranking = []
    for pos, card in enumerate(ordered, start=1):
        if ranking and ranking[-1][2] == card.total:
            rank = ranking[-1][0]
        else:
            rank = pos
        ranking.append((rank, card.portal, card.total))
    return ranking


@dataclass
class RegionalAggregates:
    overall_mean: float | None
    per_region_mean: dict[str, float]
    per_region_count: dict[str, int]
    counts_above: dict[float, int]
    counts_below: dict[float, int]


def _mean1(values: Sequence[float]) -> float | None:
    if not values:
        return None
    return round(sum(values) / len(values) + 0.0, 1)


def regional_aggregates(
    scorecards: Sequence[PortalScorecard],
    profiles: Iterable[PortalProfile],
    above: Sequence[float] = (100,),
    below: Sequence[float] = (50,),
) -> RegionalAggregates:
    """Means overall and per region (1 decimal), plus strict threshold counters."""
    by_portal = {p.portal: p for p in profiles}
    missing = [s.portal for s in scorecards if s.portal not in by_portal]
    if missing:
        raise AssessmentError(f"profile missing for {', '.join(missing)}")
    totals = [s.total for s in scorecards]
    per_region: dict[str, list[int]] = {}
    for s in scorecards:
        per_region.setdefault(by_portal[s.portal].region, []).append(s.total)
    return RegionalAggregates(
        overall_mean=_mean1(totals),
        per_region_mean={r: _mean1(v) for r, v in sorted(per_region.items())},
        per_region_count={r: len(v) for r, v in sorted(per_region.items())},
        counts_above={t: sum(1 for x in totals if x > t) for t in above},
        counts_below={t: sum(1 for x in totals if x < t) for t in below},
    )


# --- score matrix ------------------------------------------------------------


@dataclass
class ScoreMatrix:
    portals: list[str]
    columns: list[str]
    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int8)
        if self.cells.shape != (len(self.portals), len(self.columns)):
            raise ValueError("score matrix is not rectangular")

    def to_csv(self) -> str:
        lines = [",".join(["portal", *self.columns])]
        for portal, row in zip(self.portals, self.cells):
            lines.append(",".join([portal, *(str(int(v)) for v in row)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ScoreMatrix":
        rows = [line.split(",") for line in text.strip().splitlines()]
        header, body = rows[0], rows[1:]
        if header[0] != "portal":
            raise ValueError("score matrix CSV must start with a 'portal' column")
        return cls([r[0] for r in body], header[1:], np.array([[int(v) for v in r[1:]] for r in body]))


def build_score_matrix(schema: FrameworkSchema, scorecards: Sequence[PortalScorecard]) -> ScoreMatrix:
    fp = schema.fingerprint()
    ids = schema.ids
    for card in scorecards:
        if card.schema_fingerprint and card.schema_fingerprint != fp:
            raise AssessmentError(f"{card.portal}: scored under a different schema")
        if list(card.binary) != ids:
            raise AssessmentError(f"{card.portal}: scorecard columns do not match the schema")
    cells = np.array([[card.binary[i] for i in ids] for card in scorecards], dtype=np.int8).reshape(
        len(scorecards), len(ids)
    )
    return ScoreMatrix([c.portal for c in scorecards], ids, cells)


class RubricScorer(TransformerMixin, BaseEstimator):
    """Maps binary sub-dimension matrices to weighted features or totals.

    ``fit`` only checks the column layout against the schema, so the scorer
    drops into a pipeline ahead of a clustering step.

    Parameters
    ----------
    schema : FrameworkSchema, optional
        Rubric providing weights; the builtin one when omitted.
    output : {"weighted", "dimensions", "total"}
        ``weighted`` keeps one column per sub-dimension (binary x weight),
        ``dimensions`` sums them per dimension, ``total`` gives one column.
    """

    def __init__(self, schema: FrameworkSchema | None = None, output: str = "weighted"):
        self.schema = schema
        self.output = output

    def fit(self, X, y=None):
        schema = self.schema or load_schema()
        X = self._check(X, schema)
        if self.output not in ("weighted", "dimensions", "total"):
            raise ValueError(f"unknown output {self.output!r}")
        self.weights_ = np.array(schema.weights(), dtype=float)
        letters = [s.letter for s in schema]
        self.dimension_letters_ = schema.letters
        self.dimension_index_ = np.array([self.dimension_letters_.index(x) for x in letters])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = self._check(X, self.schema or load_schema())
        weighted = X * self.weights_
        if self.output == "weighted":
            return weighted
        dims = np.zeros((X.shape[0], len(self.dimension_letters_)))
        for col, d in enumerate(self.dimension_index_):
            dims[:, d] += weighted[:, col]
        if self.output == "dimensions":
            return dims
        return dims.sum(axis=1, keepdims=True)

    @staticmethod
    def _check(X, schema: FrameworkSchema) -> np.ndarray:
        if isinstance(X, ScoreMatrix):
            X = X.cells
        from sklearn.utils import check_array

        X = check_array(X, dtype=float)
        if X.shape[1] != len(schema):
            raise ValueError(f"expected {len(schema)} sub-dimension columns, got {X.shape[1]}")
        if not np.isin(X, (0.0, 1.0)).all():
            raise ValueError("score matrix cells must be 0 or 1")
        return X
