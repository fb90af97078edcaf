"""Rubric definition: dimensions, sub-dimensions, weight tiers and criteria.

The builtin rubric lives in ``framework/default.json`` and is loaded like any
other schema document, so thresholds and weights can be revised without
touching code.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping, Union

DIMENSION_LETTERS = "abcdefghi"

EXPECTED_COUNTS = {"a": 4, "b": 3, "c": 4, "d": 11, "e": 9, "f": 15, "g": 13, "h": 7, "i": 6}
PRINTED_WEIGHT_SUMS = {"a": 9, "b": 7, "c": 8, "d": 26, "e": 25, "f": 38, "g": 32, "h": 21, "i": 14}
PRINTED_TOTAL = 180

# Criterion placement of the builtin rubric; deviations are reported, not rejected.
EXPECTED_SAMPLED = frozenset(
    ["d2", "d3", "d4", "d5", "d7", "d8", "d10", "d11", "e1", "e2", "e3", "e7", "f10", "f11"]
)
EXPECTED_PLACEMENT = {"e4": "dependent_accuracy", "c4": "external_score", "c1": "timed_load"}

_ID_RE = re.compile(r"^([a-i])([1-9][0-9]*)$")


class SchemaError(ValueError):
    """Raised when a schema document cannot be turned into a rubric."""


class SchemaParseError(SchemaError):
    """The schema document is not readable JSON."""


class WeightTier(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


_DEFAULT_TIER_VALUES = {WeightTier.LOW: 1, WeightTier.MEDIUM: 2, WeightTier.HIGH: 3}


def weight_value(tier: WeightTier) -> int:
    """Numeric multiplier of a weight tier: low 1, medium 2, high 3."""
    return _DEFAULT_TIER_VALUES[WeightTier(tier)]


@dataclass(frozen=True)
class Manual:
    kind = "manual"


@dataclass(frozen=True)
class Sampled:
    """Pass when enough datasets of the sample satisfy the aspect.

    A full sample needs ``pass_numerator`` of ``pass_denominator``; smaller
    samples need ``ceil(ratio * size)``.
    """

    pass_numerator: int = 10
    pass_denominator: int = 14
    ratio: Fraction = Fraction(7, 10)
    kind = "sampled"

    def __post_init__(self):
        if not 0 < self.pass_numerator <= self.pass_denominator:
            raise SchemaError("sampled criterion needs 0 < pass_numerator <= pass_denominator")
        if not 0 < self.ratio <= 1:
            raise SchemaError("sampled criterion ratio must lie in (0, 1]")


@dataclass(frozen=True)
class DependentAccuracy:
    depends_on: str = "e3"
    ratio: Fraction = Fraction(7, 10)
    kind = "dependent_accuracy"

    def __post_init__(self):
        if not 0 < self.ratio <= 1:
            raise SchemaError("dependent_accuracy ratio must lie in (0, 1]")


@dataclass(frozen=True)
class ExternalScore:
    min_pass: float = 61
    kind = "external_score"


@dataclass(frozen=True)
class TimedLoad:
    max_seconds: float = 4.0
    kind = "timed_load"


CriterionKind = Union[Manual, Sampled, DependentAccuracy, ExternalScore, TimedLoad]

CRITERION_KINDS = ("manual", "sampled", "dependent_accuracy", "external_score", "timed_load")


@dataclass(frozen=True)
class SubDimensionSpec:
    id: str
    title: str
    description: str
    weight: WeightTier
    criterion: CriterionKind = field(default_factory=Manual)

    @property
    def letter(self) -> str:
        return self.id[0]

    @property
    def index(self) -> int:
        return int(self.id[1:])


@dataclass(frozen=True)
class Dimension:
    letter: str
    name: str
    sub_dimensions: tuple[SubDimensionSpec, ...]


@dataclass(frozen=True)
class PublishedConstants:
    """Figures published alongside the rubric. Reference only, never an input."""

    claimed_total_max: int | None = None
    claimed_dimension_maxima: Mapping[str, int] = field(default_factory=dict)
    reported_averages: Mapping[str, float] = field(default_factory=dict)
    reported_top_scores: Mapping[str, int] = field(default_factory=dict)
    reported_threshold_counts: Mapping[str, int] = field(default_factory=dict)
    reported_portal_count: int | None = None


@dataclass(frozen=True)
class FrameworkSchema:
    dimensions: tuple[Dimension, ...]
    profile_name: str = "custom"
    published_reference: PublishedConstants = field(default_factory=PublishedConstants)
    tier_values: Mapping[WeightTier, int] = field(default_factory=lambda: dict(_DEFAULT_TIER_VALUES))

    def __iter__(self) -> Iterator[SubDimensionSpec]:
        for dim in self.dimensions:
            yield from dim.sub_dimensions

    def __len__(self) -> int:
        return sum(len(d.sub_dimensions) for d in self.dimensions)

    def __getitem__(self, sub_id: str) -> SubDimensionSpec:
        for spec in self:
            if spec.id == sub_id:
                return spec
        raise KeyError(sub_id)

    def __contains__(self, sub_id: object) -> bool:
        return any(spec.id == sub_id for spec in self)

    @property
    def ids(self) -> list[str]:
        return [spec.id for spec in self]

    @property
    def letters(self) -> list[str]:
        return [d.letter for d in self.dimensions]

    def weight_of(self, sub_id: str) -> int:
        return self.tier_values[self[sub_id].weight]

    def weights(self) -> list[int]:
        """Numeric weights in schema column order."""
        return [self.tier_values[spec.weight] for spec in self]

    def dimension_max(self, letter: str) -> int:
        dim = next(d for d in self.dimensions if d.letter == letter)
        return sum(self.tier_values[s.weight] for s in dim.sub_dimensions)

    def dimension_maxima(self) -> dict[str, int]:
        return {d.letter: self.dimension_max(d.letter) for d in self.dimensions}

    def total_max(self) -> int:
        return sum(self.weights())

    def scaled(self, factor: int) -> "FrameworkSchema":
        """Copy with every tier value multiplied by ``factor``."""
        if factor <= 0:
            raise ValueError("factor must be positive")
        values = {tier: v * factor for tier, v in self.tier_values.items()}
        return FrameworkSchema(self.dimensions, self.profile_name, self.published_reference, values)

    def fingerprint(self) -> str:
        """Stable digest used to detect scorecards produced under different rubrics."""
        import hashlib

        payload = json.dumps(schema_to_dict(self), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# --- parsing -----------------------------------------------------------------


def _parse_ratio(value) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"invalid ratio {value!r}") from exc


def _parse_criterion(sub_id: str, doc) -> CriterionKind:
    if doc is None:
        return Manual()
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise SchemaError(f"{sub_id}: criterion must be an object with a 'kind'")
    kind = doc["kind"]
    params = {k: v for k, v in doc.items() if k != "kind"}
    try:
        if kind == "manual":
            return Manual()
        if kind == "sampled":
            if "ratio" in params:
                params["ratio"] = _parse_ratio(params["ratio"])
            return Sampled(**params)
        if kind == "dependent_accuracy":
            if "ratio" in params:
                params["ratio"] = _parse_ratio(params["ratio"])
            return DependentAccuracy(**params)
        if kind == "external_score":
            return ExternalScore(**params)
        if kind == "timed_load":
            return TimedLoad(**params)
    except TypeError as exc:
        raise SchemaError(f"{sub_id}: bad parameters for criterion {kind!r}: {exc}") from exc
    raise SchemaError(f"{sub_id}: unknown criterion kind {kind!r}")


def _parse_weight(sub_id: str, value) -> WeightTier:
    try:
        return WeightTier(str(value).lower())
    except ValueError:
        raise SchemaError(f"{sub_id}: weight {value!r} outside tier set low|medium|high") from None


def schema_from_dict(doc) -> FrameworkSchema:
    if not isinstance(doc, Mapping):
        raise SchemaError("schema document must be a JSON object")
    for key in ("profile_name", "dimensions"):
        if key not in doc:
            raise SchemaError(f"schema document lacks required field {key!r}")
    if not isinstance(doc["dimensions"], list):
        raise SchemaError("'dimensions' must be an array")

    seen: set[str] = set()
    dims = []
    for d in doc["dimensions"]:
        try:
            letter, name, subs = d["letter"], d["name"], d["sub_dimensions"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed dimension entry: {d!r}") from exc
        if letter not in DIMENSION_LETTERS:
            raise SchemaError(f"dimension letter {letter!r} outside a-i")
        if letter in {x.letter for x in dims}:
            raise SchemaError(f"duplicate dimension {letter!r}")
        specs = []
        for s in subs:
            try:
                sub_id = s["id"]
                title = s["title"]
            except (KeyError, TypeError) as exc:
                raise SchemaError(f"malformed sub-dimension in {letter!r}: {s!r}") from exc
            if sub_id in seen:
                raise SchemaError(f"duplicate id {sub_id!r}")
            seen.add(sub_id)
            if "weight" not in s:
                raise SchemaError(f"{sub_id}: missing weight")
            specs.append(
                SubDimensionSpec(
                    id=sub_id,
                    title=title,
                    description=s.get("description", ""),
                    weight=_parse_weight(sub_id, s["weight"]),
                    criterion=_parse_criterion(sub_id, s.get("criterion")),
                )
            )
        dims.append(Dimension(letter, name, tuple(specs)))

    present = {d.letter for d in dims}
    missing = [x for x in DIMENSION_LETTERS if x not in present]
    if missing:
        raise SchemaError(f"missing dimension {', '.join(missing)}")

    tier_values = dict(_DEFAULT_TIER_VALUES)
    for key, value in (doc.get("tier_values") or {}).items():
        tier = _parse_weight("tier_values", key)
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise SchemaError(f"tier value for {key!r} must be a positive integer")
        tier_values[tier] = value

    ref = doc.get("published_reference") or {}
    published = PublishedConstants(
        claimed_total_max=ref.get("claimed_total_max"),
        claimed_dimension_maxima=dict(ref.get("claimed_dimension_maxima", {})),
        reported_averages=dict(ref.get("reported_averages", {})),
        reported_top_scores=dict(ref.get("reported_top_scores", {})),
        reported_threshold_counts=dict(ref.get("reported_threshold_counts", {})),
        reported_portal_count=ref.get("reported_portal_count"),
    )
    return FrameworkSchema(tuple(dims), str(doc["profile_name"]), published, tier_values)


def _criterion_to_dict(c: CriterionKind) -> dict:
    out: dict = {"kind": c.kind}
    if isinstance(c, Sampled):
        out.update(pass_numerator=c.pass_numerator, pass_denominator=c.pass_denominator, ratio=str(c.ratio))
    elif isinstance(c, DependentAccuracy):
        out.update(depends_on=c.depends_on, ratio=str(c.ratio))
    elif isinstance(c, ExternalScore):
        out.update(min_pass=c.min_pass)
    elif isinstance(c, TimedLoad):
        out.update(max_seconds=c.max_seconds)
    return out


def schema_to_dict(schema: FrameworkSchema) -> dict:
    ref = schema.published_reference
    return {
        "profile_name": schema.profile_name,
        "tier_values": {t.value: schema.tier_values[t] for t in WeightTier},
        "dimensions": [
            {
                "letter": d.letter,
                "name": d.name,
                "sub_dimensions": [
                    {
                        "id": s.id,
                        "title": s.title,
                        "description": s.description,
                        "weight": s.weight.value,
                        "criterion": _criterion_to_dict(s.criterion),
                    }
                    for s in d.sub_dimensions
                ],
            }
            for d in schema.dimensions
        ],
        "published_reference": {
            "claimed_total_max": ref.claimed_total_max,
            "claimed_dimension_maxima": dict(ref.claimed_dimension_maxima),
            "reported_averages": dict(ref.reported_averages),
            "reported_top_scores": dict(ref.reported_top_scores),
            "reported_threshold_counts": dict(ref.reported_threshold_counts),
            "reported_portal_count": ref.reported_portal_count,
        },
    }


def dump_schema(schema: FrameworkSchema) -> str:
    return json.dumps(schema_to_dict(schema), indent=2, ensure_ascii=False) + "\n"


_BUILTIN: FrameworkSchema | None = None


def load_schema(source: str | Path | Mapping | None = None) -> FrameworkSchema:
    """Load a rubric.

    ``None`` gives the builtin rubric; a path is read as a UTF-8 JSON
    document; a mapping is taken as an already-parsed document.
    """
    global _BUILTIN
    if source is None:
        if _BUILTIN is None:
            text = resources.files("odum.framework").joinpath("default.json").read_text(encoding="utf-8")
            _BUILTIN = schema_from_dict(json.loads(text))
        return _BUILTIN
    if isinstance(source, Mapping):
        return schema_from_dict(source)
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaParseError(f"{source}: not valid JSON ({exc})") from exc
    return schema_from_dict(doc)


# --- validation --------------------------------------------------------------


@dataclass
class ValidationReport:
    profile_name: str
    dimension_count: int
    sub_dimension_count: int
    counts: dict[str, int]
    weight_sums: dict[str, int]
    total: int
    census: dict[str, int]
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_text(self) -> str:
        lines = [
            f"profile: {self.profile_name}",
            f"dimensions: {self.dimension_count}",
            f"sub-dimensions: {self.sub_dimension_count}",
            "per-dimension counts: " + ", ".join(f"{k}={v}" for k, v in self.counts.items()),
            "per-dimension weight sums: " + ", ".join(f"{k}={v}" for k, v in self.weight_sums.items()),
            f"total max: {self.total}",
            "criterion census: " + ", ".join(f"{k}={v}" for k, v in self.census.items()),
        ]
        lines += [f"ERROR: {e}" for e in self.errors]
        lines += [f"WARNING: {w}" for w in self.warnings]
        lines.append("structure: " + ("ok" if self.ok else "invalid"))
        return "\n".join(lines) + "\n"


def validate_schema(schema: FrameworkSchema) -> ValidationReport:
    counts = {d.letter: len(d.sub_dimensions) for d in schema.dimensions}
    sums = schema.dimension_maxima()
    census = {k: 0 for k in CRITERION_KINDS}
    for spec in schema:
        census[spec.criterion.kind] += 1
    report = ValidationReport(
        profile_name=schema.profile_name,
        dimension_count=len(schema.dimensions),
        sub_dimension_count=len(schema),
        counts=counts,
        weight_sums=sums,
        total=schema.total_max(),
        census=census,
    )
    errors, warnings = report.errors, report.warnings

    if len(schema.dimensions) != 9:
        errors.append(f"expected 9 dimensions, found {len(schema.dimensions)}")
    if len(schema) != 72:
        errors.append(f"expected 72 sub-dimensions, found {len(schema)}")
    for letter, expected in EXPECTED_COUNTS.items():
        if letter in counts and counts[letter] != expected:
            errors.append(f"dimension {letter} has {counts[letter]} sub-dimensions, expected {expected}")

    seen = set()
    for dim in schema.dimensions:
        for pos, spec in enumerate(dim.sub_dimensions, start=1):
            m = _ID_RE.match(spec.id)
            if not m:
                errors.append(f"malformed id {spec.id!r}")
                continue
            if m.group(1) != dim.letter:
                errors.append(f"{spec.id} listed under dimension {dim.letter}")
            if int(m.group(2)) != pos:
                errors.append(f"{spec.id} out of sequence in dimension {dim.letter} (position {pos})")
            if spec.id in seen:
                errors.append(f"duplicate id {spec.id!r}")
            seen.add(spec.id)
            c = spec.criterion
            if isinstance(c, DependentAccuracy) and c.depends_on not in schema:
                errors.append(f"{spec.id} depends on unknown sub-dimension {c.depends_on!r}")

    for letter, printed in PRINTED_WEIGHT_SUMS.items():
        if letter in sums and sums[letter] != printed:
            warnings.append(f"dimension {letter} weight sum {sums[letter]} differs from printed rubric {printed}")
    sampled = {s.id for s in schema if isinstance(s.criterion, Sampled)}
    if sampled != EXPECTED_SAMPLED:
        warnings.append("sampled criteria differ from the builtin placement: " + ", ".join(sorted(sampled ^ EXPECTED_SAMPLED)))
    for sub_id, kind in EXPECTED_PLACEMENT.items():
        if sub_id in schema and schema[sub_id].criterion.kind != kind:
            warnings.append(f"{sub_id} carries {schema[sub_id].criterion.kind}, builtin uses {kind}")

    ref = schema.published_reference
    for letter, claimed in sorted(ref.claimed_dimension_maxima.items()):
        if letter in sums and sums[letter] != claimed:
            warnings.append(f"dimension {letter} computed max {sums[letter]} vs published {claimed}")
    if ref.claimed_total_max is not None and report.total != ref.claimed_total_max:
        warnings.append(f"total computed max {report.total} vs published {ref.claimed_total_max}")
    return report
