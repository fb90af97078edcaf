"""Positional dataset sampling and update-frequency accuracy checks."""

from __future__ import annotations

import datetime as dt
import enum
import logging
from dataclasses import dataclass
from typing import Sequence

from .scoring import AccuracyCount, SampleCount

log = logging.getLogger(__name__)

TARGET_SIZE = 14


@dataclass(frozen=True)
class SortCapabilities:
    by_relevance: bool = False
    by_modification_date: bool = False


class SortKey(str, enum.Enum):
    RELEVANCE = "relevance"
    MODIFICATION_DATE = "modification_date"
    DEFAULT = "default"


@dataclass(frozen=True)
class SampleIndexSet:
    entries: tuple[tuple[SortKey, int], ...]
    catalog_size: int
    target_size: int = TARGET_SIZE

    def __len__(self) -> int:
        return len(self.entries)

    def sort_keys(self) -> list[SortKey]:
        keys: list[SortKey] = []
        for key, _ in self.entries:
            if key not in keys:
                keys.append(key)
        return keys

    def indices(self, key: SortKey) -> list[int]:
        return [i for k, i in self.entries if k == key]


def _window(size: int, head: int, tail: int) -> list[int]:
    picked = list(range(min(head, size)))
    for i in range(max(size - tail, 0), size):
        if i not in picked:
            picked.append(i)
    return picked


def select_sample(catalog_size: int, caps: SortCapabilities) -> SampleIndexSet:
    """Positions of the datasets to inspect.

    Both sorts: first 4 and last 3 under each of relevance and modification
    date. Otherwise first 8 and last 6 under modification date, or under the
    catalog's default order when no sorting exists. A catalog no larger
    than the target size is taken whole, once, under the preferred sort key:
    a second ordering of the same datasets would only repeat them.
    """
    if catalog_size < 1:
        raise ValueError("catalog_size must be at least 1")
    if caps.by_relevance and caps.by_modification_date:
        plan = [(SortKey.RELEVANCE, 4, 3), (SortKey.MODIFICATION_DATE, 4, 3)]
    elif caps.by_modification_date:
        plan = [(SortKey.MODIFICATION_DATE, 8, 6)]
    else:
        plan = [(SortKey.DEFAULT, 8, 6)]
    if catalog_size <= TARGET_SIZE:
        plan = [(plan[0][0], catalog_size, 0)]
    entries = tuple((key, i) for key, head, tail in plan for i in _window(catalog_size, head, tail))
    return SampleIndexSet(entries, catalog_size)


class UpdateFrequency(str, enum.Enum):
    DAILY = "daily"
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    QUARTERLY = "quarterly"
    ANNUALLY = "annually"
    IRREGULAR = "irregular"
    UNSPECIFIED = "unspecified"

    @classmethod
    def parse(cls, value: str | None) -> "UpdateFrequency":
        """Map free text or EU frequency URIs onto the closed set."""
        if value is None:
            return cls.UNSPECIFIED
        text = str(value).strip().lower()
        if not text:
            return cls.UNSPECIFIED
        text = text.rsplit("/", 1)[-1].rsplit("#", 1)[-1]
        if text in _FREQ_ALIASES:
            return _FREQ_ALIASES[text]
        log.warning("unknown update frequency %r treated as irregular", value)
        return cls.IRREGULAR


_FREQ_ALIASES = {
    "daily": UpdateFrequency.DAILY,
    "day": UpdateFrequency.DAILY,
    "weekly": UpdateFrequency.WEEKLY,
    "week": UpdateFrequency.WEEKLY,
    "monthly": UpdateFrequency.MONTHLY,
    "month": UpdateFrequency.MONTHLY,
    "quarterly": UpdateFrequency.QUARTERLY,
    "quarter": UpdateFrequency.QUARTERLY,
    "annually": UpdateFrequency.ANNUALLY,
    "annual": UpdateFrequency.ANNUALLY,
    "yearly": UpdateFrequency.ANNUALLY,
    "irregular": UpdateFrequency.IRREGULAR,
    "irreg": UpdateFrequency.IRREGULAR,
    "unknown": UpdateFrequency.UNSPECIFIED,
    "unspecified": UpdateFrequency.UNSPECIFIED,
    "none": UpdateFrequency.UNSPECIFIED,
}


class AccuracyVerdict(str, enum.Enum):
    ACCURATE = "accurate"
    STALE = "stale"
    UNVERIFIABLE = "unverifiable"


def _month_index(d: dt.date) -> int:
    return d.year * 12 + d.month - 1


def accuracy_check(freq: UpdateFrequency, last_modified: dt.date, today: dt.date) -> AccuracyVerdict:
    """Does the last modification fit the declared update frequency?

    Each period allows the current or the previous one: monthly means this
    or last calendar month, quarterly this or last quarter, and so on.
    """
    if isinstance(last_modified, dt.datetime):
        last_modified = last_modified.date()
    if isinstance(today, dt.datetime):
        today = today.date()
    if last_modified > today:
        raise ValueError(f"last_modified {last_modified} lies after {today}")
    freq = UpdateFrequency(freq)
    if freq in (UpdateFrequency.IRREGULAR, UpdateFrequency.UNSPECIFIED):
        return AccuracyVerdict.UNVERIFIABLE
    if freq is UpdateFrequency.DAILY:
        ok = (today - last_modified).days <= 2
    elif freq is UpdateFrequency.WEEKLY:
        ok = (today - last_modified).days <= 14
    elif freq is UpdateFrequency.MONTHLY:
        ok = _month_index(today) - _month_index(last_modified) <= 1
    elif freq is UpdateFrequency.QUARTERLY:
        ok = _month_index(today) // 3 - _month_index(last_modified) // 3 <= 1
    else:
        ok = today.year - last_modified.year <= 1
    return AccuracyVerdict.ACCURATE if ok else AccuracyVerdict.STALE


def tally_sample(verdicts: Sequence):
    """Collapse per-dataset verdicts into one observation.

    Booleans give a ``SampleCount``. Accuracy verdicts give an
    ``AccuracyCount``; ``None`` stands for a dataset without a stated
    frequency and is counted nowhere.
    """
    if not verdicts:
        raise ValueError("cannot tally an empty sample")
    if all(isinstance(v, bool) for v in verdicts):
        return SampleCount(sum(verdicts), len(verdicts))
    accurate = specified = 0
    for v in verdicts:
        if v is None:
            continue
        v = AccuracyVerdict(v)
        specified += 1
        accurate += v is AccuracyVerdict.ACCURATE
    return AccuracyCount(accurate, specified)
