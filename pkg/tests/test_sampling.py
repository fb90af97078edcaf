import datetime as dt

import pytest

from odum.sampling import (
    AccuracyVerdict,
    SortCapabilities,
    SortKey,
    UpdateFrequency,
    accuracy_check,
    select_sample,
    tally_sample,
)
from odum.scoring import AccuracyCount, SampleCount

BOTH = SortCapabilities(True, True)
DATE_ONLY = SortCapabilities(False, True)
NONE = SortCapabilities(False, False)


def test_both_sorts_take_head_and_tail_of_each():
    s = select_sample(100, BOTH)
    assert s.indices(SortKey.RELEVANCE) == [0, 1, 2, 3, 97, 98, 99]
    assert s.indices(SortKey.MODIFICATION_DATE) == [0, 1, 2, 3, 97, 98, 99]
    assert s.sort_keys() == [SortKey.RELEVANCE, SortKey.MODIFICATION_DATE]


def test_relevance_only_falls_back_to_default_order():
    s = select_sample(100, SortCapabilities(True, False))
    assert s.sort_keys() == [SortKey.DEFAULT]


@pytest.mark.parametrize("caps,key", [(DATE_ONLY, SortKey.MODIFICATION_DATE), (NONE, SortKey.DEFAULT)])
def test_single_order_takes_eight_and_six(caps, key):
    s = select_sample(50, caps)
    assert s.indices(key) == [0, 1, 2, 3, 4, 5, 6, 7, 44, 45, 46, 47, 48, 49]


@pytest.mark.parametrize("caps", [BOTH, DATE_ONLY, NONE])
@pytest.mark.parametrize("size", [1, 2, 7, 10, 13, 14, 15, 16, 100, 10_000])
def test_sample_invariants(caps, size):
    s = select_sample(size, caps)
    assert len(s) == min(size, 14)
    assert len(set(s.entries)) == len(s.entries)
    assert all(0 <= i < size for _, i in s.entries)
    assert s == select_sample(size, caps)


def test_small_catalog_taken_whole_once():
    s = select_sample(10, BOTH)
    assert s.entries == tuple((SortKey.RELEVANCE, i) for i in range(10))


def test_empty_catalog_rejected():
    with pytest.raises(ValueError):
        select_sample(0, BOTH)


@pytest.mark.parametrize(
    "text,freq",
    [
        ("Monthly", UpdateFrequency.MONTHLY),
        ("http://publications.europa.eu/resource/authority/frequency/ANNUAL", UpdateFrequency.ANNUALLY),
        ("http://purl.org/cld/freq/quarterly", UpdateFrequency.QUARTERLY),
        ("", UpdateFrequency.UNSPECIFIED),
        (None, UpdateFrequency.UNSPECIFIED),
        ("irregular", UpdateFrequency.IRREGULAR),
    ],
)
def test_frequency_parsing(text, freq):
    assert UpdateFrequency.parse(text) is freq


def test_unknown_frequency_warns(caplog):
    assert UpdateFrequency.parse("fortnightly-ish") is UpdateFrequency.IRREGULAR
    assert "fortnightly-ish" in caplog.text


D = dt.date
ACC, STALE, UNV = AccuracyVerdict.ACCURATE, AccuracyVerdict.STALE, AccuracyVerdict.UNVERIFIABLE


@pytest.mark.parametrize(
    "freq,modified,today,verdict",
    [
        (UpdateFrequency.MONTHLY, D(2024, 1, 1), D(2024, 2, 20), ACC),
        (UpdateFrequency.MONTHLY, D(2023, 12, 31), D(2024, 2, 1), STALE),
        (UpdateFrequency.MONTHLY, D(2023, 12, 15), D(2024, 1, 2), ACC),
        (UpdateFrequency.QUARTERLY, D(2023, 10, 1), D(2024, 3, 31), ACC),
        (UpdateFrequency.QUARTERLY, D(2023, 9, 30), D(2024, 1, 1), STALE),
        (UpdateFrequency.ANNUALLY, D(2023, 1, 1), D(2024, 12, 31), ACC),
        (UpdateFrequency.ANNUALLY, D(2022, 12, 31), D(2024, 1, 1), STALE),
        (UpdateFrequency.DAILY, D(2024, 2, 18), D(2024, 2, 20), ACC),
        (UpdateFrequency.DAILY, D(2024, 2, 17), D(2024, 2, 20), STALE),
        (UpdateFrequency.WEEKLY, D(2024, 2, 6), D(2024, 2, 20), ACC),
        (UpdateFrequency.WEEKLY, D(2024, 2, 5), D(2024, 2, 20), STALE),
        (UpdateFrequency.IRREGULAR, D(2020, 1, 1), D(2024, 2, 20), UNV),
        (UpdateFrequency.UNSPECIFIED, D(2020, 1, 1), D(2024, 2, 20), UNV),
    ],
)
def test_accuracy_windows(freq, modified, today, verdict):
    assert accuracy_check(freq, modified, today) is verdict


def test_accuracy_rejects_future_modification():
    with pytest.raises(ValueError):
        accuracy_check(UpdateFrequency.MONTHLY, D(2024, 3, 1), D(2024, 2, 1))


def test_tally_booleans():
    assert tally_sample([True, False, True]) == SampleCount(2, 3)


def test_tally_verdicts_skip_missing_frequency():
    assert tally_sample([ACC, STALE, None, UNV, ACC, None]) == AccuracyCount(2, 4)


def test_tally_empty_rejected():
    with pytest.raises(ValueError):
        tally_sample([])
