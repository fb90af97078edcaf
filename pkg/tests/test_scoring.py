import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.pipeline import make_pipeline

from odum.scoring import (
    AccuracyCount,
    AssessmentError,
    AssessmentRecord,
    Boolean,
    Measured,
    ObservationError,
    PortalProfile,
    PortalScorecard,
    RubricScorer,
    SampleCount,
    ScoreMatrix,
    Unobserved,
    binarize,
    build_score_matrix,
    observation_from_dict,
    observation_to_dict,
    rank_portals,
    regional_aggregates,
    sample_threshold,
    score_portal,
)
from odum.schema import Sampled

from oracles import oracle_total, random_record, rubric_weights


def card(portal, total, **kw):
    return PortalScorecard(portal, {}, {}, total, **kw)


@pytest.mark.parametrize(
    "total,need",
    [(14, 10), (20, 10), (13, 10), (10, 7), (7, 5), (3, 3), (1, 1)],
)
def test_sample_threshold(total, need):
    assert sample_threshold(Sampled(), total) == need


@pytest.mark.parametrize(
    "sub,obs,bit",
    [
        ("d2", SampleCount(10, 14), 1),
        ("d2", SampleCount(9, 14), 0),
        ("d2", SampleCount(7, 10), 1),
        ("d2", SampleCount(6, 10), 0),
        ("d2", SampleCount(0, 0), 0),
        ("c4", Measured(61, "score"), 1),
        ("c4", Measured(60.9, "score"), 0),
        ("c1", Measured(3.9, "s"), 1),
        ("c1", Measured(4.0, "s"), 0),
        ("c1", Measured(3999, "ms"), 1),
        ("c1", Measured(4000, "ms"), 0),
        ("a1", Boolean(True), 1),
        ("a1", Boolean(False), 0),
        ("a1", Unobserved(), 0),
    ],
)
def test_binarize_table(schema, sub, obs, bit):
    assert binarize(schema[sub], obs) == bit


def test_unobserved_leaves_flag(schema):
    flags = []
    assert binarize(schema["b2"], Unobserved(), flags=flags) == 0
    assert flags == ["b2: unobserved, scored 0"]


def test_kind_mismatch_rejected(schema):
    with pytest.raises(ObservationError, match="expects a sample"):
        binarize(schema["d2"], Boolean(True))
    with pytest.raises(ObservationError):
        binarize(schema["a1"], Measured(3.0))


def test_e4_requires_e3_observation(schema):
    rec = AssessmentRecord("p", observations={"e4": AccuracyCount(5, 5)})
    with pytest.raises(ObservationError, match="e3"):
        binarize(schema["e4"], rec.observations["e4"], rec, schema)


@pytest.mark.parametrize(
    "e3,e4,bit",
    [
        (SampleCount(14, 14), AccuracyCount(7, 10), 1),
        (SampleCount(14, 14), AccuracyCount(6, 10), 0),
        (SampleCount(9, 14), AccuracyCount(10, 10), 0),
        (SampleCount(14, 14), AccuracyCount(0, 0), 0),
        (Unobserved(), AccuracyCount(5, 5), 0),
    ],
)
def test_e4_dependency(schema, e3, e4, bit):
    rec = AssessmentRecord("p", observations={"e3": e3, "e4": e4})
    assert binarize(schema["e4"], e4, rec, schema) == bit


def test_observation_validation():
    with pytest.raises(ObservationError):
        SampleCount(15, 14)
    with pytest.raises(ObservationError):
        AccuracyCount(-1, 3)
    with pytest.raises(ObservationError):
        observation_from_dict({"kind": "bool", "value": "yes"})
    with pytest.raises(ObservationError):
        observation_from_dict({"kind": "sample", "satisfied": 3})
    with pytest.raises(ObservationError):
        observation_from_dict({"kind": "colour"})


@pytest.mark.parametrize(
    "obs", [Boolean(False), SampleCount(3, 14), AccuracyCount(2, 4), Measured(1.5, "s"), Measured(70.0), Unobserved()]
)
def test_observation_round_trip(obs):
    assert observation_from_dict(observation_to_dict(obs)) == obs


def test_score_portal_all_pass_reaches_maximum(schema):
    obs = {}
    for spec in schema:
        kind = spec.criterion.kind
        obs[spec.id] = {
            "manual": Boolean(True),
            "sampled": SampleCount(14, 14),
            "dependent_accuracy": AccuracyCount(14, 14),
            "external_score": Measured(100),
            "timed_load": Measured(0.5, "s"),
        }[kind]
    sc = score_portal(schema, AssessmentRecord("max", observations=obs))
    assert sc.total == 180
    assert sc.dimension_scores == schema.dimension_maxima()
    assert not sc.flags


def test_score_portal_empty_record_flags_everything(schema):
    sc = score_portal(schema, AssessmentRecord("empty"))
    assert sc.total == 0
    assert len(sc.flags) == 72


def test_score_portal_rejects_unknown_ids(schema):
    with pytest.raises(AssessmentError, match="z9"):
        score_portal(schema, AssessmentRecord("p", observations={"z9": Boolean(True)}))


def test_scorecard_round_trip(schema):
    rec = random_record(random.Random(3), schema.ids)
    sc = score_portal(schema, rec)
    assert PortalScorecard.from_dict(sc.to_dict()) == sc


def test_total_matches_oracle_on_random_records(schema):
    weights = rubric_weights()
    rng = random.Random(11)
    for n in range(200):
        rec = random_record(rng, schema.ids, f"p{n}")
        assert score_portal(schema, rec).total == oracle_total(rec, weights)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_uniform_weight_scaling(schema, seed, factor):
    rec = random_record(random.Random(seed), schema.ids)
    base = score_portal(schema, rec)
    scaled = score_portal(schema.scaled(factor), rec)
    assert scaled.total == factor * base.total
    assert scaled.binary == base.binary


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 71))
def test_flipping_a_manual_bit_up_never_lowers_total(schema, seed, col):
    rec = random_record(random.Random(seed), schema.ids)
    sub = schema.ids[col]
    if schema[sub].criterion.kind != "manual":
        return
    lo = dict(rec.observations, **{sub: Boolean(False)})
    hi = dict(rec.observations, **{sub: Boolean(True)})
    t_lo = score_portal(schema, AssessmentRecord("p", observations=lo)).total
    t_hi = score_portal(schema, AssessmentRecord("p", observations=hi)).total
    assert t_hi - t_lo == schema.weight_of(sub)


def test_competition_ranking_with_country_tiebreak():
    cards = [card("p1", 90), card("p2", 120), card("p3", 90), card("p4", 80)]
    ranking = rank_portals(cards, {"p1": "Zambia", "p3": "Austria"})
    assert ranking == [(1, "p2", 120), (2, "p3", 90), (2, "p1", 90), (4, "p4", 80)]


def test_ranking_rejects_duplicates():
    with pytest.raises(AssessmentError, match="duplicate"):
        rank_portals([card("x", 1), card("x", 2)])


def test_regional_aggregates():
    cards = [card("a", 101), card("b", 100), card("c", 49), card("d", 50), card("e", 20)]
    profiles = [
        PortalProfile("a", "A", "EU", "https://a"),
        PortalProfile("b", "B", "EU", "https://b"),
        PortalProfile("c", "C", "GCC", "https://c"),
        PortalProfile("d", "D", "GCC", "https://d"),
        PortalProfile("e", "E", "Other", "https://e"),
    ]
    agg = regional_aggregates(cards, profiles)
    assert agg.overall_mean == 64.0
    assert agg.per_region_mean == {"EU": 100.5, "GCC": 49.5, "Other": 20.0}
    assert agg.per_region_count == {"EU": 2, "GCC": 2, "Other": 1}
    assert agg.counts_above == {100: 1}
    assert agg.counts_below == {50: 2}


def test_regional_aggregates_need_profiles():
    with pytest.raises(AssessmentError):
        regional_aggregates([card("a", 1)], [])


def test_profile_validation():
    with pytest.raises(AssessmentError):
        PortalProfile("x", "X", "Asia", "https://x")
    with pytest.raises(AssessmentError):
        PortalProfile("x", "X", "EU", "")


def test_merge_keeps_manual_entries():
    base = AssessmentRecord("p", observations={"c1": Boolean(True), "a1": Unobserved()}, provenance={"c1": "manual"})
    frag = AssessmentRecord("p", observations={"c1": Measured(9.0, "s"), "a1": Boolean(True)}, provenance={"c1": "probe", "a1": "probe"})
    merged = base.merged_with(frag)
    assert merged.observations["c1"] == Boolean(True)
    assert merged.provenance["c1"] == "manual"
    assert merged.observations["a1"] == Boolean(True)
    assert merged.provenance["a1"] == "probe"


def test_score_matrix_csv_round_trip(schema):
    rng = random.Random(5)
    cards = [score_portal(schema, random_record(rng, schema.ids, f"p{i}")) for i in range(4)]
    m = build_score_matrix(schema, cards)
    assert m.cells.shape == (4, 72)
    again = ScoreMatrix.from_csv(m.to_csv())
    assert again.portals == m.portals and again.columns == m.columns
    assert np.array_equal(again.cells, m.cells)


def test_score_matrix_rejects_foreign_schema(schema):
    sc = score_portal(schema.scaled(2), AssessmentRecord("p"))
    with pytest.raises(AssessmentError, match="different schema"):
        build_score_matrix(schema, [sc])


def test_rubric_scorer_outputs(schema):
    rng = np.random.default_rng(0)
    X = rng.integers(0, 2, size=(6, 72))
    w = np.array(schema.weights())
    assert np.allclose(RubricScorer(schema).fit_transform(X), X * w)
    totals = RubricScorer(schema, output="total").fit_transform(X)
    assert np.allclose(totals[:, 0], X @ w)
    dims = RubricScorer(schema, output="dimensions").fit_transform(X)
    assert dims.shape == (6, 9) and np.allclose(dims.sum(1), X @ w)
    assert RubricScorer(schema, output="total").get_params()["output"] == "total"


def test_rubric_scorer_in_pipeline(schema):
    from odum.cluster import KMeansClustering

    X = np.random.default_rng(1).integers(0, 2, size=(12, 72))
    pipe = make_pipeline(RubricScorer(schema), KMeansClustering(n_clusters=3, random_state=0))
    labels = pipe.fit_predict(X)
    assert len(labels) == 12 and set(labels) <= {0, 1, 2}


def test_rubric_scorer_rejects_bad_input(schema):
    with pytest.raises(ValueError):
        RubricScorer(schema).fit(np.zeros((2, 10)))
    with pytest.raises(ValueError):
        RubricScorer(schema).fit(np.full((2, 72), 2))
