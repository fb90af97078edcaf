"""Independent reference implementations used by the test suite.

Nothing here imports the scoring or clustering code under test; weights are
read straight from the bundled rubric JSON and thresholds are written out.
"""

import itertools
import json
import math
import random
from importlib import resources

import numpy as np

from odum.scoring import AccuracyCount, AssessmentRecord, Boolean, Measured, SampleCount, Unobserved

TIER = {"low": 1, "medium": 2, "high": 3}
SAMPLED = {"d2", "d3", "d4", "d5", "d7", "d8", "d10", "d11", "e1", "e2", "e3", "e7", "f10", "f11"}


def rubric_weights() -> dict[str, int]:
    doc = json.loads(resources.files("odum.framework").joinpath("default.json").read_text())
    return {s["id"]: TIER[s["weight"]] for d in doc["dimensions"] for s in d["sub_dimensions"]}


def sampled_bit(obs) -> int:
    if obs.total == 0:
        return 0
    need = 10 if obs.total >= 14 else math.ceil(7 * obs.total / 10)
    return int(obs.satisfied >= need)


def oracle_bit(sub_id: str, obs, observations) -> int:
    if isinstance(obs, Unobserved):
        return 0
    if sub_id in SAMPLED:
        return sampled_bit(obs)
    if sub_id == "e4":
        parent = observations.get("e3", Unobserved())
        if isinstance(parent, Unobserved) or not sampled_bit(parent) or obs.frequency_specified == 0:
            return 0
        return int(10 * obs.accurate >= 7 * obs.frequency_specified)
    if sub_id == "c4":
        return int(obs.value >= 61)
    if sub_id == "c1":
        return int(obs.value < 4.0)
    return int(obs.value)


def oracle_total(record: AssessmentRecord, weights: dict[str, int]) -> int:
    return sum(oracle_bit(i, record.observations.get(i, Unobserved()), record.observations) * w for i, w in weights.items())


def random_record(rng: random.Random, ids, name="p") -> AssessmentRecord:
    obs = {}
    for sub_id in ids:
        if rng.random() < 0.05:
            obs[sub_id] = Unobserved()
            continue
        if sub_id in SAMPLED:
            total = rng.choice([14, 14, 14, rng.randint(1, 13), 0])
            obs[sub_id] = SampleCount(rng.randint(0, total), total)
        elif sub_id == "e4":
            spec = rng.randint(0, 14)
            obs[sub_id] = AccuracyCount(rng.randint(0, spec), spec)
        elif sub_id == "c4":
            obs[sub_id] = Measured(rng.choice([rng.uniform(0, 100), 60, 61, 60.99]), "score")
        elif sub_id == "c1":
            obs[sub_id] = Measured(rng.choice([rng.uniform(0, 8), 3.999, 4.0]), "s")
        else:
            obs[sub_id] = Boolean(rng.random() < 0.5)
    if "e4" in obs and "e3" not in obs:
        obs["e3"] = Unobserved()
    return AssessmentRecord(name, None, obs)


# --- clustering --------------------------------------------------------------


def brute_force_ward(X: np.ndarray) -> list[tuple[frozenset, frozenset, float]]:
    """Naive agglomeration recomputing every SSE increase from the raw points.

    Returns (cluster_a, cluster_b, height) per merge, with height the increase
    in total within-cluster sum of squares.
    """

    def sse(members):
        pts = X[sorted(members)]
        return float(((pts - pts.mean(axis=0)) ** 2).sum())

    clusters = [frozenset([i]) for i in range(len(X))]
    steps = []
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            delta = sse(clusters[a] | clusters[b]) - sse(clusters[a]) - sse(clusters[b])
            if best is None or delta < best[0] - 1e-12:
                best = (delta, a, b)
        delta, a, b = best
        steps.append((clusters[a], clusters[b], delta))
        merged = clusters[a] | clusters[b]
        clusters = [c for k, c in enumerate(clusters) if k not in (a, b)] + [merged]
    return steps


def best_bijection(km_sets, hi_sets) -> list[tuple[int, int]]:
    """All k! pairings; the one with the largest total overlap (first found on ties)."""
    k = len(hi_sets)
    best, best_perm = -1, None
    for perm in itertools.permutations(range(k)):
        score = sum(len(hi_sets[i] & km_sets[perm[i]]) for i in range(k))
        if score > best:
            best, best_perm = score, perm
    return [(i, best_perm[i]) for i in range(k)], best


def overlap_is_unique(km_sets, hi_sets) -> bool:
    k = len(hi_sets)
    scores = sorted(
        (sum(len(hi_sets[i] & km_sets[p[i]]) for i in range(k)) for p in itertools.permutations(range(k))),
        reverse=True,
    )
    return len(scores) < 2 or scores[0] > scores[1]


# --- mock portal -------------------------------------------------------------
# Rules restated from the mock portal's documentation; no import of its code.

MOCK_TODAY_ORDINAL_DAYS = {"monthly": 50, "weekly": 14, "daily": 2}  # 2024-02-20: Jan 1 is 50 days back


def mock_days_ago(i):
    return (37 * i + 50) % 100


def mock_ckan_sample_ids():
    by_relevance = list(range(100))
    by_date = sorted(range(100), key=mock_days_ago)
    picked = []
    for order in (by_relevance, by_date):
        for pos in [0, 1, 2, 3, 97, 98, 99]:
            if order[pos] not in picked:
                picked.append(order[pos])
    return picked


def mock_hand_tally(ids):
    freq = ["monthly", "weekly", "annually", "irregular", None, "monthly", "daily"]
    e1 = sum(i % 4 != 2 for i in ids)
    e2 = sum(i % 11 != 4 and i % 5 != 3 for i in ids)
    e3 = sum(freq[i % 7] is not None for i in ids)
    specified = accurate = 0
    for i in ids:
        f = freq[i % 7]
        if f is None:
            continue
        specified += 1
        if f == "annually":
            accurate += 1  # anything within 100 days of 2024-02-20 is this or last year
        elif f in MOCK_TODAY_ORDINAL_DAYS:
            accurate += mock_days_ago(i) <= MOCK_TODAY_ORDINAL_DAYS[f]
    f10 = sum(i % 6 != 5 for i in ids)
    f11 = sum(i % 9 != 8 and i % 13 != 12 for i in ids)
    n = len(ids)
    return {
        "e1": SampleCount(e1, n),
        "e2": SampleCount(e2, n),
        "e3": SampleCount(e3, n),
        "e4": AccuracyCount(accurate, specified),
        "f10": SampleCount(f10, n),
        "f11": SampleCount(f11, n),
    }
