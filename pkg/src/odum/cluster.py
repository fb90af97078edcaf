"""K-means with elbow selection, Ward agglomeration, and cross-method merging.

Everything here is a pure function of its inputs and an integer seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .schema import FrameworkSchema, load_schema
from .scoring import PortalScorecard, ScoreMatrix

MAX_ITER = 300
RESTARTS = 10
# best to worst; the last entry always goes to the worst cluster
PALETTE = ("green", "blue", "yellow", "orange", "purple", "cyan", "magenta", "brown", "grey", "pink")
WORST_COLOR = "red"


class ClusteringError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    rows: list[str]
    columns: list[str]
    cells: np.ndarray
    mode: str = "binary"

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.ndim != 2 or self.cells.shape != (len(self.rows), len(self.columns)):
            raise ClusteringError("feature matrix is not rectangular")

    @classmethod
    def from_score_matrix(
        cls, matrix: ScoreMatrix, schema: FrameworkSchema | None = None, mode: str = "binary"
    ) -> "FeatureMatrix":
        cells = matrix.cells.astype(float)
        if mode == "weighted":
            schema = schema or load_schema()
            weights = np.array([schema.weight_of(c) for c in matrix.columns], dtype=float)
            cells = cells * weights
        elif mode != "binary":
            raise ClusteringError(f"unknown feature mode {mode!r}")
        return cls(list(matrix.portals), list(matrix.columns), cells, mode)


def _as_array(matrix) -> tuple[np.ndarray, list[str]]:
    if isinstance(matrix, FeatureMatrix):
        return matrix.cells, list(matrix.rows)
    if isinstance(matrix, ScoreMatrix):
        return matrix.cells.astype(float), list(matrix.portals)
    X = check_array(matrix, dtype=float)
    return X, [str(i) for i in range(X.shape[0])]


@dataclass
class Partition:
    method: str
    assignment: dict[str, int]
    k: int

    def __post_init__(self):
        used = set(self.assignment.values())
        if used != set(range(self.k)):
            raise ClusteringError(f"{self.method} partition must use every cluster index in [0, {self.k})")

    def members(self, cluster: int) -> list[str]:
        return [p for p, c in self.assignment.items() if c == cluster]

    def labels(self, order: Sequence[str]) -> np.ndarray:
        return np.array([self.assignment[p] for p in order])


def _canonical(labels: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Renumber clusters by first appearance; returns new labels and old ids in new order."""
    order: list[int] = []
    for lab in labels:
        if lab not in order:
            order.append(int(lab))
    remap = {old: new for new, old in enumerate(order)}
    return np.array([remap[int(x)] for x in labels]), order


# --- k-means -----------------------------------------------------------------


@dataclass
class KMeansResult:
    partition: Partition
    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    n_iter: int
    history: list[float] = field(default_factory=list)
    run_wcss: list[float] = field(default_factory=list)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            remaining = [i for i in range(n) if i not in chosen]
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(1))
    return X[chosen].copy()


def _assign(D: np.ndarray, previous: np.ndarray | None) -> np.ndarray:
    labels = D.argmin(1)
    if previous is not None:
        # keep the current cluster on exact ties so assignments can settle
        rows = np.arange(D.shape[0])
        keep = D[rows, previous] <= D[rows, labels]
        labels = np.where(keep, previous, labels)
    return labels


def _repair_empty(X: np.ndarray, labels: np.ndarray, C: np.ndarray, k: int) -> np.ndarray:
    labels = labels.copy()
    for j in range(k):
        if np.any(labels == j):
            continue
        sizes = np.bincount(labels, minlength=k)
        own = ((X - C[labels]) ** 2).sum(1)
        own[sizes[labels] <= 1] = -1.0
        donor = int(np.argmax(own))
        labels[donor] = j
    return labels


def _means(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    C = np.zeros((k, X.shape[1]))
    for j in range(k):
        C[j] = X[labels == j].mean(0)
    return C


def _wcss(X: np.ndarray, labels: np.ndarray, C: np.ndarray) -> float:
    return float(((X - C[labels]) ** 2).sum())


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int) -> tuple[np.ndarray, np.ndarray, int, list[float]]:
    k = C.shape[0]
    labels = _assign(_sq_dists(X, C), None)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels = _repair_empty(X, labels, C, k)
        C = _means(X, labels, k)
        history.append(_wcss(X, labels, C))
        new = _assign(_sq_dists(X, C), labels)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, C, n_iter, history


def kmeans(
    matrix,
    k: int,
    seed: int = 0,
    restarts: int = RESTARTS,
    max_iter: int = MAX_ITER,
    init: np.ndarray | None = None,
) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` by WCSS.

    ``init`` adds one extra run started from the given centroids; the elbow
    curve uses it to warm-start k from the k-1 solution.
    """
    X, rows = _as_array(matrix)
    n = X.shape[0]
    if k < 1:
        raise ClusteringError("k must be at least 1")
    if k > n:
        raise ClusteringError(f"k={k} exceeds the {n} rows")
    if restarts < 1:
        raise ClusteringError("restarts must be at least 1")

    starts = [_plus_plus(X, k, np.random.default_rng([seed, k, r])) for r in range(restarts)]
    if init is not None:
        starts.append(np.asarray(init, dtype=float))
    best = None
    run_wcss = []
    for idx, C0 in enumerate(starts):
        labels, C, n_iter, history = _lloyd(X, C0, max_iter)
        w = _wcss(X, labels, C)
        run_wcss.append(w)
        if best is None or (w, idx) < (best[0], best[1]):
            best = (w, idx, labels, C, n_iter, history)
    w, _, labels, C, n_iter, history = best
    labels, order = _canonical(labels)
    C = C[order]
    partition = Partition("kmeans", {p: int(c) for p, c in zip(rows, labels)}, k)
    return KMeansResult(partition, labels, C, w, n_iter, history, run_wcss)


@dataclass
class ElbowCurve:
    ks: list[int]
    wcss: list[float]
    second_differences: dict[int, float]
    suggested_k: int
    degenerate: bool = False


def elbow_curve(matrix, k_max: int, seed: int = 0, restarts: int = RESTARTS) -> ElbowCurve:
    """WCSS for k = 1..k_max and the k with the sharpest bend.

    The bend is the largest discrete second difference over interior k. A
    flat zero curve (all rows identical) suggests 1 and is marked degenerate.
    """
    X, _ = _as_array(matrix)
    if k_max < 3:
        raise ClusteringError("k_max must be at least 3 to have an interior point")
    if k_max > X.shape[0]:
        raise ClusteringError(f"k_max={k_max} exceeds the {X.shape[0]} rows")
    wcss = []
    previous = None
    for k in range(1, k_max + 1):
        init = None
        if previous is not None:
            own = ((X - previous.centroids[previous.labels]) ** 2).sum(1)
            init = np.vstack([previous.centroids, X[int(np.argmax(own))]])
        res = kmeans(X, k, seed=seed, restarts=restarts, init=init)
        wcss.append(res.wcss)
        previous = res
    second = {k: wcss[k - 2] - 2 * wcss[k - 1] + wcss[k] for k in range(2, k_max)}
    if max(wcss) <= 0.0:
        return ElbowCurve(list(range(1, k_max + 1)), wcss, second, 1, degenerate=True)
    suggested = max(second, key=lambda k: (second[k], -k))
    return ElbowCurve(list(range(1, k_max + 1)), wcss, second, suggested)


# --- Ward linkage ------------------------------------------------------------


@dataclass
class LinkageMatrix:
    """Merge history; node ids below ``n_leaves`` are rows, merge i creates node n_leaves + i."""

    merges: list[tuple[int, int, float, int]]
    labels: list[str]

    @property
    def n_leaves(self) -> int:
        return len(self.labels)

    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def to_csv(self) -> str:
        lines = ["left,right,height,size"]
        lines += [f"{a},{b},{h:.10g},{s}" for a, b, h, s in self.merges]
        return "\n".join(lines) + "\n"

    def to_tree(self) -> dict:
        nodes: dict[int, dict] = {i: {"leaf": label} for i, label in enumerate(self.labels)}
        for step, (a, b, h, s) in enumerate(self.merges):
            nodes[self.n_leaves + step] = {
                "left": nodes.pop(a),
                "right": nodes.pop(b),
                "height": round(h, 10),
                "size": s,
            }
        (root,) = nodes.values()
        return root


def ward_linkage(matrix) -> LinkageMatrix:
    """Agglomerate by smallest increase in within-cluster sum of squares.

    Costs are updated with the Lance-Williams recurrence; the reported merge
    height is the SSE increase itself. Exact ties go to the pair with the
    smallest node ids.
    """
    X, rows = _as_array(matrix)
    n = X.shape[0]
    if n < 2:
        raise ClusteringError("Ward linkage needs at least 2 rows")
    # exact pairwise differences keep D symmetric to the last bit
    D = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1) / 2.0
    np.fill_diagonal(D, np.inf)
    node = list(range(n))
    size = [1] * n
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        masked = np.where(np.triu(active[:, None] & active[None, :], 1), D, np.inf)
        best = masked.min()
        ii, jj = np.nonzero(masked == best)
        pairs = sorted((min(node[i], node[j]), max(node[i], node[j]), i, j) for i, j in zip(ii, jj))
        left, right, i, j = pairs[0]
        ni, nj = size[i], size[j]
        for m in np.nonzero(active)[0]:
            if m in (i, j):
                continue
            nm = size[m]
            updated = ((ni + nm) * D[m, i] + (nj + nm) * D[m, j] - nm * D[i, j]) / (ni + nj + nm)
            D[m, i] = D[i, m] = updated
        merges.append((left, right, float(best), ni + nj))
        keep, drop = min(i, j), max(i, j)
        if keep != i:
            D[keep, :] = D[i, :]
            D[:, keep] = D[:, i]
            D[keep, keep] = np.inf
        active[drop] = False
        node[keep] = n + step
        size[keep] = ni + nj
    return LinkageMatrix(merges, rows)


def _components(linkage: LinkageMatrix, n_merges: int) -> np.ndarray:
    n = linkage.n_leaves
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, (a, b, _, _) in enumerate(linkage.merges[:n_merges]):
        new = n + step
        parent[find(a)] = new
        parent[find(b)] = new
    roots = np.array([find(i) for i in range(n)])
    labels, _ = _canonical(roots)
    return labels


def height_band(linkage: LinkageMatrix, k: int) -> tuple[float, float]:
    """Open interval of cut heights that leave exactly ``k`` clusters."""
    n = linkage.n_leaves
    if not 1 <= k <= n:
        raise ClusteringError(f"k must lie in [1, {n}]")
    h = linkage.heights()
    lo = h[n - k - 1] if n - k >= 1 else -math.inf
    hi = h[n - k] if n - k < len(h) else math.inf
    return float(lo), float(hi)


def cut_dendrogram(linkage: LinkageMatrix, k: int | None = None, height: float | None = None) -> Partition:
    """Flat clusters from a merge history, by cluster count or by cut height.

    A height keeps every merge at or below it.
    """
    n = linkage.n_leaves
    if (k is None) == (height is None):
        raise ClusteringError("give exactly one of k or height")
    if k is not None:
        if k < 1:
            raise ClusteringError("k must be at least 1")
        if k > n:
            raise ClusteringError(f"k={k} exceeds the {n} rows")
        n_merges = n - k
    else:
        if height < 0:
            raise ClusteringError("cut height must be non-negative")
        n_merges = int(np.sum(linkage.heights() <= height))
        if n_merges and not np.all(linkage.heights()[:n_merges] <= height):
            raise ClusteringError("cut height does not split the merge order cleanly")
    labels = _components(linkage, n_merges)
    return Partition("hierarchical", {p: int(c) for p, c in zip(linkage.labels, labels)}, n - n_merges)


# --- merging across methods --------------------------------------------------


@dataclass
class MergedCluster:
    label: str
    kmeans_cluster: int
    hier_cluster: int
    core: list[str]
    kmeans_only: list[str]
    hier_only: list[str]

    @property
    def members(self) -> list[str]:
        return sorted(set(self.core) | set(self.kmeans_only) | set(self.hier_only))


@dataclass
class MergedClusters:
    clusters: list[MergedCluster]

    def by_label(self, label: str) -> MergedCluster:
        return next(c for c in self.clusters if c.label == label)


def match_clusters(kmeans_p: Partition, hier_p: Partition) -> list[tuple[int, int]]:
    """One-to-one (hier, kmeans) pairs, greedily by descending shared portals.

    Ties prefer the larger k-means cluster, then the lower hierarchical and
    k-means indices.
    """
    k = hier_p.k
    km_sets = [set(kmeans_p.members(j)) for j in range(k)]
    hi_sets = [set(hier_p.members(i)) for i in range(k)]
    candidates = sorted(
        ((-len(hi_sets[i] & km_sets[j]), -len(km_sets[j]), i, j) for i in range(k) for j in range(k))
    )
    pairs, used_h, used_k = [], set(), set()
    for _, _, i, j in candidates:
        if i in used_h or j in used_k:
            continue
        pairs.append((i, j))
        used_h.add(i)
        used_k.add(j)
    return sorted(pairs)


def merge_partitions(
    kmeans_p: Partition,
    hier_p: Partition,
    totals: Mapping[str, float] | None = None,
) -> MergedClusters:
    """Pair each hierarchical cluster with the k-means cluster it shares most portals with.

    Colors go by descending mean total when ``totals`` is given (green best,
    red worst); otherwise by hierarchical cluster index.
    """
    if set(kmeans_p.assignment) != set(hier_p.assignment):
        raise ClusteringError("partitions cover different portals")
    if kmeans_p.k != hier_p.k:
        raise ClusteringError(f"partitions differ in k ({kmeans_p.k} vs {hier_p.k})")
    clusters = []
    for i, j in match_clusters(kmeans_p, hier_p):
        km, hi = set(kmeans_p.members(j)), set(hier_p.members(i))
        clusters.append(MergedCluster("", j, i, sorted(km & hi), sorted(km - hi), sorted(hi - km)))

    if totals is not None:
        def strength(c: MergedCluster):
            return -float(np.mean([totals[p] for p in c.members])), c.hier_cluster

        clusters.sort(key=strength)
    else:
        clusters.sort(key=lambda c: c.hier_cluster)
    names = color_names(len(clusters))
    for c, name in zip(clusters, names):
        c.label = name
    return MergedClusters(clusters)


def color_names(k: int) -> list[str]:
    if k == 1:
        return [PALETTE[0]]
    if k - 1 <= len(PALETTE):
        return list(PALETTE[: k - 1]) + [WORST_COLOR]
    return list(PALETTE) + [f"cluster-{i}" for i in range(len(PALETTE), k - 1)] + [WORST_COLOR]


def cluster_dimension_profile(
    merged: MergedClusters, scorecards: Sequence[PortalScorecard]
) -> dict[str, dict[str, float]]:
    """Mean dimension score of each merged cluster's full membership, to 2 decimals."""
    cards = {c.portal: c for c in scorecards}
    out = {}
    for cluster in merged.clusters:
        members = cluster.members
        missing = [p for p in members if p not in cards]
        if missing:
            raise ClusteringError(f"no scorecard for {', '.join(missing)}")
        letters = list(cards[members[0]].dimension_scores)
        out[cluster.label] = {
            letter: round(float(np.mean([cards[p].dimension_scores[letter] for p in members])), 2)
            for letter in letters
        }
    return out


# --- estimator wrappers ------------------------------------------------------


class KMeansClustering(ClusterMixin, BaseEstimator):
    """K-means estimator; ``n_clusters="auto"`` picks k from the elbow curve.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    cluster_centers_ : ndarray of shape (n_clusters_, n_features)
    inertia_ : float
        Within-cluster sum of squares of the kept run.
    elbow_ : ElbowCurve or None
        Set when k was chosen automatically.
    """

    def __init__(self, n_clusters=4, k_max=10, n_init=RESTARTS, max_iter=MAX_ITER, random_state=0):
        self.n_clusters = n_clusters
        self.k_max = k_max
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.elbow_ = None
        k = self.n_clusters
        if k == "auto":
            self.elbow_ = elbow_curve(X, min(self.k_max, X.shape[0]), self.random_state, self.n_init)
            k = self.elbow_.suggested_k
        res = kmeans(X, int(k), seed=self.random_state, restarts=self.n_init, max_iter=self.max_iter)
        self.n_clusters_ = int(k)
        self.labels_ = res.labels
        self.cluster_centers_ = res.centroids
        self.inertia_ = res.wcss
        self.n_iter_ = res.n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=float)
        return _sq_dists(X, self.cluster_centers_).argmin(1)


class WardClustering(ClusterMixin, BaseEstimator):
    """Ward agglomerative clustering cut at ``n_clusters`` or ``distance_threshold``."""

    def __init__(self, n_clusters=4, distance_threshold=None):
        self.n_clusters = n_clusters
        self.distance_threshold = distance_threshold

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        self.linkage_ = ward_linkage(X)
        if self.distance_threshold is not None:
            part = cut_dendrogram(self.linkage_, height=self.distance_threshold)
        else:
            part = cut_dendrogram(self.linkage_, k=self.n_clusters)
        self.labels_ = part.labels(self.linkage_.labels)
        self.n_clusters_ = part.k
        self.n_features_in_ = X.shape[1]
        return self


def make_planted_scores(
    n_rows: int = 33,
    n_cols: int = 72,
    k: int = 4,
    flip: float = 0.05,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Binary matrix with ``k`` planted groups and i.i.d. bit-flip noise.

    Returns ``(X, labels)``; group sizes differ by at most one.
    """
    rng = np.random.default_rng(seed)
    centers = rng.integers(0, 2, size=(k, n_cols))
    labels = np.arange(n_rows) % k
    rng.shuffle(labels)
    X = centers[labels]
    noise = rng.random(X.shape) < flip
    return np.where(noise, 1 - X, X).astype(np.int8), labels
