"""Ward agglomerative clustering over per-child binned series.

The merge cost between clusters A and B is the within-variance increase

    cost(A, B) = n_A*n_B/(n_A+n_B) * ||mean_A - mean_B||^2

which for singletons is half the squared Euclidean distance. Merging is
greedy on that cost; repeated merges are updated in O(n) per step with the
Lance-Williams recurrence applied to 2*cost (the squared-distance scale).
Cluster count selection maximizes the Calinski-Harabasz ratio of between-
to within-cluster dispersion. The predictor/response split ranks children
by mean distance to all others and sends the most dissimilar fraction to
the response set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .accel import pairwise_sq_dist
from .data import BinnedSeries
from .errors import BadPermutation, LengthMismatch, TooFewSeries
from .svgplot import heatmap_svg


@dataclass(frozen=True)
class DistanceMatrix:
    ids: tuple[str, ...]
    d: np.ndarray  # symmetric, zero diagonal

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Dendrogram:
    """Full merge history: (cluster_a, cluster_b, cost, new_cluster_id) rows.

    Leaves are 0..n-1 in DistanceMatrix id order; merge m creates cluster
    n+m. leaf_order is the left-to-right traversal of the final tree."""

    ids: tuple[str, ...]
    merges: tuple[tuple[int, int, float, int], ...]
    leaf_order: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    labels: dict[str, int]
    ch_score: float
    degenerate: bool = False


def distance_matrix(series: list[BinnedSeries]) -> DistanceMatrix:
    """Euclidean distances between the count vectors of same-length,
    same-stratum series."""
    if len(series) < 2:
        raise TooFewSeries(f"need >= 2 series, got {len(series)}")
    lengths = {s.counts.shape[0] for s in series}
    if len(lengths) != 1:
        raise LengthMismatch(f"mixed series lengths {sorted(lengths)}")
    strata = {(s.age, s.category) for s in series}
    if len(strata) != 1:
        raise LengthMismatch(f"mixed strata {sorted(strata)}")
    data = np.stack([s.counts for s in series]).astype(np.float64)
    d = np.sqrt(pairwise_sq_dist(data))
    return DistanceMatrix(tuple(s.child_id for s in series), d)


def ward_agglomerate(dm: DistanceMatrix) -> Dendrogram:
    """Greedy minimum-cost merging until one cluster remains.

    Ties on cost go to the lexicographically smallest (min id, max id)
    cluster pair, making runs deterministic."""
    n = dm.n
    # D holds 2*cost on the squared-distance scale the recurrence preserves.
    D = {}
    for i in range(n):
        for j in range(i + 1, n):
            D[(i, j)] = dm.d[i, j] ** 2
    sizes = {i: 1 for i in range(n)}
    active = sorted(sizes)
    children: dict[int, tuple[int, int]] = {}
    merges = []
    next_id = n
    while len(active) > 1:
        best = None
        best_pair = None
        for ai in range(len(active)):
            for aj in range(ai + 1, len(active)):
                pair = (active[ai], active[aj])
                val = D[pair]
                if best is None or val < best:
                    best = val
                    best_pair = pair
        a, b = best_pair
        cost = best / 2.0
        na, nb = sizes[a], sizes[b]
        new = next_id
        next_id += 1
        for c in active:
            if c in (a, b):
                continue
            nc = sizes[c]
            dac = D[(min(a, c), max(a, c))]
            dbc = D[(min(b, c), max(b, c))]
            D[(c, new)] = (
                (na + nc) * dac + (nb + nc) * dbc - nc * best
            ) / (na + nb + nc)
        active = [c for c in active if c not in (a, b)] + [new]
        active.sort()
        sizes[new] = na + nb
        children[new] = (a, b)
        merges.append((a, b, cost, new))
    order: list[str] = []

    def walk(node: int) -> None:
        if node < n:
            order.append(dm.ids[node])
        else:
            a, b = children[node]
            walk(a)
            walk(b)

    if n == 1:
        order.append(dm.ids[0])
    else:
        walk(merges[-1][3])
    return Dendrogram(dm.ids, tuple(merges), tuple(order))


def cut_dendrogram(dg: Dendrogram, k: int) -> dict[str, int]:
    """Labels from applying the first n-k merges; cluster indices are
    numbered by first appearance in id order."""
    n = dg.n
    if not 1 <= k <= n:
        raise TooFewSeries(f"cannot cut {n} leaves into {k} clusters")
    parent = {}
    for a, b, _, new in dg.merges[: n - k]:
        parent[a] = new
        parent[b] = new

    def find(x: int) -> int:
        while x in parent:
            x = parent[x]
        return x

    roots: dict[int, int] = {}
    labels: dict[str, int] = {}
    for i, cid in enumerate(dg.ids):
        r = find(i)
        if r not in roots:
            roots[r] = len(roots)
        labels[cid] = roots[r]
    return labels


def calinski_harabasz(data: np.ndarray, labels: np.ndarray, k: int) -> float:
    """CH(K) = [B/(K-1)] / [W/(n-K)] on raw dispersion sums.

    Returns +inf when W is zero (all points inside each cluster identical)."""
    n = data.shape[0]
    grand = data.mean(axis=0)
    W = 0.0
    B = 0.0
    for c in range(k):
        pts = data[labels == c]
        m = pts.mean(axis=0)
        W += float(((pts - m) ** 2).sum())
        B += pts.shape[0] * float(((m - grand) ** 2).sum())
    if W <= 0.0:
        return math.inf
    return (B / (k - 1)) / (W / (n - k))


def select_k_ch(
    dg: Dendrogram, data: np.ndarray, k_range: tuple[int, int] | None = None
) -> ClusterAssignment:
    """Evaluate CH over k_range cuts and return the argmax (ties: smaller k).

    data rows align with dg.ids. All-identical data short-circuits to
    k_min with an infinite score and the degenerate flag set."""
    n = dg.n
    if k_range is None:
        k_range = (2, n - 1)
    k_min, k_max = k_range
    if not 2 <= k_min <= k_max <= n - 1:
        raise TooFewSeries(f"k_range {k_range} invalid for n={n}")
    data = np.asarray(data, dtype=np.float64)
    if bool((data == data[0]).all()):
        return ClusterAssignment(k_min, cut_dendrogram(dg, k_min), math.inf, degenerate=True)
    best_k = None
    best_score = -math.inf
    best_labels = None
    for k in range(k_min, k_max + 1):
        labels = cut_dendrogram(dg, k)
        arr = np.array([labels[cid] for cid in dg.ids])
        score = calinski_harabasz(data, arr, k)
        if score > best_score:
            best_k, best_score, best_labels = k, score, labels
    return ClusterAssignment(best_k, best_labels, best_score)


def split_predictor_response(dm: DistanceMatrix, q: float = 0.2) -> tuple[list[str], list[str]]:
    """Children ranked by mean distance to all others; the ceil(q*n) most
    dissimilar become the response set, the remainder predictors.

    Ranking sorts ascending by (mean distance, id) and takes the tail, so
    equal means resolve to the later ids. The response size is clamped to
    [1, n-1] so both sets stay non-empty."""
    n = dm.n
    if n < 3:
        raise TooFewSeries(f"need >= 3 series to split, got {n}")
    if not 0.0 < q < 1.0:
        raise TooFewSeries(f"response fraction {q} outside (0,1)")
    mean_dist = dm.d.sum(axis=1) / (n - 1)
    order = sorted(range(n), key=lambda i: (mean_dist[i], dm.ids[i]))
    n_resp = min(max(int(math.ceil(q * n)), 1), n - 1)
    predictor = sorted(dm.ids[i] for i in order[: n - n_resp])
    response = sorted(dm.ids[i] for i in order[n - n_resp :])
    return predictor, response


def similarity_matrix(dm: DistanceMatrix, order: tuple[str, ...]) -> np.ndarray:
    """Reordered s = 1 - d/max(d); all ones when every distance is zero."""
    if sorted(order) != sorted(dm.ids):
        raise BadPermutation(f"order is not a permutation of the matrix ids")
    idx = [dm.ids.index(cid) for cid in order]
    dmax = float(dm.d.max())
    if dmax == 0.0:
        s = np.ones_like(dm.d)
    else:
        s = 1.0 - dm.d / dmax
    return s[np.ix_(idx, idx)]


def similarity_heatmap(dm: DistanceMatrix, order, csv_path, svg_path) -> np.ndarray:
    """Write the reordered similarity matrix as CSV and SVG; returns it."""
    order = tuple(order)
    s = similarity_matrix(dm, order)
    lines = ["child_id," + ",".join(order)]
    for i, cid in enumerate(order):
        lines.append(cid + "," + ",".join(repr(float(v)) for v in s[i]))
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(heatmap_svg(s, order))
    return s
