"""Decision trees, bootstrap-aggregated random forests, and second-order
gradient-boosted trees, all operating in classification mode over integer
count classes (plus a squared-loss regression mode for boosting).

Both ensembles are bit-deterministic for a fixed seed regardless of worker
thread count: every tree draws from its own substream keyed by (seed, tree
index) and results are collected by index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .accel import best_split_gini, best_split_grad
from .errors import ConfigError, DegenerateHessian, DimensionMismatch, NonFiniteLoss


@dataclass
class TreeNode:
    """Split node (feature, threshold, children) or leaf (histogram for
    Gini trees, weight for boosted trees)."""

    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    histogram: Optional[np.ndarray] = None
    weight: float = 0.0
    gain: float = 0.0
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _route(node: TreeNode, x: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.threshold else node.right
    return node


def _midpoint_threshold(lo: float, hi: float) -> float:
    # Keep the training partition reproducible at predict time: the
    # threshold must satisfy lo < thr <= hi even when (lo+hi)/2 rounds to lo.
    mid = 0.5 * (lo + hi)
    return mid if mid > lo else hi


def tree_dump(node: TreeNode, indent: int = 0) -> str:
    pad = "  " * indent
    if node.is_leaf:
        if node.histogram is not None:
            return f"{pad}leaf n={node.n_samples} histogram={node.histogram.tolist()}\n"
        return f"{pad}leaf n={node.n_samples} weight={node.weight!r}\n"
    out = (
        f"{pad}split feature={node.feature} threshold={node.threshold!r} "
        f"gain={node.gain!r} n={node.n_samples}\n"
    )
    return out + tree_dump(node.left, indent + 1) + tree_dump(node.right, indent + 1)


# ---------------------------------------------------------------------------
# Gini trees and random forest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 200
    max_depth: int = 8
    min_samples_leaf: int = 2
    mtry: int | None = None  # None means ceil(sqrt(p))
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")


def _resolve_mtry(cfg: ForestConfig, p: int) -> int:
    mtry = cfg.mtry if cfg.mtry is not None else int(np.ceil(np.sqrt(p)))
    if not 1 <= mtry <= p:
        raise ConfigError(f"mtry {mtry} outside [1, {p}]")
    return mtry


def tree_fit(
    X: np.ndarray,
    y_idx: np.ndarray,
    cfg: ForestConfig,
    rng: np.random.Generator,
    n_classes: int,
) -> TreeNode:
    """Greedy Gini tree over class indices 0..n_classes-1.

    At each node, mtry features are sampled without replacement and
    scanned in ascending index order; the best valid boundary wins, first
    strict improvement on ties. A zero-improvement split is still taken
    while the node is impure, so consistent labelings are memorized when
    depth allows."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y_idx = np.ascontiguousarray(y_idx, dtype=np.int64)
    p = X.shape[1]
    mtry = _resolve_mtry(cfg, p)
    min_leaf = cfg.min_samples_leaf

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        hist = np.bincount(y_idx[rows], minlength=n_classes)
        node = TreeNode(histogram=hist, n_samples=rows.shape[0])
        if depth >= cfg.max_depth or hist.max() == rows.shape[0]:
            return node
        if rows.shape[0] < 2 * min_leaf:
            return node
        feats = np.sort(rng.choice(p, size=mtry, replace=False))
        best_score = np.inf
        best = None
        for f in feats:
            vals = X[rows, f]
            order = np.argsort(vals, kind="stable")
            b, score = best_split_gini(
                np.ascontiguousarray(vals[order]),
                np.ascontiguousarray(y_idx[rows][order]),
                n_classes,
                min_leaf,
            )
            if b >= 0 and score < best_score:
                best_score = score
                svals = vals[order]
                best = (int(f), rows[order], b, float(svals[b - 1]), float(svals[b]))
        if best is None:
            return node
        f, ordered_rows, b, lo, hi = best
        node.feature = f
        node.threshold = _midpoint_threshold(lo, hi)
        m = rows.shape[0]
        parent_gini = 1.0 - float(((hist.astype(np.float64) / m) ** 2).sum())
        node.gain = parent_gini - best_score
        node.left = grow(ordered_rows[:b], depth + 1)
        node.right = grow(ordered_rows[b:], depth + 1)
        return node

    return grow(np.arange(X.shape[0]), 0)


def tree_predict_idx(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Majority class index per row; argmax breaks ties toward smaller index."""
    X = np.asarray(X, dtype=np.float64)
    return np.array([int(np.argmax(_route(node, x).histogram)) for x in X], dtype=np.int64)


@dataclass
class Forest:
    classes: np.ndarray  # original integer labels, ascending
    trees: list[TreeNode]
    config: ForestConfig
    n_features: int

    def dump(self) -> str:
        parts = [f"forest trees={len(self.trees)} classes={self.classes.tolist()}\n"]
        for t, tree in enumerate(self.trees):
            parts.append(f"tree {t}\n" + tree_dump(tree, 1))
        return "".join(parts)


def rf_fit(X: np.ndarray, y_classes: np.ndarray, cfg: ForestConfig, n_jobs: int = 1) -> Forest:
    """n_trees Gini trees, each on a seeded bootstrap resample with
    per-split feature subsampling."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y_classes = np.asarray(y_classes)
    if X.shape[0] < 2:
        raise ConfigError(f"need at least 2 samples, got {X.shape[0]}")
    classes, y_idx = np.unique(y_classes, return_inverse=True)
    n = X.shape[0]

    def one_tree(t: int) -> TreeNode:
        rng = np.random.default_rng([cfg.seed, t])
        boot = rng.integers(0, n, size=n)
        return tree_fit(X[boot], y_idx[boot], cfg, rng, classes.shape[0])

    if n_jobs <= 1:
        trees = [one_tree(t) for t in range(cfg.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(one_tree, range(cfg.n_trees)))
    return Forest(classes, trees, cfg, X.shape[1])


def rf_vote_matrix(forest: Forest, X: np.ndarray) -> np.ndarray:
    """(n_samples, n_classes) vote tallies across trees."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DimensionMismatch(f"expected {forest.n_features} features, got {X.shape}")
    votes = np.zeros((X.shape[0], forest.classes.shape[0]), dtype=np.int64)
    for tree in forest.trees:
        idx = tree_predict_idx(tree, X)
        votes[np.arange(X.shape[0]), idx] += 1
    return votes


def rf_predict(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Majority vote across trees; ties resolve to the smaller class label."""
    votes = rf_vote_matrix(forest, X)
    return forest.classes[np.argmax(votes, axis=1)]


# ---------------------------------------------------------------------------
# Second-order gradient boosting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoostConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    gamma: float = 0.0
    lam: float = 1.0
    max_depth: int = 4
    loss: str = "softmax"  # or "squared"
    seed: int = 0
    subsample: float = 0.8
    base_score: float | None = None  # squared mode; None means mean(y)

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must be in (0,1]")
        if not 0.0 < self.subsample <= 1.0:
            raise ConfigError("subsample must be in (0,1]")
        if self.gamma < 0 or self.lam < 0:
            raise ConfigError("gamma and lam must be >= 0")
        if self.loss not in ("squared", "softmax"):
            raise ConfigError(f"unknown loss {self.loss!r}")


def leaf_weight(grad_sum: float, hess_sum: float, lam: float) -> float:
    """Optimal leaf score -G/(H + lam) of the second-order objective."""
    denom = hess_sum + lam
    if denom <= 0:
        raise DegenerateHessian(f"hessian sum {hess_sum} + lam {lam} not positive")
    return -grad_sum / denom


def split_gain(gl: float, hl: float, gr: float, hr: float, lam: float, gamma: float) -> float:
    """0.5*[GL^2/(HL+lam) + GR^2/(HR+lam) - (GL+GR)^2/(HL+HR+lam)] - gamma."""
    if hl + lam <= 0 or hr + lam <= 0 or hl + hr + lam <= 0:
        raise DegenerateHessian("hessian sums + lam must be positive")
    return 0.5 * (
        gl * gl / (hl + lam)
        + gr * gr / (hr + lam)
        - (gl + gr) ** 2 / (hl + hr + lam)
    ) - gamma


def grow_boost_tree(
    X: np.ndarray, g: np.ndarray, h: np.ndarray, rows: np.ndarray, cfg: BoostConfig
) -> TreeNode:
    """Greedy tree on split_gain; splits with gain <= 0 are rejected, so
    gamma prunes exactly as a per-leaf cost."""
    p = X.shape[1]

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        G = float(g[rows].sum())
        H = float(h[rows].sum())
        node = TreeNode(weight=leaf_weight(G, H, cfg.lam), n_samples=rows.shape[0])
        if depth >= cfg.max_depth or rows.shape[0] < 2:
            return node
        best_gain = 0.0
        best = None
        for f in range(p):
            vals = X[rows, f]
            order = np.argsort(vals, kind="stable")
            b, gain_core = best_split_grad(
                np.ascontiguousarray(vals[order]),
                np.ascontiguousarray(g[rows][order]),
                np.ascontiguousarray(h[rows][order]),
                cfg.lam,
                1,
            )
            if b < 0:
                continue
            gain = gain_core - cfg.gamma
            if gain > best_gain:
                best_gain = gain
                svals = vals[order]
                best = (f, rows[order], b, float(svals[b - 1]), float(svals[b]))
        if best is None:
            return node
        f, ordered_rows, b, lo, hi = best
        node.feature = f
        node.threshold = _midpoint_threshold(lo, hi)
        node.gain = best_gain
        node.left = grow(ordered_rows[:b], depth + 1)
        node.right = grow(ordered_rows[b:], depth + 1)
        return node

    return grow(rows, 0)


def tree_predict_weight(node: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([_route(node, x).weight for x in X])


def tree_leaves(node: TreeNode) -> list[TreeNode]:
    if node.is_leaf:
        return [node]
    return tree_leaves(node.left) + tree_leaves(node.right)


def tree_regularization(node: TreeNode, gamma: float, lam: float, scale: float = 1.0) -> float:
    """gamma * (leaf count) + 0.5 * lam * sum of (scale * leaf weight)^2."""
    leaves = tree_leaves(node)
    return gamma * len(leaves) + 0.5 * lam * sum((scale * lf.weight) ** 2 for lf in leaves)


@dataclass
class BoostModel:
    config: BoostConfig
    base_score: np.ndarray  # scalar array for squared, (K,) for softmax
    trees: list  # squared: [TreeNode per round]; softmax: [[TreeNode per class] per round]
    classes: np.ndarray | None
    n_features: int
    objective_path: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def dump(self) -> str:
        parts = [
            f"boost loss={self.config.loss} rounds={len(self.trees)} "
            f"base={np.asarray(self.base_score).tolist()}\n"
        ]
        for r, entry in enumerate(self.trees):
            group = entry if isinstance(entry, list) else [entry]
            for k, tree in enumerate(group):
                parts.append(f"round {r} tree {k}\n" + tree_dump(tree, 1))
        return "".join(parts)


def _softmax(F: np.ndarray) -> np.ndarray:
    Z = F - F.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _round_rows(rng: np.random.Generator, n: int, subsample: float) -> np.ndarray:
    if subsample >= 1.0:
        return np.arange(n)
    m = max(int(np.ceil(subsample * n)), 2)
    return np.sort(rng.choice(n, size=min(m, n), replace=False))


def xgb_fit(X: np.ndarray, y: np.ndarray, cfg: BoostConfig, n_jobs: int = 1) -> BoostModel:
    """Additive rounds of second-order trees.

    squared mode: l = 0.5*(y - F)^2, g = F - y, h = 1, base = mean(y).
    softmax mode: one tree per class per round on multi-class gradients
    g_k = p_k - 1[y = k], h_k = p_k (1 - p_k), zero base logits.

    The recorded objective is sum of losses plus, per tree, the leaf
    penalty evaluated on the shrinkage-scaled scores that actually enter
    the prediction."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ConfigError(f"need at least 2 samples, got {n}")
    eta = cfg.learning_rate
    if cfg.loss == "squared":
        yf = np.asarray(y, dtype=np.float64)
        base = float(yf.mean()) if cfg.base_score is None else float(cfg.base_score)
        F = np.full(n, base)
        trees: list = []
        reg_total = 0.0
        with np.errstate(over="ignore"):
            start = float(0.5 * ((yf - F) ** 2).sum())
        if not np.isfinite(start):
            raise NonFiniteLoss(f"initial loss {start}")
        obj = [start]
        for r in range(cfg.n_rounds):
            rng = np.random.default_rng([cfg.seed, r])
            rows = _round_rows(rng, n, cfg.subsample)
            g = F - yf
            h = np.ones(n)
            tree = grow_boost_tree(X, g, h, rows, cfg)
            F = F + eta * tree_predict_weight(tree, X)
            trees.append(tree)
            reg_total += tree_regularization(tree, cfg.gamma, cfg.lam, scale=eta)
            loss = float(0.5 * ((yf - F) ** 2).sum())
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"round {r}: loss {loss}")
            obj.append(loss + reg_total)
        return BoostModel(cfg, np.asarray(base), trees, None, X.shape[1], np.asarray(obj))

    classes, y_idx = np.unique(np.asarray(y), return_inverse=True)
    K = classes.shape[0]
    onehot = np.zeros((n, K))
    onehot[np.arange(n), y_idx] = 1.0
    F = np.zeros((n, K))
    trees = []
    reg_total = 0.0

    def nll(F):
        P = _softmax(F)
        return float(-np.log(np.clip(P[np.arange(n), y_idx], 1e-300, None)).sum())

    obj = [nll(F)]
    for r in range(cfg.n_rounds):
        rng = np.random.default_rng([cfg.seed, r])
        rows = _round_rows(rng, n, cfg.subsample)
        P = _softmax(F)
        G = P - onehot
        H = np.clip(P * (1.0 - P), 1e-16, None)

        def one_class(k: int) -> TreeNode:
            return grow_boost_tree(X, G[:, k], H[:, k], rows, cfg)

        if n_jobs <= 1 or K == 1:
            round_trees = [one_class(k) for k in range(K)]
        else:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                round_trees = list(pool.map(one_class, range(K)))
        for k, tree in enumerate(round_trees):
            F[:, k] += eta * tree_predict_weight(tree, X)
            reg_total += tree_regularization(tree, cfg.gamma, cfg.lam, scale=eta)
        trees.append(round_trees)
        loss = nll(F)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"round {r}: loss {loss}")
        obj.append(loss + reg_total)
    return BoostModel(cfg, np.zeros(K), trees, classes, X.shape[1], np.asarray(obj))


def xgb_raw_scores(model: BoostModel, X: np.ndarray) -> np.ndarray:
    """base + learning_rate * sum of tree outputs (per class for softmax)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X.shape}")
    eta = model.config.learning_rate
    if model.config.loss == "squared":
        F = np.full(X.shape[0], float(model.base_score))
        for tree in model.trees:
            F = F + eta * tree_predict_weight(tree, X)
        return F
    F = np.tile(model.base_score, (X.shape[0], 1))
    for round_trees in model.trees:
        for k, tree in enumerate(round_trees):
            F[:, k] += eta * tree_predict_weight(tree, X)
    return F


def xgb_predict(model: BoostModel, X: np.ndarray):
    """squared: predicted values. softmax: (argmax class labels, class
    probabilities summing to one)."""
    F = xgb_raw_scores(model, X)
    if model.config.loss == "squared":
        return F
    P = _softmax(F)
    return model.classes[np.argmax(P, axis=1)], P
