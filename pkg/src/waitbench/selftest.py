"""Self-contained verification suite runnable from the CLI.

Each criterion checks the implementation against an independent oracle
(exhaustive recomputation, closed forms, finite differences, Monte-Carlo
margins) and reports one pass/fail line. The pytest acceptance module
drives the same functions.
"""

from __future__ import annotations

import dataclasses
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cluster as cl
from .linear import EnetConfig, enet_fit, soft_threshold
from .lstm import (
    LayerParams,
    LstmConfig,
    gradient_check,
    init_params,
    lstm_cell_forward,
    lstm_train,
    make_windows,
)
from .metrics import mae, mbe, rmse
from .pipeline import RunConfig, run_pipeline
from .synth import BurstProfile, child_rng, generate_child
from .trees import (
    BoostConfig,
    ForestConfig,
    leaf_weight,
    rf_fit,
    rf_predict,
    split_gain,
    xgb_fit,
    xgb_predict,
)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.detail}; {self.seconds:.1f}s)"


def _timed(number: int, name: str, fn) -> CriterionResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(number, name, passed, detail, time.perf_counter() - t0)


# -- criterion 1: Ward vs exhaustive centroid recomputation -----------------


def ward_cost_two_forms(a_pts: np.ndarray, b_pts: np.ndarray) -> tuple[float, float]:
    """Three-sum form and product form of the merge cost of two clusters."""
    union = np.vstack([a_pts, b_pts])
    mu_u, mu_a, mu_b = union.mean(0), a_pts.mean(0), b_pts.mean(0)
    three = (
        float(((union - mu_u) ** 2).sum())
        - float(((a_pts - mu_a) ** 2).sum())
        - float(((b_pts - mu_b) ** 2).sum())
    )
    na, nb = len(a_pts), len(b_pts)
    product = na * nb / (na + nb) * float(((mu_a - mu_b) ** 2).sum())
    return three, product


def exhaustive_ward(data: np.ndarray):
    """Reference agglomeration recomputing every pair cost from raw points
    each step; same lexicographic tie rule as the implementation."""
    n = data.shape[0]
    members = {i: [i] for i in range(n)}
    merges = []
    next_id = n
    while len(members) > 1:
        best = None
        best_pair = None
        for a in sorted(members):
            for b in sorted(members):
                if b <= a:
                    continue
                pa, pb = data[members[a]], data[members[b]]
                na, nb = len(pa), len(pb)
                cost = na * nb / (na + nb) * float(((pa.mean(0) - pb.mean(0)) ** 2).sum())
                if best is None or cost < best:
                    best, best_pair = cost, (a, b)
        a, b = best_pair
        merges.append((a, b, best, next_id))
        members[next_id] = members.pop(a) + members.pop(b)
        next_id += 1
    return merges


def _dm_from_points(data: np.ndarray) -> cl.DistanceMatrix:
    ids = tuple(f"p{i:02d}" for i in range(data.shape[0]))
    from .accel import pairwise_sq_dist

    return cl.DistanceMatrix(ids, np.sqrt(pairwise_sq_dist(np.ascontiguousarray(data))))


def criterion_1() -> CriterionResult:
    def body():
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(3, 9))
            d = int(rng.integers(1, 5))
            data = rng.normal(size=(n, d))
            dm = _dm_from_points(data)
            got = cl.ward_agglomerate(dm).merges
            want = exhaustive_ward(data)
            if [(a, b, new) for a, b, _, new in got] != [
                (a, b, new) for a, b, _, new in want
            ]:
                return False, "merge sequence mismatch"
            worst = max(
                worst,
                max(abs(g[2] - w[2]) for g, w in zip(got, want)),
            )
        for _ in range(50):
            a_pts = rng.normal(size=(int(rng.integers(1, 6)), 3))
            b_pts = rng.normal(size=(int(rng.integers(1, 6)), 3))
            three, product = ward_cost_two_forms(a_pts, b_pts)
            worst = max(worst, abs(three - product))
        return worst < 1e-9, f"max deviation {worst:.2e}"

    return _timed(1, "ward merge sequence and costs match exhaustive oracle", body)


# -- criterion 2: CH index picks three blobs --------------------------------


def criterion_2() -> CriterionResult:
    def body():
        # Blobs are series-shaped (4-dim) points around constant centers,
        # matching how the index is applied to binned count vectors; the
        # scan runs over k = 2..8.
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            pts = np.vstack(
                [rng.normal(np.full(4, c), 0.1, size=(10, 4)) for c in (0.0, 10.0, 20.0)]
            )
            dm = _dm_from_points(pts)
            dg = cl.ward_agglomerate(dm)
            assign = cl.select_k_ch(dg, pts, (2, 8))
            hits += assign.k == 3
        return hits >= 99, f"k=3 in {hits}/100 seeds"

    return _timed(2, "CH selection finds three well-separated blobs", body)


# -- criterion 3: elastic net closed forms -----------------------------------


def criterion_3() -> CriterionResult:
    def body():
        rng = np.random.default_rng(3)
        worst = 0.0
        # lam = 0 reduces to least squares.
        for _ in range(5):
            X = rng.normal(size=(40, 5))
            y = rng.normal(size=40)
            m = enet_fit(X, y, EnetConfig(alpha=0.5, lam=0.0, max_iter=5000, tol=1e-12))
            Z = np.column_stack([np.ones(40), X])
            ref, *_ = np.linalg.lstsq(Z, y, rcond=None)
            worst = max(worst, float(np.max(np.abs(m.coef - ref[1:]))),
                        abs(m.intercept - ref[0]))
        # alpha = 0 matches the ridge normal equations (X'X + 2*lam2*I).
        for _ in range(5):
            X = rng.normal(size=(30, 4))
            y = rng.normal(size=30)
            cfg = EnetConfig(alpha=0.0, lam=0.7, max_iter=20000, tol=1e-13,
                             standardize=False, fit_intercept=False)
            m = enet_fit(X, y, cfg)
            ref = np.linalg.solve(X.T @ X + 2 * cfg.lam2 * np.eye(4), X.T @ y)
            worst = max(worst, float(np.max(np.abs(m.coef - ref))))
        # Identity design hand case: alpha 0, lam 1 gives lam2 = 0.5, so
        # the solution is y / (1 + 2*lam2) = (1, 2) for y = (2, 4).
        cfg = EnetConfig(alpha=0.0, lam=1.0, max_iter=1000, tol=1e-13,
                         standardize=False, fit_intercept=False)
        m = enet_fit(np.eye(2), np.array([2.0, 4.0]), cfg)
        worst = max(worst, float(np.max(np.abs(m.coef - np.array([1.0, 2.0])))))
        # alpha = 1 on an orthonormal design soft-thresholds least squares.
        for _ in range(5):
            Q, _ = np.linalg.qr(rng.normal(size=(20, 6)))
            y = rng.normal(size=20) * 3
            lam = 0.5
            cfg = EnetConfig(alpha=1.0, lam=lam, max_iter=5000, tol=1e-13,
                             standardize=False, fit_intercept=False)
            m = enet_fit(Q, y, cfg)
            ref = np.array([soft_threshold(v, lam) for v in Q.T @ y])
            worst = max(worst, float(np.max(np.abs(m.coef - ref))))
        if worst >= 1e-6:
            return False, f"closed-form deviation {worst:.2e}"
        # Objective path non-increasing on 20 random problems.
        for k in range(20):
            X = rng.normal(size=(25, 6))
            y = rng.normal(size=25)
            m = enet_fit(X, y, EnetConfig(alpha=0.4, lam=0.3, max_iter=300, tol=1e-12))
            diffs = np.diff(m.objective_path)
            if diffs.size and float(diffs.max()) > 1e-10:
                return False, f"objective rose by {float(diffs.max()):.2e} (problem {k})"
        return True, f"closed forms within {worst:.2e}; objective monotone"

    return _timed(3, "elastic net closed forms and sweep monotonicity", body)


# -- criterion 4: boosting hand cases and objective --------------------------


def criterion_4() -> CriterionResult:
    def body():
        if abs(leaf_weight(-6.0, 2.0, 1.0) - 2.0) > 1e-12:
            return False, "leaf weight hand case"
        if abs(split_gain(-6.0, 2.0, 6.0, 2.0, 1.0, 0.0) - 12.0) > 1e-12:
            return False, "split gain hand case"
        cfg = BoostConfig(n_rounds=1, learning_rate=1.0, lam=0.0, max_depth=0,
                          loss="squared", subsample=1.0, base_score=0.0)
        model = xgb_fit(np.array([[0.0], [1.0]]), np.array([2.0, 4.0]), cfg)
        pred = xgb_predict(model, np.array([[0.5]]))
        if abs(float(pred[0]) - 3.0) > 1e-9:
            return False, f"depth-0 round predicts {float(pred[0])}, want 3"
        rng = np.random.default_rng(4)
        for k in range(10):
            X = rng.normal(size=(40, 3))
            y = rng.normal(size=40)
            cfg = BoostConfig(n_rounds=100, learning_rate=0.1, gamma=0.0, lam=1.0,
                              max_depth=3, loss="squared", subsample=1.0, seed=k)
            model = xgb_fit(X, y, cfg)
            diffs = np.diff(model.objective_path)
            if float(diffs.max()) > 1e-10:
                return False, f"objective rose by {float(diffs.max()):.2e} (dataset {k})"
        return True, "hand cases exact; objective monotone over 100 rounds x 10 sets"

    return _timed(4, "boosting leaf/gain hand cases and objective descent", body)


# -- criterion 5: random forest benchmark and determinism --------------------


def xor_data(rng: np.random.Generator, per_cluster: int, sigma: float = 0.2):
    centers = [((0, 0), 0), ((1, 1), 0), ((0, 1), 1), ((1, 0), 1)]
    X, y = [], []
    for (cx, cy), label in centers:
        pts = rng.normal((cx, cy), sigma, size=(per_cluster, 2))
        X.append(pts)
        y.extend([label] * per_cluster)
    return np.vstack(X), np.array(y)


def criterion_5() -> CriterionResult:
    def body():
        rng = np.random.default_rng(55)
        Xtr, ytr = xor_data(rng, 50)
        Xte, yte = xor_data(rng, 50)
        cfg = ForestConfig(n_trees=200, seed=5)
        forest = rf_fit(Xtr, ytr, cfg)
        acc = float((rf_predict(forest, Xte) == yte).mean())
        if acc < 0.95:
            return False, f"holdout accuracy {acc:.3f} < 0.95"
        dumps = {
            jobs: rf_fit(Xtr, ytr, cfg, n_jobs=jobs).dump() for jobs in (1, 2, 8)
        }
        if not (dumps[1] == dumps[2] == dumps[8]):
            return False, "forest differs across thread counts"
        return True, f"holdout accuracy {acc:.3f}; identical across 1/2/8 threads"

    return _timed(5, "random forest XOR benchmark and thread determinism", body)


# -- criterion 6: LSTM cell, gradients, constant fit -------------------------


def criterion_6() -> CriterionResult:
    def body():
        # Scalar cell, all weights 1, biases 0, x = 1, zero state. The cell
        # equations give h = sigmoid(1) * tanh(sigmoid(1) * tanh(1)).
        layer = LayerParams(
            W={g: np.ones((2, 1)) for g in ("f", "i", "c", "o")},
            b={g: np.zeros(1) for g in ("f", "i", "c", "o")},
        )
        h, c = lstm_cell_forward(np.array([1.0]), np.zeros(1), np.zeros(1), layer)
        s1 = 1.0 / (1.0 + math.exp(-1.0))
        c_want = s1 * math.tanh(1.0)
        h_want = s1 * math.tanh(c_want)
        if abs(float(c[0, 0]) - c_want) > 1e-5 or abs(float(h[0, 0]) - h_want) > 1e-5:
            return False, f"cell hand case h={float(h[0, 0]):.6f}, want {h_want:.6f}"
        # Finite-difference audit of the full 4-layer stack, with the
        # parameters drawn at a healthy scale so deep-layer gradients sit
        # well above the finite-difference noise floor.
        cfg = LstmConfig(hidden_size=8, dropout_rate=0.0, window=4, epochs=0, seed=6)
        rng = np.random.default_rng(66)
        tmpl = init_params(cfg, 3, rng)
        params = tmpl.unflatten(rng.normal(scale=0.5, size=tmpl.n_params))
        Xs = rng.normal(size=(6, 4, 3))
        ys = rng.normal(size=6)
        err = gradient_check(params, Xs, ys, cfg, eps=1e-5, n_samples=200,
                             rng=np.random.default_rng(7))
        if err >= 1e-4:
            return False, f"gradient audit max rel err {err:.2e}"
        # Constant series fit.
        cfg = LstmConfig(hidden_size=16, dropout_rate=0.0, window=4, epochs=200,
                         learning_rate=0.01, seed=9)
        n = 40
        X = np.full((n, 2), 0.5)
        y = np.full(n, 0.3)
        model = lstm_train(X, y, cfg)
        final = float(model.loss_curve[-1])
        if final >= 1e-4:
            return False, f"constant-series loss {final:.2e} after {cfg.epochs} epochs"
        return True, f"cell exact; grad err {err:.1e}; constant loss {final:.1e}"

    return _timed(6, "LSTM cell hand case, gradient audit, constant fit", body)


# -- criterion 7: metric identities ------------------------------------------


def criterion_7() -> CriterionResult:
    def body():
        if abs(rmse([1, 2], [2, 4]) - math.sqrt(2.5)) > 1e-12:
            return False, "rmse hand case"
        if abs(mae([1, 2], [2, 4]) - 1.5) > 1e-12:
            return False, "mae hand case"
        if abs(mbe([1, 2], [2, 4]) - (-1.5)) > 1e-12:
            return False, "mbe hand case"
        rng = np.random.default_rng(77)
        for _ in range(1000):
            n = int(rng.integers(1, 30))
            p = rng.normal(size=n) * rng.uniform(0.5, 3)
            a = rng.normal(size=n) * rng.uniform(0.5, 3)
            r, m, b = rmse(p, a), mae(p, a), mbe(p, a)
            if not (r >= m - 1e-12 and m >= abs(b) - 1e-12):
                return False, "ordering rmse >= mae >= |mbe| violated"
        return True, "hand cases exact; ordering holds on 1000 random vectors"

    return _timed(7, "metric hand cases and ordering inequality", body)


# -- criterion 8: end-to-end determinism and cohort shape --------------------


def edge_middle_mass(n_children: int = 200) -> tuple[float, float]:
    """Speech seconds in minutes [0,1)+[7,8) vs minutes [3,5) for the
    default age-5 problem profile, summed over seeded children."""
    profile = BurstProfile(0.030, 4.0, "bimodal-edges")
    edge = 0.0
    middle = 0.0
    for i in range(n_children):
        s = generate_child(profile, child_rng(7, i, 5, "problem"), f"c{i:03d}", 5, "problem")
        v = s.values.astype(np.float64)
        edge += float(v[:60].sum() + v[420:].sum())
        middle += float(v[180:300].sum())
    return edge, middle


def criterion_8(keep_dir: str | None = None) -> CriterionResult:
    def body():
        edge, middle = edge_middle_mass()
        if middle <= 0 or edge < 1.5 * middle:
            return False, f"edge/middle mass ratio {edge / max(middle, 1e-9):.2f} < 1.5"
        base = Path(keep_dir) if keep_dir else Path(tempfile.mkdtemp(prefix="waitbench-"))
        cfg = RunConfig()
        reports = []
        for tag, threads in (("a", 1), ("b", 1), ("c", 2)):
            run_cfg = dataclasses.replace(cfg, out_dir=str(base / tag), n_threads=threads)
            run_dir = run_pipeline(run_cfg)
            reports.append((run_dir / "report.json").read_bytes())
            heatmaps = sorted((run_dir / "heatmaps").glob("*.svg"))
            if len(heatmaps) != 6:
                return False, f"{len(heatmaps)} heatmaps, want 6"
        if not (reports[0] == reports[1] == reports[2]):
            return False, "report bytes differ across runs/threads"
        import json

        doc = json.loads(reports[0])
        n_entries = sum(
            len(cats) for ages in doc["entries"].values() for cats in ages.values()
        )
        if n_entries != 24 or not doc["complete"]:
            return False, f"{n_entries} entries, want 24 complete"
        return True, (
            f"24 entries, byte-identical x3 runs, edge/middle {edge / middle:.2f}"
        )

    return _timed(8, "end-to-end report determinism and cohort mass pattern", body)


ALL_CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
)


def run_selftest(numbers: list[int] | None = None, emit=print) -> bool:
    ok = True
    for idx, fn in enumerate(ALL_CRITERIA, start=1):
        if numbers and idx not in numbers:
            continue
        result = fn()
        emit(result.line())
        ok = ok and result.passed
    return ok
