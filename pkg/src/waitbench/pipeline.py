"""End-to-end orchestration: ingest or generate a cohort, cluster each
(age, category) stratum, split predictors from responses, smooth, train
the four model families, evaluate, and render.

Every random choice draws from a substream keyed by the global seed plus
the stratum / child / model it belongs to, and parallel work is collected
by key, so the written report is a pure function of the semantic config.
Execution knobs (thread count, output root) are excluded from the config
digest for the same reason.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cluster as cl
from . import synth
from .data import (
    AGES,
    CATEGORIES,
    Dataset,
    bin_series,
    build_supervised,
    chronological_split,
    load_dataset,
)
from .errors import ConfigError, EmptyReport, StratumFailure
from .linear import EnetConfig, enet_fit, enet_predict, ols_smooth, var_smooth
from .lstm import LstmConfig, lstm_predict, lstm_train, make_windows
from .metrics import EvalReport, evaluate_all
from .svgplot import panels_svg
from .trees import BoostConfig, ForestConfig, rf_fit, rf_predict, xgb_fit, xgb_predict

MODEL_ORDER = ("boosted_trees", "random_forest", "elastic_net", "lstm")


@dataclass(frozen=True)
class RunConfig:
    input: str = "synth"  # "synth" or a CSV path
    cohort: synth.CohortConfig = field(default_factory=synth.CohortConfig)
    bin_width_s: int = 10
    response_fraction: float = 0.2
    split_ratio: float = 0.7
    seed: int = 7
    ols_smoothing: bool = True
    ols_degree: int = 3
    var_half: bool = True
    var_order: int = 1
    enet: EnetConfig = field(default_factory=EnetConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    boost: BoostConfig = field(default_factory=BoostConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    out_dir: str = "out"
    n_threads: int = 1

    def semantic_lines(self) -> list[str]:
        """Canonical key = value lines of everything that affects results."""
        lines = {
            "input": self.input,
            "bin_width_s": self.bin_width_s,
            "response_fraction": self.response_fraction,
            "split_ratio": self.split_ratio,
            "seed": self.seed,
            "ols_smoothing": self.ols_smoothing,
            "ols_degree": self.ols_degree,
            "var_half": self.var_half,
            "var_order": self.var_order,
        }
        if self.input != "synth":
            # Content-address the file so the digest pins the actual data,
            # not just its path.
            with open(self.input, "rb") as fh:
                lines["input_sha256"] = hashlib.sha256(fh.read()).hexdigest()
        if self.input == "synth":
            lines["n_children"] = self.cohort.n_children
            lines["cohort_seed"] = self.cohort.seed
            for (age, cat), prof in sorted(self.cohort.profiles.items()):
                base = f"age{age}.{cat}"
                lines[f"{base}.onset_hazard"] = prof.onset_hazard
                lines[f"{base}.mean_burst_s"] = prof.mean_burst_s
                lines[f"{base}.time_weight"] = prof.time_weight
        for prefix, sub in (
            ("enet", self.enet),
            ("forest", self.forest),
            ("boost", self.boost),
            ("lstm", self.lstm),
        ):
            for f_ in dataclasses.fields(sub):
                lines[f"{prefix}.{f_.name}"] = getattr(sub, f_.name)
        return [f"{k} = {lines[k]}" for k in sorted(lines)]

    def digest(self) -> str:
        text = "\n".join(self.semantic_lines()) + "\n"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


_CONFIG_KEYS = {
    "input": str,
    "input_sha256": str,
    "n_children": int,
    "cohort_seed": int,
    "bin_width_s": int,
    "response_fraction": float,
    "split_ratio": float,
    "seed": int,
    "ols_smoothing": bool,
    "ols_degree": int,
    "var_half": bool,
    "var_order": int,
    "out_dir": str,
    "n_threads": int,
}

def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def _opt(parse):
    return lambda v: None if v.strip() == "None" else parse(v)


# Every sub-config field is parseable so a run's config.resolved.txt can be
# fed back through `waitbench run --config` to reproduce it bit for bit.
_SUB_KEYS = {
    "enet": (EnetConfig, {"alpha": float, "lam": float, "epsilon": float,
                          "max_iter": int, "tol": float,
                          "standardize": _parse_bool, "fit_intercept": _parse_bool}),
    "forest": (ForestConfig, {"n_trees": int, "max_depth": int,
                              "min_samples_leaf": int, "mtry": _opt(int), "seed": int}),
    "boost": (BoostConfig, {"n_rounds": int, "learning_rate": float, "gamma": float,
                            "lam": float, "max_depth": int, "loss": str, "seed": int,
                            "subsample": float, "base_score": _opt(float)}),
    "lstm": (LstmConfig, {"hidden_size": int, "n_layers": int, "dropout_rate": float,
                          "window": int, "epochs": int, "learning_rate": float,
                          "seed": int, "clip_norm": float}),
}


def run_config_from_text(text: str) -> RunConfig:
    kv = synth.parse_kv_text(text)
    plain: dict = {}
    subs: dict[str, dict] = {name: {} for name in _SUB_KEYS}
    cohort_lines: list[str] = []
    for key, val in kv.items():
        if key in _CONFIG_KEYS:
            typ = _CONFIG_KEYS[key]
            plain[key] = _parse_bool(val) if typ is bool else typ(val)
        elif "." in key and key.split(".", 1)[0] in _SUB_KEYS:
            name, attr = key.split(".", 1)
            _, fields = _SUB_KEYS[name]
            if attr not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            subs[name][attr] = fields[attr](val)
        elif key.startswith("age"):
            cohort_lines.append(f"{key} = {val}")
        else:
            raise ConfigError(f"unknown config key {key!r}")
    n_children = plain.pop("n_children", None)
    cohort_seed = plain.pop("cohort_seed", None)
    want_sha = plain.pop("input_sha256", None)
    if want_sha is not None and plain.get("input", "synth") != "synth":
        with open(plain["input"], "rb") as fh:
            got_sha = hashlib.sha256(fh.read()).hexdigest()
        if got_sha != want_sha:
            raise ConfigError(
                f"input file {plain['input']} does not match the recorded "
                f"digest (expected {want_sha[:12]}, found {got_sha[:12]})"
            )
    seed = plain.get("seed", 7)
    cohort_text = "\n".join(
        [f"n_children = {n_children if n_children is not None else 12}",
         f"seed = {cohort_seed if cohort_seed is not None else seed}"]
        + cohort_lines
    )
    cohort = synth.cohort_config_from_text(cohort_text)
    built = {name: ctor(**subs[name]) for name, (ctor, _) in _SUB_KEYS.items()}
    return RunConfig(cohort=cohort, enet=built["enet"], forest=built["forest"],
                     boost=built["boost"], lstm=built["lstm"], **plain)


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return run_config_from_text(fh.read())


def _sub_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def _make_smoother(cfg: RunConfig, age: int, cat_idx: int, n_predictors: int):
    """Per-stratum smoothing closure: polynomial fit of every predictor
    column, then VAR refitting of a seeded half of them."""
    if cfg.var_half and n_predictors >= 2:
        rng = np.random.default_rng([cfg.seed, age, cat_idx, 101])
        half = np.sort(rng.choice(n_predictors, size=n_predictors // 2, replace=False))
    else:
        half = np.zeros(0, dtype=np.int64)

    def smoother(raw: np.ndarray) -> np.ndarray:
        out = raw.astype(np.float64).copy()
        if cfg.ols_smoothing:
            for j in range(out.shape[1]):
                out[:, j] = ols_smooth(out[:, j], cfg.ols_degree)
        if half.shape[0] >= 1:
            fitted, _ = var_smooth(out[:, half], cfg.var_order)
            out[:, half] = fitted
        return out

    return smoother if (cfg.ols_smoothing or half.shape[0]) else None


def _fit_models_for_child(cfg, frame, split, age, cat_idx, resp_idx):
    """Train the four families on one response child; returns count-scale
    predictions per model plus dumpable artifacts."""
    train, test = split.train, split.test
    preds = {}
    dumps = {}

    boost_cfg = dataclasses.replace(cfg.boost, seed=_sub_seed(cfg.seed, age, cat_idx, resp_idx, 1))
    xgb = xgb_fit(train.X, train.y_classes, boost_cfg)
    labels, _ = xgb_predict(xgb, test.X)
    preds["boosted_trees"] = labels.astype(np.float64)
    dumps["boosted_trees"] = xgb.dump()

    forest_cfg = dataclasses.replace(cfg.forest, seed=_sub_seed(cfg.seed, age, cat_idx, resp_idx, 2))
    forest = rf_fit(train.X, train.y_classes, forest_cfg)
    preds["random_forest"] = rf_predict(forest, test.X).astype(np.float64)
    dumps["random_forest"] = forest.dump()

    enet = enet_fit(train.X, train.y, cfg.enet)
    preds["elastic_net"] = frame.counts_from_normalized(enet_predict(enet, test.X))
    dumps["elastic_net"] = enet.dump()

    lstm_cfg = dataclasses.replace(cfg.lstm, seed=_sub_seed(cfg.seed, age, cat_idx, resp_idx, 3))
    model = lstm_train(train.X, train.y, lstm_cfg)
    Xs_all, _, ts = make_windows(frame.X, frame.y, lstm_cfg.window)
    test_mask = ts >= train.n_samples
    yhat_norm = lstm_predict(model, Xs_all[test_mask])
    preds["lstm"] = frame.counts_from_normalized(yhat_norm)
    dumps["lstm"] = model.params.dump()
    curve_lines = ["epoch,train_loss"] + [
        f"{e},{v!r}" for e, v in enumerate(model.loss_curve)
    ]
    dumps["lstm_loss"] = "\n".join(curve_lines) + "\n"
    return preds, dumps


def _run_stratum(ds: Dataset, cfg: RunConfig, age: int, category: str, run_dir: Path):
    cat_idx = CATEGORIES.index(category)
    ids = ds.child_ids(age, category)
    binned = [bin_series(ds.get(cid, age, category), cfg.bin_width_s) for cid in ids]
    dm = cl.distance_matrix(binned)
    dg = cl.ward_agglomerate(dm)
    data = np.stack([b.counts for b in binned]).astype(np.float64)
    assign = cl.select_k_ch(dg, data, (2, len(ids) - 1))
    predictor_ids, response_ids = cl.split_predictor_response(dm, cfg.response_fraction)

    stem = f"age{age}_{category}"
    cl.similarity_heatmap(
        dm, dg.leaf_order,
        run_dir / "heatmaps" / f"{stem}.csv",
        run_dir / "heatmaps" / f"{stem}.svg",
    )

    smoother = _make_smoother(cfg, age, cat_idx, len(predictor_ids))
    stratum_preds = {name: [] for name in MODEL_ORDER}
    traces = {name: [] for name in MODEL_ORDER}
    for resp_idx, resp_id in enumerate(response_ids):
        frame = build_supervised(
            ds, age, category, predictor_ids, resp_id, cfg.bin_width_s, smoother
        )
        split = chronological_split(frame, cfg.split_ratio)
        preds, dumps = _fit_models_for_child(cfg, frame, split, age, cat_idx, resp_idx)
        actual = split.test.y_classes.astype(np.float64)
        model_dir = run_dir / "models" / stem / resp_id
        model_dir.mkdir(parents=True, exist_ok=True)
        for name in MODEL_ORDER:
            stratum_preds[name].append((preds[name], actual))
            traces[name].append(
                {
                    "response_id": resp_id,
                    "actual": actual.tolist(),
                    "predicted": [float(v) for v in preds[name]],
                }
            )
            (model_dir / f"{name}.txt").write_text(dumps[name], encoding="utf-8")
        (model_dir / "lstm_loss.csv").write_text(dumps["lstm_loss"], encoding="utf-8")

    cluster_row = {
        "age": age,
        "category": category,
        "selected_k": assign.k,
        "ch_score": assign.ch_score,
        "degenerate": assign.degenerate,
        "leaf_order": list(dg.leaf_order),
        "predictors": predictor_ids,
        "responses": response_ids,
    }
    return stratum_preds, traces, cluster_row


def run_pipeline(cfg: RunConfig) -> Path:
    """Execute the full benchmark; returns the run directory."""
    if cfg.input == "synth":
        ds = synth.generate_cohort(cfg.cohort)
    else:
        ds = load_dataset(cfg.input)
    digest = cfg.digest()
    run_dir = Path(cfg.out_dir) / f"run-{digest[:12]}"
    for sub in ("heatmaps", "models", "plots"):
        (run_dir / sub).mkdir(parents=True, exist_ok=True)
    (run_dir / "config.digest").write_text(digest + "\n", encoding="utf-8")
    (run_dir / "config.resolved.txt").write_text(
        "\n".join(cfg.semantic_lines()) + "\n", encoding="utf-8"
    )

    strata = [(age, cat) for age in AGES for cat in CATEGORIES]

    def one(stratum):
        age, cat = stratum
        try:
            return _run_stratum(ds, cfg, age, cat, run_dir)
        except Exception as e:
            raise StratumFailure(f"age {age} {cat}: {e}") from e

    if cfg.n_threads <= 1:
        results = [one(s) for s in strata]
    else:
        with ThreadPoolExecutor(max_workers=cfg.n_threads) as pool:
            results = list(pool.map(one, strata))

    predictions = {}
    traces = {name: {} for name in MODEL_ORDER}
    cluster_rows = []
    for (age, cat), (stratum_preds, stratum_traces, cluster_row) in zip(strata, results):
        for name in MODEL_ORDER:
            predictions[(name, age, cat)] = stratum_preds[name]
            traces[name][f"{age}/{cat}"] = stratum_traces[name]
        cluster_rows.append(cluster_row)

    metadata = {
        "seed": cfg.seed,
        "config_digest": digest,
        "bin_width_s": cfg.bin_width_s,
        "input": cfg.input,
    }
    report = evaluate_all(predictions, metadata)
    (run_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (run_dir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (run_dir / "traces.json").write_text(
        json.dumps(traces, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    (run_dir / "clusters.json").write_text(
        json.dumps(cluster_rows, sort_keys=True, indent=1, default=str) + "\n",
        encoding="utf-8",
    )
    render_report(report, run_dir / "plots", traces=traces, style="both")
    return run_dir


def render_report(report: EvalReport, out_dir, traces=None, style: str = "both") -> list[Path]:
    """Write the sorted text table and, when traces are given, one
    six-panel predicted-vs-actual SVG per model."""
    if not report.entries:
        raise EmptyReport("no entries to render")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if style in ("table", "both"):
        path = out_dir / "table.txt"
        path.write_text(report.table(), encoding="utf-8")
        written.append(path)
    if style in ("svg", "both") and traces is not None:
        models = sorted({m for (m, _, _) in report.entries})
        for model in models:
            panels = []
            for age in AGES:
                for cat in CATEGORIES:
                    entry = report.entries.get((model, age, cat))
                    footer = (
                        f"rmse {entry.rmse:.3f}  mae {entry.mae:.3f}  mbe {entry.mbe:.3f}"
                        if entry
                        else "absent"
                    )
                    child_traces = traces.get(model, {}).get(f"{age}/{cat}", [])
                    panels.append(
                        {
                            "label": f"age {age}, {cat}",
                            "actual": [t["actual"] for t in child_traces],
                            "predicted": [t["predicted"] for t in child_traces],
                            "footer": footer,
                        }
                    )
            path = out_dir / f"{model}.svg"
            path.write_text(panels_svg(f"{model}: predicted vs actual test bins", panels),
                            encoding="utf-8")
            written.append(path)
    return written
