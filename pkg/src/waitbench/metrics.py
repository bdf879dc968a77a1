"""The three error metrics and the per-stratum evaluation report.

All metrics are computed on the de-normalized count scale, so values are
comparable across strata. The bias convention is prediction minus actual:
a negative mean bias means under-prediction on average.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import AGES, CATEGORIES
from .errors import EmptyInput, LengthMismatch

MODEL_NAMES = ("boosted_trees", "random_forest", "elastic_net", "lstm")


def _pair(pred, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.ndim != 1:
        raise LengthMismatch(f"pred {p.shape} vs actual {a.shape}")
    if p.shape[0] == 0:
        raise EmptyInput("empty prediction vector")
    return p, a


def rmse(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.mean(np.abs(p - a)))


def mbe(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.mean(p - a))


@dataclass(frozen=True)
class MetricTriple:
    rmse: float
    mae: float
    mbe: float

    def as_dict(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "mbe": self.mbe}


def metric_triple(pred, actual) -> MetricTriple:
    return MetricTriple(rmse(pred, actual), mae(pred, actual), mbe(pred, actual))


def _mean_triple(triples: list[MetricTriple]) -> MetricTriple:
    return MetricTriple(
        float(np.mean([t.rmse for t in triples])),
        float(np.mean([t.mae for t in triples])),
        float(np.mean([t.mbe for t in triples])),
    )


@dataclass
class EvalReport:
    """Per (model, age, category) metric triples averaged over response
    children, plus per-model averages over the six strata."""

    entries: dict[tuple[str, int, str], MetricTriple]
    model_averages: dict[str, MetricTriple]
    metadata: dict = field(default_factory=dict)
    missing: list = field(default_factory=list)

    @property
    def complete(self) -> bool:
        models = sorted({m for (m, _, _) in self.entries})
        want = {(m, a, c) for m in models for a in AGES for c in CATEGORIES}
        return bool(models) and want <= set(self.entries)

    def to_json(self) -> str:
        nested: dict = {}
        for (model, age, cat), t in sorted(self.entries.items()):
            nested.setdefault(model, {}).setdefault(str(age), {})[cat] = t.as_dict()
        doc = {
            "metadata": self.metadata,
            "entries": nested,
            "model_averages": {m: t.as_dict() for m, t in sorted(self.model_averages.items())},
            "complete": self.complete,
            "missing": sorted(self.missing),
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["model,age,category,rmse,mae,mbe"]
        for (model, age, cat), t in sorted(self.entries.items()):
            lines.append(f"{model},{age},{cat},{t.rmse!r},{t.mae!r},{t.mbe!r}")
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        """Text table sorted by model-average RMSE ascending, ties by name."""
        rows = sorted(self.model_averages.items(), key=lambda kv: (kv[1].rmse, kv[0]))
        width = max((len(m) for m, _ in rows), default=5)
        out = [f"{'model':<{width}}  {'rmse':>10}  {'mae':>10}  {'mbe':>10}"]
        for model, t in rows:
            out.append(f"{model:<{width}}  {t.rmse:>10.4f}  {t.mae:>10.4f}  {t.mbe:>10.4f}")
        return "\n".join(out) + "\n"


def report_from_json(text: str) -> EvalReport:
    doc = json.loads(text)
    entries = {}
    for model, ages in doc["entries"].items():
        for age_s, cats in ages.items():
            for cat, t in cats.items():
                entries[(model, int(age_s), cat)] = MetricTriple(t["rmse"], t["mae"], t["mbe"])
    averages = {
        m: MetricTriple(t["rmse"], t["mae"], t["mbe"])
        for m, t in doc["model_averages"].items()
    }
    return EvalReport(entries, averages, doc.get("metadata", {}), doc.get("missing", []))


PredictionsByStratum = "dict[tuple[str, int, str], list[tuple[np.ndarray, np.ndarray]]]"


def evaluate_all(predictions, metadata: dict | None = None) -> EvalReport:
    """Aggregate per-child (pred, actual) count-scale pairs into a report.

    predictions maps (model, age, category) to a list over response
    children of (predicted counts, actual counts). A stratum entry is the
    mean triple over its children; a model average is the mean over its
    present strata. Absent strata are listed in report.missing."""
    entries: dict[tuple[str, int, str], MetricTriple] = {}
    missing: list[str] = []
    models = sorted({m for (m, _, _) in predictions})
    for model in models:
        for age in AGES:
            for cat in CATEGORIES:
                pairs = predictions.get((model, age, cat), [])
                if not pairs:
                    missing.append(f"{model}/{age}/{cat}")
                    continue
                triples = [metric_triple(p, a) for p, a in pairs]
                entry = _mean_triple(triples)
                # Jensen + triangle ordering survives averaging over children.
                assert entry.rmse >= entry.mae - 1e-12 >= abs(entry.mbe) - 2e-12
                entries[(model, age, cat)] = entry
    averages = {}
    for model in models:
        triples = [t for (m, _, _), t in entries.items() if m == model]
        if triples:
            averages[model] = _mean_triple(triples)
    return EvalReport(entries, averages, metadata or {}, missing)
