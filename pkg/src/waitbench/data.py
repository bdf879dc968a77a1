"""Dataset model: per-second binary series, binning, normalization, splits,
and supervised-frame construction shared by every model family.

One series is one child's 480-second binary coding for one age and one
speech category. Binning aggregates seconds of speech into fixed-width
windows; those per-bin counts are the quantity every model forecasts.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import (
    EmptyPredictorSet,
    IncompleteSeries,
    MalformedRow,
    NonDivisorWidth,
    TooFewSamples,
    UnknownChild,
)

TASK_SECONDS = 480
AGES = (3, 4, 5)
CATEGORIES = ("problem", "unrelated")

CSV_HEADER = "child_id,age,category,second,code"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class UtteranceSeries:
    """One child's per-second binary coding for one age and category."""

    child_id: str
    age: int
    category: str
    values: np.ndarray  # (480,) uint8 in {0,1}, read-only

    def __post_init__(self):
        if self.age not in AGES:
            raise MalformedRow(f"age {self.age!r} not in {AGES}")
        if self.category not in CATEGORIES:
            raise MalformedRow(f"category {self.category!r} not in {CATEGORIES}")
        v = np.asarray(self.values, dtype=np.uint8)
        if v.shape != (TASK_SECONDS,):
            raise IncompleteSeries(
                f"{self.child_id}: {v.shape[0] if v.ndim == 1 else v.shape} values, "
                f"need exactly {TASK_SECONDS}"
            )
        if not np.isin(v, (0, 1)).all():
            raise MalformedRow(f"{self.child_id}: non-binary code present")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.child_id, self.age, self.category)


@dataclass(frozen=True)
class BinnedSeries:
    """Seconds-of-speech counts per fixed-width bin of a parent series."""

    child_id: str
    age: int
    category: str
    bin_width_s: int
    counts: np.ndarray  # (480 // bin_width_s,) int64, read-only

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.size and (c.min() < 0 or c.max() > self.bin_width_s):
            raise MalformedRow(
                f"{self.child_id}: bin counts must lie in [0, {self.bin_width_s}]"
            )
        object.__setattr__(self, "counts", _frozen(c))


@dataclass
class Dataset:
    """Series keyed by (child_id, age, category)."""

    series: dict[tuple[str, int, str], UtteranceSeries] = field(default_factory=dict)

    def add(self, s: UtteranceSeries) -> None:
        if s.key in self.series:
            raise MalformedRow(f"duplicate series key {s.key}")
        self.series[s.key] = s

    def child_ids(self, age: int, category: str) -> list[str]:
        return sorted(cid for (cid, a, c) in self.series if a == age and c == category)

    def get(self, child_id: str, age: int, category: str) -> UtteranceSeries:
        try:
            return self.series[(child_id, age, category)]
        except KeyError:
            raise UnknownChild(f"({child_id}, {age}, {category}) not in dataset") from None

    def __len__(self) -> int:
        return len(self.series)


def load_dataset(path) -> Dataset:
    """Read the long CSV format (child_id,age,category,second,code).

    Every (child, age, category) must cover seconds 0..479 exactly once;
    anything else raises IncompleteSeries. Bad codes, seconds, ages or
    categories raise MalformedRow.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _load_rows(csv.reader(fh), str(path))


def loads_dataset(text: str) -> Dataset:
    return _load_rows(csv.reader(io.StringIO(text)), "<string>")


def _load_rows(reader, origin: str) -> Dataset:
    rows = iter(reader)
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != CSV_HEADER.split(","):
        raise MalformedRow(f"{origin}: expected header {CSV_HEADER!r}")
    acc: dict[tuple[str, int, str], np.ndarray] = {}
    seen: dict[tuple[str, int, str], np.ndarray] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise MalformedRow(f"{origin}:{lineno}: expected 5 columns, got {len(row)}")
        cid, age_s, cat, sec_s, code_s = (f.strip() for f in row)
        try:
            age = int(age_s)
            sec = int(sec_s)
            code = int(code_s)
        except ValueError:
            raise MalformedRow(f"{origin}:{lineno}: non-integer field") from None
        if age not in AGES:
            raise MalformedRow(f"{origin}:{lineno}: age {age} not in {AGES}")
        if cat not in CATEGORIES:
            raise MalformedRow(f"{origin}:{lineno}: category {cat!r}")
        if not 0 <= sec < TASK_SECONDS:
            raise MalformedRow(f"{origin}:{lineno}: second {sec} outside [0,{TASK_SECONDS})")
        if code not in (0, 1):
            raise MalformedRow(f"{origin}:{lineno}: code {code} not binary")
        key = (cid, age, cat)
        if key not in acc:
            acc[key] = np.zeros(TASK_SECONDS, dtype=np.uint8)
            seen[key] = np.zeros(TASK_SECONDS, dtype=bool)
        if seen[key][sec]:
            raise IncompleteSeries(f"{origin}: duplicate second {sec} for {key}")
        acc[key][sec] = code
        seen[key][sec] = True
    ds = Dataset()
    for key in sorted(acc):
        n = int(seen[key].sum())
        if n != TASK_SECONDS:
            raise IncompleteSeries(f"{origin}: {key} has {n} seconds, need {TASK_SECONDS}")
        cid, age, cat = key
        ds.add(UtteranceSeries(cid, age, cat, acc[key]))
    return ds


def dumps_dataset(ds: Dataset) -> str:
    """Serialize in canonical order: sorted by (child_id, age, category, second)."""
    lines = [CSV_HEADER]
    for key in sorted(ds.series):
        s = ds.series[key]
        for sec in range(TASK_SECONDS):
            lines.append(f"{s.child_id},{s.age},{s.category},{sec},{int(s.values[sec])}")
    return "\n".join(lines) + "\n"


def write_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_dataset(ds))


def bin_series(s: UtteranceSeries, bin_width_s: int) -> BinnedSeries:
    """Aggregate seconds of speech into counts per bin; width must divide 480."""
    if bin_width_s <= 0 or TASK_SECONDS % bin_width_s != 0:
        raise NonDivisorWidth(f"bin width {bin_width_s} does not divide {TASK_SECONDS}")
    counts = s.values.reshape(-1, bin_width_s).sum(axis=1).astype(np.int64)
    return BinnedSeries(s.child_id, s.age, s.category, bin_width_s, counts)


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column (min, max) record of a min-max normalization."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _frozen(np.asarray(self.mins, dtype=np.float64)))
        object.__setattr__(self, "maxs", _frozen(np.asarray(self.maxs, dtype=np.float64)))

    def transform(self, M: np.ndarray) -> np.ndarray:
        M = np.asarray(M, dtype=np.float64)
        span = self.maxs - self.mins
        out = np.zeros_like(M)
        nz = span > 0
        out[:, nz] = (M[:, nz] - self.mins[nz]) / span[nz]
        return out

    def inverse(self, M: np.ndarray) -> np.ndarray:
        """Invert for non-constant columns; constant columns recover the min."""
        M = np.asarray(M, dtype=np.float64)
        return M * (self.maxs - self.mins) + self.mins


def normalize(columns: np.ndarray) -> tuple[np.ndarray, MinMaxScaler]:
    """Min-max each column to [0,1]; constant columns map to 0.0."""
    M = np.asarray(columns, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] < 1:
        raise TooFewSamples("normalize needs at least one row")
    scaler = MinMaxScaler(M.min(axis=0), M.max(axis=0))
    return scaler.transform(M), scaler


@dataclass(frozen=True)
class SupervisedFrame:
    """Design matrix and target built from predictor children forecasting one
    response child; y_classes keeps the raw integer counts behind y."""

    X: np.ndarray  # (n_samples, n_features) in [0,1]
    y: np.ndarray  # (n_samples,) normalized target
    y_classes: np.ndarray  # (n_samples,) raw integer counts
    feature_names: tuple[str, ...]
    scaler: MinMaxScaler  # over feature columns
    y_scaler: MinMaxScaler  # over the single target column

    def __post_init__(self):
        for name in ("X", "y", "y_classes"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name))))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def slice(self, lo: int, hi: int) -> "SupervisedFrame":
        return SupervisedFrame(
            self.X[lo:hi].copy(),
            self.y[lo:hi].copy(),
            self.y_classes[lo:hi].copy(),
            self.feature_names,
            self.scaler,
            self.y_scaler,
        )

    def counts_from_normalized(self, yn: np.ndarray) -> np.ndarray:
        """Map normalized predictions back to the count scale."""
        return self.y_scaler.inverse(np.asarray(yn, dtype=np.float64)[:, None])[:, 0]


@dataclass(frozen=True)
class SplitFrame:
    train: SupervisedFrame
    test: SupervisedFrame
    ratio: float


def chronological_split(frame: SupervisedFrame, ratio: float = 0.7) -> SplitFrame:
    """First floor(ratio*n) samples train, remainder test; order preserved."""
    n = frame.n_samples
    if not 0.0 < ratio < 1.0:
        raise TooFewSamples(f"ratio {ratio} outside (0,1)")
    if n < 4:
        raise TooFewSamples(f"need at least 4 samples, got {n}")
    cut = int(np.floor(ratio * n))
    return SplitFrame(frame.slice(0, cut), frame.slice(cut, n), ratio)


Smoother = Callable[[np.ndarray], np.ndarray]


def build_supervised(
    ds: Dataset,
    age: int,
    category: str,
    predictor_ids: Iterable[str],
    response_id: str,
    bin_width_s: int,
    smoother: Smoother | None = None,
) -> SupervisedFrame:
    """Per-bin cross-child frame: sample t has each predictor child's
    (smoothed, then normalized) bin-t count as features and the response
    child's bin-t count as target.

    ``smoother`` maps the raw (n_bins, n_predictors) count matrix to a
    same-shaped float matrix; None means identity. The response stays on
    the raw count grid: y is its min-max normalization, y_classes the
    integers themselves.
    """
    predictor_ids = list(predictor_ids)
    if not predictor_ids:
        raise EmptyPredictorSet(f"no predictors for age {age} {category}")
    if response_id in predictor_ids:
        raise MalformedRow(f"response {response_id} also listed as predictor")
    cols = [bin_series(ds.get(pid, age, category), bin_width_s).counts for pid in predictor_ids]
    raw = np.stack(cols, axis=1).astype(np.float64)
    if smoother is not None:
        smoothed = np.asarray(smoother(raw), dtype=np.float64)
        if smoothed.shape != raw.shape:
            raise MalformedRow(
                f"smoother changed shape {raw.shape} -> {smoothed.shape}"
            )
    else:
        smoothed = raw
    X, scaler = normalize(smoothed)
    y_counts = bin_series(ds.get(response_id, age, category), bin_width_s).counts
    yn, y_scaler = normalize(y_counts.astype(np.float64)[:, None])
    return SupervisedFrame(
        X, yn[:, 0], y_counts.copy(), tuple(predictor_ids), scaler, y_scaler
    )
