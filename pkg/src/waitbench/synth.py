"""Seeded synthetic cohorts of bursty binary utterance series.

Each child is a two-state (silent/speaking) per-second chain: while silent
a burst starts with probability onset_hazard * time_weight(t), clamped to
[0,1]; while speaking it ends with probability 1/mean_burst_s, giving
geometric burst lengths. The time weight shapes WHEN bursts occur:

  uniform        flat across the task
  front-loaded   concentrated near the start, decaying
  bimodal-edges  concentrated in the opening and closing minutes

Per-child rng substreams are derived from (seed, child index, age,
category), so output is identical no matter the generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .accel import markov_fill
from .data import AGES, CATEGORIES, TASK_SECONDS, Dataset, UtteranceSeries
from .errors import ConfigError

TIME_WEIGHTS = ("uniform", "front-loaded", "bimodal-edges")


def time_weight_profile(kind: str) -> np.ndarray:
    """Per-second multiplier over [0, 480) for a named weight shape."""
    t = np.arange(TASK_SECONDS, dtype=np.float64)
    if kind == "uniform":
        return np.ones(TASK_SECONDS)
    if kind == "front-loaded":
        return 0.25 + 1.6 * np.exp(-t / 180.0)
    if kind == "bimodal-edges":
        return (
            0.35
            + 1.3 * np.exp(-0.5 * ((t - 30.0) / 75.0) ** 2)
            + 1.3 * np.exp(-0.5 * ((t - 450.0) / 75.0) ** 2)
        )
    raise ConfigError(f"unknown time weight {kind!r}; choose from {TIME_WEIGHTS}")


@dataclass(frozen=True)
class BurstProfile:
    onset_hazard: float
    mean_burst_s: float
    time_weight: str = "uniform"

    def __post_init__(self):
        if not 0.0 <= self.onset_hazard <= 1.0:
            raise ConfigError(f"onset_hazard {self.onset_hazard} outside [0,1]")
        if self.mean_burst_s < 1.0:
            raise ConfigError(f"mean_burst_s {self.mean_burst_s} below 1")
        if self.time_weight not in TIME_WEIGHTS:
            raise ConfigError(f"time_weight {self.time_weight!r} not in {TIME_WEIGHTS}")


def default_profiles() -> dict[tuple[int, str], BurstProfile]:
    """Default per-(age, category) profiles.

    Age 3 speaks throughout the task, age 4 mostly early, age 5 at the
    edges; problem-related speech is made somewhat denser than unrelated
    so the two strata are distinguishable."""
    shapes = {3: "uniform", 4: "front-loaded", 5: "bimodal-edges"}
    hazards = {"problem": 0.030, "unrelated": 0.020}
    bursts = {"problem": 4.0, "unrelated": 3.0}
    return {
        (age, cat): BurstProfile(hazards[cat], bursts[cat], shapes[age])
        for age in AGES
        for cat in CATEGORIES
    }


@dataclass(frozen=True)
class CohortConfig:
    n_children: int = 12
    seed: int = 7
    profiles: dict[tuple[int, str], BurstProfile] = field(default_factory=default_profiles)

    def __post_init__(self):
        if self.n_children < 4:
            raise ConfigError("n_children must be >= 4 (clustering needs >= 4 series)")
        missing = [k for k in ((a, c) for a in AGES for c in CATEGORIES) if k not in self.profiles]
        if missing:
            raise ConfigError(f"profiles missing for strata {missing}")


def generate_child(
    profile: BurstProfile,
    rng: np.random.Generator,
    child_id: str = "c000",
    age: int = 3,
    category: str = "problem",
) -> UtteranceSeries:
    """One seeded series: silent at second 0, chain transitions afterwards."""
    w = time_weight_profile(profile.time_weight)
    onset = np.clip(profile.onset_hazard * w, 0.0, 1.0)
    leave = 1.0 / profile.mean_burst_s
    u = rng.random(TASK_SECONDS)
    values = markov_fill(onset, leave, u)
    return UtteranceSeries(child_id, age, category, values)


def child_rng(seed: int, child_index: int, age: int, category: str) -> np.random.Generator:
    """Independent substream for one (child, age, category) cell."""
    return np.random.default_rng([seed, child_index, age, CATEGORIES.index(category)])


def generate_cohort(cfg: CohortConfig) -> Dataset:
    """n_children x 3 ages x 2 categories; deterministic for a fixed seed."""
    ds = Dataset()
    for i in range(cfg.n_children):
        cid = f"c{i:03d}"
        for age in AGES:
            for cat in CATEGORIES:
                rng = child_rng(cfg.seed, i, age, cat)
                ds.add(generate_child(cfg.profiles[(age, cat)], rng, cid, age, cat))
    return ds


# ---------------------------------------------------------------------------
# Flat key = value config file for cohorts.
#
#   n_children = 12
#   seed = 7
#   age5.problem.onset_hazard = 0.03
#   age5.problem.mean_burst_s = 4
#   age5.problem.time_weight = bimodal-edges
# ---------------------------------------------------------------------------


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if not key or not val:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def cohort_config_from_text(text: str) -> CohortConfig:
    kv = parse_kv_text(text)
    n_children = int(kv.pop("n_children", "12"))
    seed = int(kv.pop("seed", "7"))
    profiles = dict(default_profiles())
    pending: dict[tuple[int, str], dict[str, str]] = {}
    for key, val in kv.items():
        parts = key.split(".")
        if len(parts) != 3 or not parts[0].startswith("age"):
            raise ConfigError(f"unknown config key {key!r}")
        try:
            age = int(parts[0][3:])
        except ValueError:
            raise ConfigError(f"bad age in key {key!r}") from None
        cat, attr = parts[1], parts[2]
        if age not in AGES or cat not in CATEGORIES:
            raise ConfigError(f"unknown stratum in key {key!r}")
        if attr not in ("onset_hazard", "mean_burst_s", "time_weight"):
            raise ConfigError(f"unknown profile field in key {key!r}")
        pending.setdefault((age, cat), {})[attr] = val
    for stratum, fields in pending.items():
        base = profiles[stratum]
        profiles[stratum] = BurstProfile(
            float(fields.get("onset_hazard", base.onset_hazard)),
            float(fields.get("mean_burst_s", base.mean_burst_s)),
            fields.get("time_weight", base.time_weight),
        )
    return CohortConfig(n_children=n_children, seed=seed, profiles=profiles)


def load_cohort_config(path) -> CohortConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return cohort_config_from_text(fh.read())
