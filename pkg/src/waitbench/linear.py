"""Polynomial and vector-autoregressive smoothing, plus an elastic net
estimator solved by cyclic coordinate descent.

The elastic net minimizes

    0.5 * ||y - X b||^2 + lam1 * ||b||_1 + lam2 * ||b||_2^2

with lam1 = lam * alpha_eff and lam2 = lam * (1 - alpha_eff) / 2,
alpha_eff = alpha - epsilon. The half on the residual term fixes the
conventions: alpha=0 solves (X'X + 2*lam2*I) b = X'y and alpha=1 on an
orthonormal design soft-thresholds the least-squares coefficients by lam1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accel import cd_solve
from .data import BinnedSeries
from .errors import ConfigError, DimensionMismatch, TooFewSamples


def _as_counts(series) -> np.ndarray:
    if isinstance(series, BinnedSeries):
        return series.counts.astype(np.float64)
    return np.asarray(series, dtype=np.float64)


def ols_smooth(series, degree: int = 3) -> np.ndarray:
    """Fitted values of a least-squares polynomial-in-time fit.

    Time is scaled to [0,1] for conditioning. A numerically rank-deficient
    design falls back to successively smaller degrees."""
    y = _as_counts(series)
    n = y.shape[0]
    if degree < 0 or degree + 1 > n:
        raise TooFewSamples(f"degree {degree} needs at least {degree + 1} bins, have {n}")
    t = np.arange(n, dtype=np.float64) / max(n - 1, 1)
    for d in range(degree, -1, -1):
        V = np.vander(t, d + 1, increasing=True)
        coef, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
        if rank == d + 1:
            return V @ coef
    return np.full(n, y.mean())


def var_smooth(group: np.ndarray, p: int = 1) -> "tuple[np.ndarray, VarModel]":
    """One-step fitted values of a VAR(p) least-squares fit.

    group is (n_bins, k); rows before t = p are returned unchanged. A
    rank-deficient design is ridge-stabilized with 1e-8."""
    Y = np.asarray(group, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, k = Y.shape
    if p < 1:
        raise ConfigError(f"VAR order must be >= 1, got {p}")
    if n <= p:
        raise TooFewSamples(f"need more than {p} observations, got {n}")
    Z = np.ones((n - p, 1 + p * k))
    for lag in range(1, p + 1):
        Z[:, 1 + (lag - 1) * k : 1 + lag * k] = Y[p - lag : n - lag]
    target = Y[p:]
    B, _, rank, _ = np.linalg.lstsq(Z, target, rcond=None)
    if rank < Z.shape[1]:
        G = Z.T @ Z + 1e-8 * np.eye(Z.shape[1])
        B = np.linalg.solve(G, Z.T @ target)
    fitted = Y.copy()
    fitted[p:] = Z @ B
    coef_mats = tuple(
        B[1 + (lag - 1) * k : 1 + lag * k].T.copy() for lag in range(1, p + 1)
    )
    return fitted, VarModel(p, coef_mats, B[0].copy())


@dataclass(frozen=True)
class VarModel:
    order: int
    coef: tuple[np.ndarray, ...]  # per lag, (k, k)
    intercept: np.ndarray


def soft_threshold(z: float, g: float) -> float:
    """sign(z) * max(|z| - g, 0)."""
    if g < 0:
        raise ConfigError(f"threshold must be >= 0, got {g}")
    az = abs(z) - g
    return float(np.sign(z) * az) if az > 0 else 0.0


@dataclass(frozen=True)
class EnetConfig:
    alpha: float = 0.5
    lam: float = 0.1
    epsilon: float = 0.0
    max_iter: int = 1000
    tol: float = 1e-8
    standardize: bool = True
    fit_intercept: bool = True

    def __post_init__(self):
        eff = self.alpha - self.epsilon
        if not 0.0 <= eff <= 1.0:
            raise ConfigError(f"alpha - epsilon = {eff} outside [0,1]")
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")

    @property
    def alpha_eff(self) -> float:
        return self.alpha - self.epsilon

    @property
    def lam1(self) -> float:
        return self.lam * self.alpha_eff

    @property
    def lam2(self) -> float:
        return self.lam * (1.0 - self.alpha_eff) / 2.0


@dataclass(frozen=True)
class EnetModel:
    intercept: float
    coef: np.ndarray  # on the original column scale
    column_means: np.ndarray
    column_sds: np.ndarray
    converged: bool
    n_sweeps: int
    objective_path: np.ndarray  # value after each sweep, standardized problem

    def dump(self) -> str:
        lines = [
            f"intercept {self.intercept!r}",
            f"converged {self.converged}",
            f"sweeps {self.n_sweeps}",
        ]
        for j, b in enumerate(self.coef):
            lines.append(f"beta[{j}] {float(b)!r}")
        return "\n".join(lines) + "\n"


def enet_fit(X: np.ndarray, y: np.ndarray, cfg: EnetConfig = EnetConfig()) -> EnetModel:
    """Cyclic coordinate descent on the penalized objective.

    When cfg.standardize, columns are centered and scaled to unit sd
    internally (constant columns are dropped from the updates and get a
    zero coefficient); reported coefficients are mapped back to the
    original scale. Exact per-coordinate minimization makes the recorded
    objective non-increasing sweep to sweep."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} vs y {y.shape}")
    n, p = X.shape
    if n < 2 or p < 1:
        raise TooFewSamples(f"need n >= 2 and p >= 1, got {X.shape}")
    means = X.mean(axis=0) if cfg.fit_intercept or cfg.standardize else np.zeros(p)
    if cfg.standardize:
        sds = X.std(axis=0)
        sds = np.where(sds > 0, sds, 1.0)
    else:
        sds = np.ones(p)
    Xw = np.ascontiguousarray((X - means) / sds)
    y_off = float(y.mean()) if cfg.fit_intercept else 0.0
    yw = np.ascontiguousarray(y - y_off)
    col_sq = np.einsum("ij,ij->j", Xw, Xw)
    # Zero-variance working columns cannot reduce the residual, so their
    # optimal coefficient is exactly 0; drop them from the sweeps.
    active = np.flatnonzero(col_sq > 0).astype(np.int64)
    beta = np.zeros(p)
    beta, obj, n_sweeps, converged = cd_solve(
        Xw, yw, beta, cfg.lam1, cfg.lam2, col_sq, active, cfg.max_iter, cfg.tol
    )
    coef = beta / sds
    intercept = y_off - float(coef @ means)
    return EnetModel(intercept, coef, means, sds, bool(converged), int(n_sweeps), np.asarray(obj))


def enet_objective(X, y, coef, intercept, lam1, lam2) -> float:
    """0.5*RSS + lam1*l1 + lam2*l2 of a coefficient vector on given data."""
    r = y - (intercept + X @ coef)
    return float(0.5 * (r @ r) + lam1 * np.abs(coef).sum() + lam2 * (coef @ coef))


def enet_predict(model: EnetModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.coef.shape[0]:
        raise DimensionMismatch(
            f"model has {model.coef.shape[0]} columns, input has {X.shape[1]}"
        )
    return model.intercept + X @ model.coef
