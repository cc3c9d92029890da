"""Overlap diagnostics and score-based validation for real data."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .benchmarks import PROPENSITY_CLIP, DensityRatioModel, LogisticModel, dr_pseudo_outcome, fit_density_ratio, logistic_fit
from .errors import EmptyArm, InvalidInput
from .krr import LabeledDataset


def density_ratio_diag(Z_S, Z_T) -> tuple[DensityRatioModel, np.ndarray, np.ndarray]:
    """Fit the target/source density ratio and return log10 ratios on both samples."""
    model = fit_density_ratio(Z_S, Z_T)
    return model, model.log10_ratio(Z_S), model.log10_ratio(Z_T)


def effective_sample_size(weights) -> float:
    """Kish effective sample size (sum w)^2 / sum w^2."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidInput("weights must be a nonempty vector of positive numbers")
    w = w / w.max()
    return float(w.sum() ** 2 / np.sum(w * w))


@dataclass(frozen=True, eq=False)
class LinearRidge:
    """Linear regression with intercept and a small ridge on the slopes."""

    coef: np.ndarray

    def predict(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return self.coef[0] + Z @ self.coef[1:]


def fit_linear_ridge(Z, y, ridge: float = 1e-6) -> LinearRidge:
    Z = np.asarray(Z, dtype=float)
    X = np.column_stack([np.ones(len(Z)), Z])
    P = ridge * np.eye(X.shape[1])
    P[0, 0] = 0.0
    return LinearRidge(np.linalg.solve(X.T @ X + P, X.T @ np.asarray(y, dtype=float)))


def fit_glr_nuisances(D: LabeledDataset):
    """Logistic propensity and arm-wise ridge-linear outcome models on labeled target data."""
    for arm in (0, 1):
        if not np.any(D.a == arm):
            raise EmptyArm(f"no observations with a={arm}", split="labeled target")
    pi = logistic_fit(D.Z, D.a)
    f0 = fit_linear_ridge(D.Z[D.a == 0], D.y[D.a == 0])
    f1 = fit_linear_ridge(D.Z[D.a == 1], D.y[D.a == 1])
    return pi, f0, f1


def efficient_score(D: LabeledDataset, pi: LogisticModel, f0, f1, clip: float = PROPENSITY_CLIP) -> np.ndarray:
    """Influence-function scores used as noisy labels of the CATE on labeled target rows."""
    return dr_pseudo_outcome(D, pi, f0, f1, clip)


def _pair(x, y):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(x) != len(y) or len(x) < 2:
        raise InvalidInput("correlation needs two vectors of equal length >= 2")
    return x, y


def pearson(x, y) -> float:
    """Product-moment correlation; nan (with a warning) if either input is constant."""
    x, y = _pair(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        warnings.warn("correlation undefined for a constant input", RuntimeWarning, stacklevel=2)
        return float("nan")
    return float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x, y = _pair(x, y)
    return pearson(rankdata(x), rankdata(y))
