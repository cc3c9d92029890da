"""Comparison estimators: separate regression with pseudo-label selection,
the DR-learner, and the ACW estimator, plus their logistic nuisances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, log_expit

from .errors import EmptyArm, InvalidInput
from .kernel import KernelSpec
from .krr import KrrModel, LabeledDataset, UnlabeledDataset, fit_arm, fit_arm_grid, fit_grid
from .learners import AverageCate, CateModel, DifferenceCate, SingleCate
from .rng import halves, stream
from .selection import argmin_with_ties, experiment_lambda

PROPENSITY_CLIP = 1e-3
MIN_SOURCE_PROB = 1e-6

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class LogisticModel:
    """P(label = 1 | z) = expit(coef[0] + z @ coef[1:])."""

    coef: np.ndarray
    converged: bool = True
    n_iter: int = 0
    separated: bool = False

    def linear_predictor(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.shape[1] != len(self.coef) - 1:
            raise InvalidInput(f"expected {len(self.coef) - 1} covariates, got {Z.shape[1]}")
        return self.coef[0] + Z @ self.coef[1:]

    def predict_prob(self, Z) -> np.ndarray:
        return np.clip(expit(self.linear_predictor(Z)), _EPS / 2, 1 - _EPS / 2)


def _loglik(X, y, beta, penalty):
    eta = X @ beta
    return float(np.sum(y * log_expit(eta) + (1 - y) * log_expit(-eta)) - 0.5 * penalty * beta @ beta)


def _newton(X, y, penalty, max_iter, tol):
    """Damped Newton ascent on the (optionally ridge-penalised) log-likelihood.

    Returns ``(beta, converged, n_steps)``.
    """
    p = X.shape[1]
    beta = np.zeros(p)
    ll = _loglik(X, y, beta, penalty)
    for step_no in range(max_iter + 1):
        mu = expit(X @ beta)
        grad = X.T @ (y - mu) - penalty * beta
        if np.max(np.abs(grad)) <= tol:
            return beta, True, step_no
        if step_no == max_iter or np.linalg.norm(beta) > 1e4:
            break
        w = mu * (1 - mu)
        H = X.T @ (w[:, None] * X) + (penalty + 1e-6) * np.eye(p)
        step = np.linalg.solve(H, grad)
        t = 1.0
        # slack absorbs rounding in the log-likelihood sum near the optimum
        slack = 1e-12 * max(1.0, abs(ll))
        for _ in range(40):
            cand = beta + t * step
            ll_new = _loglik(X, y, cand, penalty)
            if ll_new >= ll - slack:
                break
            t *= 0.5
        else:
            # no ascent left at machine precision
            break
        beta, ll = cand, ll_new
    return beta, False, step_no


def logistic_fit(Z, labels, max_iter: int = 100, tol: float = 1e-8) -> LogisticModel:
    """Maximum-likelihood logistic regression with intercept by damped Newton steps.

    Convergence means the log-likelihood gradient has sup-norm at most
    ``tol``. If the classes are perfectly separated (or coefficients blow
    past 1e4) the returned model is the solution with a 1e-6 ridge penalty
    and ``separated=True``.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    y = np.asarray(labels, dtype=float).reshape(-1)
    if len(Z) != len(y):
        raise InvalidInput("covariates and labels differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise InvalidInput("labels must be 0/1")
    if y.min() == y.max():
        raise InvalidInput("logistic regression needs both classes present")
    X = np.column_stack([np.ones(len(Z)), Z])

    beta, converged, it = _newton(X, y, 0.0, max_iter, tol)
    margins = (X @ beta) * (2 * y - 1)
    if np.linalg.norm(beta) > 1e4 or np.all(margins > 0):
        beta, converged, it = _newton(X, y, 1e-6, max_iter, tol)
        return LogisticModel(beta, converged, it, separated=True)
    return LogisticModel(beta, converged, it)


@dataclass(frozen=True, eq=False)
class DensityRatioModel:
    """omega(z) = n_S P(S=1|z) / (n_T P(S=0|z)) from a source-vs-target classifier."""

    logistic: LogisticModel
    n_S: int
    n_T: int
    min_source_prob: float = MIN_SOURCE_PROB

    def log_ratio(self, Z) -> np.ndarray:
        eta = self.logistic.linear_predictor(Z)
        log_p1 = log_expit(eta)
        log_p0 = np.maximum(log_expit(-eta), math.log(self.min_source_prob))
        return math.log(self.n_S / self.n_T) + log_p1 - log_p0

    def ratio(self, Z) -> np.ndarray:
        return np.exp(self.log_ratio(Z))

    def log10_ratio(self, Z) -> np.ndarray:
        return self.log_ratio(Z) / math.log(10.0)


def fit_density_ratio(Z_S, Z_T) -> DensityRatioModel:
    """Classifier-based density ratio target/source (S=0 source rows, S=1 target rows)."""
    Z_S = np.asarray(Z_S, dtype=float)
    Z_T = np.asarray(Z_T, dtype=float)
    if len(Z_S) == 0 or len(Z_T) == 0:
        raise InvalidInput("density ratio needs nonempty source and target samples")
    labels = np.concatenate([np.zeros(len(Z_S)), np.ones(len(Z_T))])
    return DensityRatioModel(logistic_fit(np.vstack([Z_S, Z_T]), labels), len(Z_S), len(Z_T))


def dr_pseudo_outcome(D: LabeledDataset, pi, f0, f1, clip: float | None = PROPENSITY_CLIP) -> np.ndarray:
    """Doubly-robust pseudo-outcome
    (a - pi)/(pi (1 - pi)) * (y - f_a(z)) + f1(z) - f0(z).

    ``pi`` is a fitted propensity model (``predict_prob``) or an array of
    propensities; ``clip`` bounds pi to [clip, 1 - clip].
    """
    prop = pi.predict_prob(D.Z) if hasattr(pi, "predict_prob") else np.broadcast_to(
        np.asarray(pi, dtype=float), D.y.shape)
    if clip is not None:
        prop = np.clip(prop, clip, 1 - clip)
    p0 = f0.predict(D.Z)
    p1 = f1.predict(D.Z)
    resid = D.y - np.where(D.a == 1, p1, p0)
    return (D.a - prop) / (prop * (1 - prop)) * resid + p1 - p0


def _holdout_arm(spec, D: LabeledDataset, arm: int, grid, rng) -> KrrModel:
    """Choose lam for ``fit_arm`` on a random half by validation error on the other half,
    then refit on all of ``D``."""
    tr, va = halves(len(D), rng)
    Dtr, Dva = D.subset(tr), D.subset(va)
    val = Dva.arm(arm)
    if len(val) == 0:
        raise EmptyArm(f"no observations with a={arm}", split="validation")
    models = fit_arm_grid(spec, Dtr, arm, grid)
    losses = np.array([np.mean((val.y - m.predict(val.Z)) ** 2) for m in models])
    return fit_arm(spec, D, arm, grid[argmin_with_ties(losses, grid)])


def _holdout_regression(spec, Z, r, grid, rng) -> KrrModel:
    """KRR fitted on a random half of (Z, r), regularizer picked on the other half."""
    tr, va = halves(len(r), rng)
    models = fit_grid(spec, Z[tr], r[tr], grid)
    losses = np.array([np.mean((r[va] - m.predict(Z[va])) ** 2) for m in models])
    return models[argmin_with_ties(losses, grid)]


def _outcome_nuisances(spec, D1, grid, rng):
    pi = logistic_fit(D1.Z, D1.a)
    f0 = _holdout_arm(spec, D1, 0, grid, rng)
    f1 = _holdout_arm(spec, D1, 1, grid, rng)
    return pi, f0, f1


def benchmark_grid(n: int) -> list[float]:
    """{2^k/(5n) : k = 0..ceil(log2(5n))}, shared with the main estimator."""
    return [2**k / (5 * n) for k in range(math.ceil(math.log2(5 * n)) + 1)]


def _legs(D: LabeledDataset, seed: int, crossfit: bool):
    idx1, idx2 = halves(len(D), stream(seed, 0))
    legs = [(D.subset(idx1), D.subset(idx2))]
    if crossfit:
        legs.append((D.subset(idx2), D.subset(idx1)))
    return legs


def _combine(models: list[CateModel]) -> CateModel:
    return models[0] if len(models) == 1 else AverageCate(tuple(models))


def dr_cate(spec: KernelSpec, D: LabeledDataset, grid: Sequence[float] | None = None, seed: int = 0,
            crossfit: bool = False, clip: float | None = PROPENSITY_CLIP) -> CateModel:
    """DR-learner with KRR nuisances and a hold-out tuned second stage."""
    grid = list(grid) if grid is not None else benchmark_grid(len(D))
    out = []
    for k, (D1, D1p) in enumerate(_legs(D, seed, crossfit)):
        rng = stream(seed, 1, k)
        pi, f0, f1 = _outcome_nuisances(spec, D1, grid, rng)
        phi = dr_pseudo_outcome(D1p, pi, f0, f1, clip)
        out.append(SingleCate(_holdout_regression(spec, D1p.Z, phi, grid, rng)))
    return _combine(out)


def acw_pseudo_outcomes(D_src: LabeledDataset, Z_T, pi, f0, f1, omega,
                        clip: float | None = PROPENSITY_CLIP) -> tuple[np.ndarray, np.ndarray]:
    """ACW pseudo-outcomes for the source rows (S=0) and target rows (S=1).

    Source: (m + n_T)/m * omega(z) * (a - pi)/(pi (1 - pi)) * (y - f_a(z)),
    target: (m + n_T)/n_T * (f1(z) - f0(z)), where m = len(D_src).
    ``omega`` is a DensityRatioModel or an array of weights for ``D_src``.
    """
    m, n_T = len(D_src), len(Z_T)
    w = omega.ratio(D_src.Z) if hasattr(omega, "ratio") else np.asarray(omega, dtype=float)
    prop = pi.predict_prob(D_src.Z) if hasattr(pi, "predict_prob") else np.broadcast_to(
        np.asarray(pi, dtype=float), D_src.y.shape)
    if clip is not None:
        prop = np.clip(prop, clip, 1 - clip)
    resid = D_src.y - np.where(D_src.a == 1, f1.predict(D_src.Z), f0.predict(D_src.Z))
    src = (m + n_T) / m * w * (D_src.a - prop) / (prop * (1 - prop)) * resid
    tgt = (m + n_T) / n_T * (f1.predict(Z_T) - f0.predict(Z_T))
    return src, tgt


def acw_cate(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset, grid: Sequence[float] | None = None,
             seed: int = 0, crossfit: bool = False, clip: float | None = PROPENSITY_CLIP) -> CateModel:
    """Augmented calibration-weighting estimator of the target CATE."""
    if len(D_T) < 2:
        raise InvalidInput("ACW needs at least two target rows")
    grid = list(grid) if grid is not None else benchmark_grid(len(D))
    out = []
    for k, (D1, D1p) in enumerate(_legs(D, seed, crossfit)):
        rng = stream(seed, 2, k)
        pi, f0, f1 = _outcome_nuisances(spec, D1, grid, rng)
        omega = fit_density_ratio(D1.Z, D_T.Z)
        src, tgt = acw_pseudo_outcomes(D1p, D_T.Z, pi, f0, f1, omega, clip)
        s_tr, s_va = halves(len(D1p), rng)
        t_tr, t_va = halves(len(D_T), rng)
        Z_tr = np.vstack([D1p.Z[s_tr], D_T.Z[t_tr]])
        r_tr = np.concatenate([src[s_tr], tgt[t_tr]])
        Z_va = np.vstack([D1p.Z[s_va], D_T.Z[t_va]])
        r_va = np.concatenate([src[s_va], tgt[t_va]])
        models = fit_grid(spec, Z_tr, r_tr, grid)
        losses = np.array([np.mean((r_va - m.predict(Z_va)) ** 2) for m in models])
        out.append(SingleCate(models[argmin_with_ties(losses, grid)]))
    return _combine(out)


def pseudo_label_select(candidates: Sequence, imputation, Z_T, lams: Sequence[float] | None = None):
    """Index of the candidate closest (mean squared distance) to ``imputation`` on ``Z_T``."""
    labels = imputation.predict(Z_T)
    losses = np.array([np.mean((labels - c.predict(Z_T)) ** 2) for c in candidates])
    return argmin_with_ties(losses, lams), losses


def sr_pseudo_label(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset,
                    grid: Sequence[float] | None = None, lam_tilde: float | None = None,
                    seed: int = 0, crossfit: bool = False) -> CateModel:
    """Separate regression, each arm tuned by pseudo-labels on the target covariates."""
    n = len(D)
    grid = list(grid) if grid is not None else benchmark_grid(n)
    lam_tilde = experiment_lambda(n) if lam_tilde is None else lam_tilde
    out = []
    for D1, D1p in _legs(D, seed, crossfit):
        chosen = {}
        for arm in (0, 1):
            cands = fit_arm_grid(spec, D1, arm, grid)
            imp = fit_arm(spec, D1p, arm, lam_tilde)
            k, _ = pseudo_label_select(cands, imp, D_T.Z, grid)
            chosen[arm] = cands[k]
        out.append(DifferenceCate(chosen[1], chosen[0]))
    return _combine(out)
