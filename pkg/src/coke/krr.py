"""Kernel ridge regression.

All fits solve the penalised least-squares program

    min_f  (1/N) sum_i (r_i - f(z_i))^2 + lam * ||f||_F^2

whose minimiser is f(u) = sum_i alpha_i K(z_i, u) with
(K + N lam I) alpha = r. There is no intercept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import EmptyArm, InvalidInput, NumericalFailure
from .kernel import KernelSpec, gram

# rows of new covariates handled per Gram block in predict()
_PREDICT_BLOCK = 4096


@dataclass(frozen=True)
class LabeledDataset:
    """Source observations ``(Z, a, y)``."""

    Z: np.ndarray
    a: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        a = np.asarray(self.a)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if Z.ndim != 2 or a.ndim != 1:
            raise InvalidInput("Z must be n x p and a must be a vector")
        if not (len(Z) == len(a) == len(y)):
            raise InvalidInput(f"length mismatch: Z {len(Z)}, a {len(a)}, y {len(y)}")
        if not np.all((a == 0) | (a == 1)):
            raise InvalidInput("treatment indicators must be 0 or 1")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
            raise InvalidInput("non-finite values in dataset")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "a", a.astype(np.int8))
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.y)

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.Z[idx], self.a[idx], self.y[idx])

    def arm(self, a: int) -> "LabeledDataset":
        return self.subset(self.a == a)


@dataclass(frozen=True)
class UnlabeledDataset:
    """Target covariates only."""

    Z: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.ndim != 2 or len(Z) < 1:
            raise InvalidInput("target covariates must be a nonempty n_T x p matrix")
        if not np.all(np.isfinite(Z)):
            raise InvalidInput("non-finite target covariates")
        object.__setattr__(self, "Z", Z)

    def __len__(self):
        return len(self.Z)

    @property
    def p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class KrrModel:
    """f(u) = sum_i dual_weights[i] * K(support[i], u)."""

    support: np.ndarray
    dual_weights: np.ndarray
    spec: KernelSpec
    lam: float | None = None

    def predict(self, Z_new) -> np.ndarray:
        return predict(self, Z_new)

    def rkhs_norm_sq(self) -> float:
        alpha = self.dual_weights
        return float(alpha @ gram(self.spec, self.support) @ alpha)


def _check_inputs(Z, r, lam):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    r = np.asarray(r, dtype=float).reshape(-1)
    if len(Z) < 1:
        raise InvalidInput("cannot fit on zero observations")
    if len(Z) != len(r):
        raise InvalidInput(f"length mismatch: Z {len(Z)}, r {len(r)}")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(r))):
        raise InvalidInput("non-finite inputs to fit")
    lam = np.asarray(lam, dtype=float)
    if not (np.all(np.isfinite(lam)) and np.all(lam > 0)):
        raise InvalidInput(f"regularizer must be positive, got {lam}")
    return Z, r


def solve_dual(K: np.ndarray, r: np.ndarray, ridge: float) -> np.ndarray:
    """Solve ``(K + ridge I) alpha = r`` by Cholesky, adding jitter on failure.

    Jitter starts at 1e-12 * trace(K)/N and grows tenfold up to
    1e-6 * trace(K)/N before giving up.
    """
    N = len(K)
    A = K + ridge * np.eye(N)
    try:
        return linalg.cho_solve(linalg.cho_factor(A, lower=True), r)
    except linalg.LinAlgError:
        pass
    scale = max(np.trace(K) / N, np.finfo(float).tiny)
    for exponent in range(-12, -5):
        jitter = 10.0**exponent * scale
        try:
            c = linalg.cho_factor(A + jitter * np.eye(N), lower=True)
        except linalg.LinAlgError:
            continue
        return linalg.cho_solve(c, r)
    raise NumericalFailure(f"Cholesky failed for N={N} even with jitter {jitter:.3g}")


def fit(spec: KernelSpec, Z, r, lam: float) -> KrrModel:
    """Full-sample KRR fit with regularizer ``lam``."""
    Z, r = _check_inputs(Z, r, lam)
    alpha = solve_dual(gram(spec, Z), r, len(Z) * lam)
    return KrrModel(Z, alpha, spec, float(lam))


def fit_arm(spec: KernelSpec, D: LabeledDataset, arm: int, lam: float) -> KrrModel:
    """KRR on the rows of ``D`` with ``a == arm``, using the indicator objective.

    The loss is averaged over all ``len(D)`` rows with the other arm's terms
    switched off, so the dual system is ``(K_arm + len(D) lam I) alpha = y_arm``.
    """
    mask = D.a == arm
    if not mask.any():
        raise EmptyArm(f"no observations with a={arm}")
    Z, y = _check_inputs(D.Z[mask], D.y[mask], lam)
    alpha = solve_dual(gram(spec, Z), y, len(D) * lam)
    return KrrModel(Z, alpha, spec, float(lam))


def fit_grid(spec: KernelSpec, Z, r, lams: Sequence[float], n_scale: int | None = None) -> list[KrrModel]:
    """Fit one model per regularizer, sharing one eigendecomposition of K.

    ``n_scale`` overrides the N in ``N * lam`` (used for arm-indicator fits).
    """
    lams = np.asarray(list(lams), dtype=float)
    if lams.size == 0:
        raise InvalidInput("empty regularizer grid")
    Z, r = _check_inputs(Z, r, lams)
    N = len(Z) if n_scale is None else n_scale
    evals, Q = linalg.eigh(gram(spec, Z))
    evals = np.clip(evals, 0.0, None)
    Qr = Q.T @ r
    return [KrrModel(Z, Q @ (Qr / (evals + N * lam)), spec, float(lam)) for lam in lams]


def fit_arm_grid(spec: KernelSpec, D: LabeledDataset, arm: int, lams: Sequence[float]) -> list[KrrModel]:
    """``fit_arm`` over a whole grid of regularizers."""
    mask = D.a == arm
    if not mask.any():
        raise EmptyArm(f"no observations with a={arm}")
    return fit_grid(spec, D.Z[mask], D.y[mask], lams, n_scale=len(D))


def predict(model: KrrModel, Z_new) -> np.ndarray:
    """Evaluate the fitted function at the rows of ``Z_new``."""
    Z_new = np.asarray(Z_new, dtype=float)
    if Z_new.ndim == 1:
        Z_new = Z_new[:, None] if model.support.shape[1] == 1 else Z_new[None, :]
    if Z_new.shape[1] != model.support.shape[1]:
        raise InvalidInput(
            f"covariate dimension mismatch: model has {model.support.shape[1]}, got {Z_new.shape[1]}"
        )
    out = np.empty(len(Z_new))
    for start in range(0, len(Z_new), _PREDICT_BLOCK):
        block = Z_new[start : start + _PREDICT_BLOCK]
        out[start : start + len(block)] = gram(model.spec, block, model.support) @ model.dual_weights
    return out


def objective(model: KrrModel, Z, r, lam: float) -> float:
    """Penalised least-squares objective of ``model`` on ``(Z, r)``."""
    resid = np.asarray(r, dtype=float) - predict(model, Z)
    return float(np.mean(resid**2) + lam * model.rkhs_norm_sq())
