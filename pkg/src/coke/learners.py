"""CATE models and first-stage learners (regression adjustment, separate regression)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInput
from .kernel import KernelSpec
from .krr import KrrModel, LabeledDataset, fit, fit_arm, fit_grid


@dataclass(frozen=True)
class RegularizerTriple:
    """Regularizers (lam00, lam01, lam1) for the two nuisance fits and the second stage."""

    lam00: float
    lam01: float
    lam1: float

    def __post_init__(self):
        for name in ("lam00", "lam01", "lam1"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidInput(f"{name} must be positive, got {v}")


class CateModel:
    """Base class for treatment-effect predictors."""

    def predict(self, Z) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, Z) -> np.ndarray:
        return self.predict(Z)


@dataclass(frozen=True, eq=False)
class SingleCate(CateModel):
    """A CATE fitted directly by one KRR (the RA-learner output)."""

    h: KrrModel
    lam: RegularizerTriple | None = None

    def predict(self, Z):
        return self.h.predict(Z)


@dataclass(frozen=True, eq=False)
class DifferenceCate(CateModel):
    """h = f1 - f0 for two outcome regressions."""

    f1: KrrModel
    f0: KrrModel

    def predict(self, Z):
        return self.f1.predict(Z) - self.f0.predict(Z)


@dataclass(frozen=True, eq=False)
class AverageCate(CateModel):
    """Equal-weight average of member models (cross-fitting output)."""

    members: tuple

    def __post_init__(self):
        if len(self.members) == 0:
            raise InvalidInput("average of zero models")
        object.__setattr__(self, "members", tuple(self.members))

    def predict(self, Z):
        preds = [m.predict(Z) for m in self.members]
        return sum(preds[1:], preds[0]) / len(preds)


@dataclass(frozen=True, eq=False)
class FunctionModel(CateModel):
    """Wraps a vectorised callable ``fn(Z) -> values``; used to inject known functions."""

    fn: Callable[[np.ndarray], np.ndarray]

    def predict(self, Z):
        Z = np.asarray(Z, dtype=float)
        return np.asarray(self.fn(Z), dtype=float).reshape(len(Z))


def pseudo_outcomes(D: LabeledDataset, f0, f1) -> np.ndarray:
    """Regression-adjusted pseudo-outcomes.

    ``m_i = y_i - f0(z_i)`` for treated rows and ``f1(z_i) - y_i`` for controls.
    ``f0``/``f1`` can be anything with a ``predict`` method.
    """
    p0 = np.asarray(f0.predict(D.Z), dtype=float)
    p1 = np.asarray(f1.predict(D.Z), dtype=float)
    if p0.shape != D.y.shape or p1.shape != D.y.shape:
        raise InvalidInput("nuisance predictions do not match the dataset length")
    return np.where(D.a == 1, D.y - p0, p1 - D.y)


def fit_nuisances(spec: KernelSpec, D: LabeledDataset, lam00: float, lam01: float):
    """Arm-wise outcome regressions ``(f0, f1)`` on ``D``."""
    return fit_arm(spec, D, 0, lam00), fit_arm(spec, D, 1, lam01)


def ra_learner(
    spec: KernelSpec,
    D1: LabeledDataset,
    lam: RegularizerTriple,
    nuisances=None,
) -> SingleCate:
    """Regression-adjustment learner.

    Both stages use the same data ``D1``. Pass ``nuisances=(f0, f1)`` to
    skip the first stage and use given outcome models instead.
    """
    f0, f1 = nuisances if nuisances is not None else fit_nuisances(spec, D1, lam.lam00, lam.lam01)
    m = pseudo_outcomes(D1, f0, f1)
    return SingleCate(fit(spec, D1.Z, m, lam.lam1), lam)


def ra_learner_grid(
    spec: KernelSpec,
    D1: LabeledDataset,
    lam00: float,
    lam01: float,
    lam1_grid: Sequence[float],
    nuisances=None,
) -> list[SingleCate]:
    """RA learner over a grid of second-stage regularizers.

    The nuisance fits and the pseudo-outcomes are computed once and shared
    by every candidate.
    """
    f0, f1 = nuisances if nuisances is not None else fit_nuisances(spec, D1, lam00, lam01)
    m = pseudo_outcomes(D1, f0, f1)
    models = fit_grid(spec, D1.Z, m, lam1_grid)
    return [SingleCate(h, RegularizerTriple(lam00, lam01, h.lam)) for h in models]


def separate_regression(spec: KernelSpec, D: LabeledDataset, lam0: float, lam1: float) -> DifferenceCate:
    """Plug-in estimate f1 - f0 from two arm-wise fits."""
    f0, f1 = fit_nuisances(spec, D, lam0, lam1)
    return DifferenceCate(f1, f0)
