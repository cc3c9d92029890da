"""End-to-end estimator: split, candidate generation, selection, cross-fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyArm, InvalidInput
from .kernel import KernelSpec, sup_bound
from .krr import LabeledDataset, UnlabeledDataset
from .learners import AverageCate, CateModel, SingleCate, fit_nuisances, ra_learner_grid
from .rng import split_indices
from .selection import SelectionReport, build_imputation, experiment_lambda, select, theory_lambda

GRID_MODES = ("theory", "experiment", "explicit")


def build_grid(mode: str, n: int, xi: float | None = None, values: Sequence[float] | None = None,
               q: int | None = None) -> list[float]:
    """Second-stage regularizer grid.

    ``theory``: {2^k xi log(n)/n : k = 0..q} with q = ceil(2 log n) unless given.
    ``experiment``: {2^k / (5n) : k = 0..ceil(log2(5n))}.
    ``explicit``: ``values`` as given (strictly increasing, positive).
    """
    if mode == "explicit":
        if not values:
            raise InvalidInput("explicit grid needs values")
        vals = [float(v) for v in values]
        if any(not (math.isfinite(v) and v > 0) for v in vals):
            raise InvalidInput("grid values must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidInput("grid values must be strictly increasing")
        return vals
    if n < 2:
        raise InvalidInput(f"grid needs n >= 2, got {n}")
    if mode == "theory":
        if xi is None:
            raise InvalidInput("theory grid needs the kernel bound xi")
        base = xi * math.log(n) / n
        q = math.ceil(2 * math.log(n)) if q is None else q
        return [base * 2**k for k in range(q + 1)]
    if mode == "experiment":
        top = math.ceil(math.log2(5 * n)) if q is None else q
        return [2**k / (5 * n) for k in range(top + 1)]
    raise InvalidInput(f"unknown grid mode {mode!r}")


@dataclass(frozen=True)
class CokeConfig:
    """Tuning for the main estimator.

    ``lam_nuisance`` and ``lam_imputation`` default by grid mode:
    xi log n / n for ``theory`` (and ``explicit``), 1/(5n) for ``experiment``.
    """

    grid_mode: str = "theory"
    grid: tuple[float, ...] | None = None
    q: int | None = None
    lam_nuisance: float | None = None
    lam_imputation: float | None = None
    split_seed: int = 0
    crossfit: bool = False

    def __post_init__(self):
        if self.grid_mode not in GRID_MODES:
            raise InvalidInput(f"unknown grid mode {self.grid_mode!r}")
        if self.grid_mode == "explicit":
            build_grid("explicit", 2, values=self.grid)
        for name in ("lam_nuisance", "lam_imputation"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise InvalidInput(f"{name} must be positive, got {v}")

    def _default_lambda(self, spec: KernelSpec, n: int) -> float:
        if self.grid_mode == "experiment":
            return experiment_lambda(n)
        return theory_lambda(spec, n)

    def nuisance_lambda(self, spec: KernelSpec, n: int) -> float:
        return self.lam_nuisance if self.lam_nuisance is not None else self._default_lambda(spec, n)

    def imputation_lambda(self, spec: KernelSpec, n: int) -> float:
        return self.lam_imputation if self.lam_imputation is not None else self._default_lambda(spec, n)

    def lambda_grid(self, spec: KernelSpec, n: int) -> list[float]:
        xi = sup_bound(spec) if self.grid_mode == "theory" else None
        return build_grid(self.grid_mode, n, xi=xi, values=self.grid, q=self.q)


@dataclass(frozen=True, eq=False)
class CokeFit:
    """Everything produced by one run, kept for inspection."""

    model: SingleCate
    report: SelectionReport
    candidates: list = field(repr=False)
    imputation: CateModel = field(repr=False)
    nuisances: tuple = field(repr=False)
    split: tuple = field(repr=False)
    grid: list = field(repr=False)


def _check_dims(D: LabeledDataset, D_T: UnlabeledDataset):
    if D.p != D_T.p:
        raise InvalidInput(f"source has {D.p} covariates, target has {D_T.p}")


def run_detailed(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset, cfg: CokeConfig,
                 split: tuple | None = None) -> CokeFit:
    """One pass of the estimator on the split ``(train, holdout)``.

    ``split`` defaults to the seeded half-split from ``cfg.split_seed``.
    All regularizer defaults use the full source size ``len(D)``.
    """
    _check_dims(D, D_T)
    n = len(D)
    idx1, idx2 = split_indices(n, cfg.split_seed) if split is None else split
    D1, D2 = D.subset(idx1), D.subset(idx2)
    lam0 = cfg.nuisance_lambda(spec, n)
    grid = cfg.lambda_grid(spec, n)

    try:
        nuisances = fit_nuisances(spec, D1, lam0, lam0)
    except EmptyArm as exc:
        raise EmptyArm(str(exc), split="D1") from None
    candidates = ra_learner_grid(spec, D1, lam0, lam0, grid, nuisances=nuisances)

    lam_t = cfg.imputation_lambda(spec, n)
    try:
        imputation = build_imputation(spec, D2, lam_t, lam_t)
    except EmptyArm as exc:
        raise EmptyArm(str(exc), split="D2") from None
    report = select(candidates, imputation, D_T)
    return CokeFit(candidates[report.chosen_index], report, candidates, imputation, nuisances,
                   (idx1, idx2), grid)


def run(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset, cfg: CokeConfig,
        split: tuple | None = None) -> tuple[SingleCate, SelectionReport]:
    """Fit the estimator; returns the selected model and the selection report."""
    res = run_detailed(spec, D, D_T, cfg, split)
    return res.model, res.report


def run_crossfit_detailed(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset, cfg: CokeConfig,
                          split: tuple | None = None) -> tuple[AverageCate, CokeFit, CokeFit]:
    idx1, idx2 = split_indices(len(D), cfg.split_seed) if split is None else split
    first = run_detailed(spec, D, D_T, cfg, (idx1, idx2))
    second = run_detailed(spec, D, D_T, cfg, (idx2, idx1))
    return AverageCate((first.model, second.model)), first, second


def run_crossfit(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset, cfg: CokeConfig,
                 split: tuple | None = None) -> AverageCate:
    """Two-fold cross-fitting: run on both orderings of the split and average."""
    return run_crossfit_detailed(spec, D, D_T, cfg, split)[0]


def fit_coke(spec: KernelSpec, D: LabeledDataset, D_T: UnlabeledDataset, cfg: CokeConfig) -> CateModel:
    """``run`` or ``run_crossfit`` depending on ``cfg.crossfit``."""
    if cfg.crossfit:
        return run_crossfit(spec, D, D_T, cfg)
    return run(spec, D, D_T, cfg)[0]
