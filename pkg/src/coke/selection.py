"""Model selection against imputed treatment effects on target covariates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .kernel import KernelSpec, sup_bound
from .krr import LabeledDataset, UnlabeledDataset, fit_arm
from .learners import CateModel, DifferenceCate, RegularizerTriple


@dataclass(frozen=True)
class SelectionReport:
    losses: np.ndarray
    chosen_index: int
    lambda_chosen: RegularizerTriple | None = None


def theory_lambda(spec: KernelSpec, n: int) -> float:
    """xi * log(n) / n, the default imputation and nuisance regularizer."""
    return sup_bound(spec) * math.log(n) / n


def experiment_lambda(n: int) -> float:
    """1 / (5n), the regularizer used in the simulation study."""
    return 1.0 / (5 * n)


def build_imputation(spec: KernelSpec, D2: LabeledDataset, lam0: float, lam1: float) -> DifferenceCate:
    """Imputation model h~ = f~1 - f~0 fitted arm-wise on the holdout split."""
    return DifferenceCate(fit_arm(spec, D2, 1, lam1), fit_arm(spec, D2, 0, lam0))


def selection_losses(candidates: Sequence[CateModel], imputed: np.ndarray, Z_T) -> np.ndarray:
    return np.array([np.mean((imputed - h.predict(Z_T)) ** 2) for h in candidates])


def argmin_with_ties(losses: np.ndarray, lam1: Sequence[float] | None = None) -> int:
    """Index of the smallest loss; ties go to the smallest lam1, then the smallest index."""
    best = np.flatnonzero(losses == losses.min())
    if lam1 is None or len(best) == 1:
        return int(best[0])
    lam1 = np.asarray(lam1, dtype=float)
    # lexsort keys: last is primary
    return int(best[np.lexsort((best, lam1[best]))[0]])


def select(
    candidates: Sequence[CateModel],
    imputation: CateModel,
    Z_T: UnlabeledDataset,
    triples: Sequence[RegularizerTriple] | None = None,
) -> SelectionReport:
    """Pick the candidate closest to the imputation model on the target covariates.

    The loss of candidate h is mean over target rows of (h~(z) - h(z))^2.
    ``triples`` (one per candidate) enables the lam1 tie rule and fills
    ``lambda_chosen``; otherwise each candidate's own ``lam`` is used if present.
    """
    if len(candidates) == 0:
        raise InvalidInput("no candidate models to select from")
    Z = Z_T.Z if isinstance(Z_T, UnlabeledDataset) else UnlabeledDataset(Z_T).Z
    if triples is None and all(isinstance(getattr(h, "lam", None), RegularizerTriple) for h in candidates):
        triples = [h.lam for h in candidates]
    if triples is not None and len(triples) != len(candidates):
        raise InvalidInput("need one regularizer triple per candidate")

    losses = selection_losses(candidates, imputation.predict(Z), Z)
    lam1 = None if triples is None else [t.lam1 for t in triples]
    k = argmin_with_ties(losses, lam1)
    return SelectionReport(losses, k, None if triples is None else triples[k])
