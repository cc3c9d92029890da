"""Overlap-adaptive transfer learning of conditional average treatment effects
with kernel ridge regression."""

__version__ = "0.1.0"

from .errors import CokeError, EmptyArm, InvalidInput, NumericalFailure, Unsupported
from .kernel import KernelSpec, evaluate, gram, sup_bound
from .krr import KrrModel, LabeledDataset, UnlabeledDataset, fit, fit_arm, fit_arm_grid, fit_grid, predict
from .learners import (
    AverageCate,
    CateModel,
    DifferenceCate,
    FunctionModel,
    RegularizerTriple,
    SingleCate,
    pseudo_outcomes,
    ra_learner,
    ra_learner_grid,
    separate_regression,
)
from .selection import SelectionReport, build_imputation, select
from .pipeline import CokeConfig, build_grid, run, run_crossfit
from .benchmarks import acw_cate, dr_cate, logistic_fit, sr_pseudo_label
from .simulation import SimConfig, evaluate_mse, gen_source, gen_target, sweep, true_cate, true_outcome

__all__ = [
    "CokeError",
    "EmptyArm",
    "InvalidInput",
    "NumericalFailure",
    "Unsupported",
    "KernelSpec",
    "evaluate",
    "gram",
    "sup_bound",
    "KrrModel",
    "LabeledDataset",
    "UnlabeledDataset",
    "fit",
    "fit_arm",
    "fit_arm_grid",
    "fit_grid",
    "predict",
    "AverageCate",
    "CateModel",
    "DifferenceCate",
    "FunctionModel",
    "RegularizerTriple",
    "SingleCate",
    "pseudo_outcomes",
    "ra_learner",
    "ra_learner_grid",
    "separate_regression",
    "SelectionReport",
    "build_imputation",
    "select",
    "CokeConfig",
    "build_grid",
    "run",
    "run_crossfit",
    "acw_cate",
    "dr_cate",
    "logistic_fit",
    "sr_pseudo_label",
    "SimConfig",
    "evaluate_mse",
    "gen_source",
    "gen_target",
    "sweep",
    "true_cate",
    "true_outcome",
]
