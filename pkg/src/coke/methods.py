"""Named estimators with a common ``(spec, D, D_T, seed) -> CateModel`` signature.

Names: ``coke``, ``sr``, ``dr``, ``acw``, each optionally suffixed with
``-cf`` for two-fold cross-fitting. All use the simulation-study tuning
(regularizer grid {2^k/(5n)}, nuisance and imputation regularizer 1/(5n)).
"""

from __future__ import annotations

from .benchmarks import acw_cate, dr_cate, sr_pseudo_label
from .errors import InvalidInput
from .pipeline import CokeConfig, run, run_crossfit

BASE_METHODS = ("coke", "sr", "dr", "acw")


def _coke(spec, D, D_T, seed, crossfit):
    cfg = CokeConfig(grid_mode="experiment", split_seed=seed)
    return run_crossfit(spec, D, D_T, cfg) if crossfit else run(spec, D, D_T, cfg)[0]


def _sr(spec, D, D_T, seed, crossfit):
    return sr_pseudo_label(spec, D, D_T, seed=seed, crossfit=crossfit)


def _dr(spec, D, D_T, seed, crossfit):
    return dr_cate(spec, D, seed=seed, crossfit=crossfit)


def _acw(spec, D, D_T, seed, crossfit):
    return acw_cate(spec, D, D_T, seed=seed, crossfit=crossfit)


_TABLE = {"coke": _coke, "sr": _sr, "dr": _dr, "acw": _acw}


def get_method(name: str):
    base, _, suffix = name.partition("-")
    if base not in _TABLE or suffix not in ("", "cf"):
        raise InvalidInput(f"unknown method {name!r}; use one of {BASE_METHODS}, optionally with '-cf'")
    crossfit = suffix == "cf"
    fn = _TABLE[base]
    return lambda spec, D, D_T, seed: fn(spec, D, D_T, seed, crossfit)
