"""Synthetic covariate-shift design, ground truth, and Monte Carlo sweeps.

Covariates have ``p`` coordinates. The first ``q`` are shifted: on the
source each is drawn from U(-pi, 0) with probability w and U(0, pi)
otherwise, w = S_B^(1/q) / (S_B^(1/q) + 1); the target mirrors the
weights. The remaining coordinates are U(-pi, pi) in both populations.
Treatment follows expit(S_R * sum_{j<=4} z_j / 8) and outcomes are
f*_a(z) plus N(0, noise_sd^2) noise.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .errors import CokeError, InvalidInput
from .kernel import KernelSpec
from .krr import LabeledDataset, UnlabeledDataset
from .rng import EVAL, METHOD, SOURCE, TARGET, derive_seed, stream

KNOBS = ("S_B", "S_R", "c", "n", "S_B_q2")
CSV_COLUMNS = ("knob", "value", "method", "rep", "mse", "runtime_ms", "status")


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    n_T: int = 250
    p: int = 4
    q: int = 1
    S_B: float = 10.0
    S_R: float = 2.0
    c: float = 1.0
    noise_sd: float = 0.5
    seed: int = 0
    reps: int = 1
    n_eval: int = 10_000

    def __post_init__(self):
        if not (1 <= self.q < self.p):
            raise InvalidInput(f"need 1 <= q < p, got q={self.q}, p={self.p}")
        if self.n < 2 or self.n_T < 1 or self.n_eval < 1 or self.reps < 1:
            raise InvalidInput("sample sizes and reps must be positive (n >= 2)")
        if self.S_B < 1 or self.S_R < 0 or self.c < 0 or self.noise_sd < 0:
            raise InvalidInput("need S_B >= 1, S_R >= 0, c >= 0, noise_sd >= 0")

    @property
    def source_weight(self) -> float:
        """Probability that a shifted source coordinate falls in (-pi, 0)."""
        s = self.S_B ** (1.0 / self.q)
        return s / (s + 1.0)


def coupled_target_size(S_B: float, S_R: float) -> int:
    """n_T = ceil(350 sqrt(S_B) + 60 S_R + 25); the source size is 4 n_T."""
    return math.ceil(350 * math.sqrt(S_B) + 60 * S_R + 25)


def _covariates(cfg: SimConfig, rng: np.random.Generator, size: int, neg_weight: float) -> np.ndarray:
    Z = rng.uniform(-math.pi, math.pi, size=(size, cfg.p))
    mag = rng.uniform(0.0, math.pi, size=(size, cfg.q))
    neg = rng.random((size, cfg.q)) < neg_weight
    Z[:, : cfg.q] = np.where(neg, -mag, mag)
    return Z


def propensity(cfg: SimConfig, Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return expit(cfg.S_R * Z[:, :4].sum(axis=1) / 8.0)


def true_cate(cfg: SimConfig, Z) -> np.ndarray | float:
    """h*(z) = mean of sin(z_j) over the shifted coordinates."""
    Z = np.asarray(Z, dtype=float)
    h = np.sin(np.atleast_2d(Z)[:, : cfg.q]).mean(axis=1)
    return float(h[0]) if Z.ndim == 1 else h


def true_outcome(cfg: SimConfig, Z, a) -> np.ndarray | float:
    """f*_a(z) = c * mean g(|z_j|) + (a - 1/2) h*(z) with the piecewise-linear g."""
    Z = np.asarray(Z, dtype=float)
    A = np.abs(np.atleast_2d(Z)[:, : cfg.q])
    g = np.where(A >= math.pi / 2, 2 * (A - math.pi / 4), A).mean(axis=1)
    h = np.sin(np.atleast_2d(Z)[:, : cfg.q]).mean(axis=1)
    f = cfg.c * g + (np.asarray(a, dtype=float) - 0.5) * h
    return float(f[0]) if Z.ndim == 1 else f


def gen_source(cfg: SimConfig, rng: np.random.Generator, n: int | None = None) -> LabeledDataset:
    n = cfg.n if n is None else n
    Z = _covariates(cfg, rng, n, cfg.source_weight)
    a = (rng.random(n) < propensity(cfg, Z)).astype(np.int8)
    y = true_outcome(cfg, Z, a) + cfg.noise_sd * rng.standard_normal(n)
    return LabeledDataset(Z, a, y)


def gen_target_covariates(cfg: SimConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    return _covariates(cfg, rng, n, 1.0 - cfg.source_weight)


def gen_target(cfg: SimConfig, rng: np.random.Generator, n: int | None = None) -> UnlabeledDataset:
    return UnlabeledDataset(gen_target_covariates(cfg, rng, cfg.n_T if n is None else n))


def gen_target_labeled(cfg: SimConfig, rng: np.random.Generator, n: int | None = None) -> LabeledDataset:
    """Target rows with treatments and outcomes drawn as on the source."""
    n = cfg.n_T if n is None else n
    Z = gen_target_covariates(cfg, rng, n)
    a = (rng.random(n) < propensity(cfg, Z)).astype(np.int8)
    y = true_outcome(cfg, Z, a) + cfg.noise_sd * rng.standard_normal(n)
    return LabeledDataset(Z, a, y)


def evaluate_mse(model, cfg: SimConfig, rng: np.random.Generator, Z_eval=None) -> float:
    """Monte Carlo target MSE of ``model`` against h* over ``cfg.n_eval`` fresh target draws."""
    Z = gen_target_covariates(cfg, rng, cfg.n_eval) if Z_eval is None else Z_eval
    return float(np.mean((model.predict(Z) - true_cate(cfg, Z)) ** 2))


def apply_knob(base: SimConfig, knob: str, value: float, couple_sizes: bool = True) -> SimConfig:
    """Config for one sweep value; with ``couple_sizes`` n_T and n follow the coupling formula."""
    if knob not in KNOBS:
        raise InvalidInput(f"unknown knob {knob!r}; choose from {KNOBS}")
    if knob == "n":
        n = int(value)
        return replace(base, n=n, n_T=math.ceil(n / 4))
    if knob == "S_B_q2":
        cfg = replace(base, S_B=float(value), q=2)
    else:
        cfg = replace(base, **{knob: float(value)})
    if couple_sizes:
        n_T = coupled_target_size(cfg.S_B, cfg.S_R)
        cfg = replace(cfg, n=4 * n_T, n_T=n_T)
    return cfg


def simulate_rep(cfg: SimConfig, rep: int):
    """Source data, target covariates and evaluation covariates for one replication."""
    D = gen_source(cfg, stream(cfg.seed, rep, SOURCE))
    D_T = gen_target(cfg, stream(cfg.seed, rep, TARGET))
    Z_eval = gen_target_covariates(cfg, stream(cfg.seed, rep, EVAL), cfg.n_eval)
    return D, D_T, Z_eval


def method_seed(cfg: SimConfig, rep: int) -> int:
    return derive_seed(cfg.seed, rep, METHOD)


def _run_cell(args):
    cfg, knob, value, rep, methods, spec, timing = args
    D, D_T, Z_eval = simulate_rep(cfg, rep)
    seed = method_seed(cfg, rep)
    rows = []
    for name in methods:
        estimator = _resolve(name)
        t0 = time.perf_counter()
        try:
            model = estimator(spec, D, D_T, seed)
            mse = evaluate_mse(model, cfg, None, Z_eval)
            status = "ok"
        except CokeError as exc:
            mse = float("nan")
            status = f"failed:{type(exc).__name__}"
        ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        rows.append({"knob": knob, "value": value, "method": name, "rep": rep,
                     "mse": mse, "runtime_ms": ms, "status": status})
    return rows


def _resolve(name):
    from .methods import get_method

    return get_method(name)


def sweep(base_cfg: SimConfig, knob: str, values: Sequence[float], methods: Sequence[str],
          reps: int | None = None, spec: KernelSpec | None = None, couple_sizes: bool = True,
          timing: bool = True, threads: int = 1) -> list[dict]:
    """Run every (value, rep) cell and return long-format rows.

    All methods in a cell see the same data. A method that raises a library
    error yields a row with ``mse=nan`` and a ``failed:...`` status; the
    sweep continues.
    """
    reps = base_cfg.reps if reps is None else reps
    spec = KernelSpec() if spec is None else spec
    for name in methods:
        _resolve(name)
    cells = [(apply_knob(base_cfg, knob, v, couple_sizes), knob, v, rep, tuple(methods), spec, timing)
             for v in values for rep in range(reps)]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    return [row for rows in results for row in rows]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: Iterable[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
