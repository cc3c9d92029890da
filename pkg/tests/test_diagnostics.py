import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coke import FunctionModel, LabeledDataset, SimConfig, gen_source, gen_target, true_cate, true_outcome
from coke.benchmarks import LogisticModel
from coke.diagnostics import (density_ratio_diag, effective_sample_size, efficient_score, fit_glr_nuisances,
                              pearson, spearman)
from coke.errors import InvalidInput
from coke.rng import stream
from coke.simulation import gen_target_labeled

import oracles


def const(c):
    return FunctionModel(lambda Z, c=c: np.full(len(Z), c))


def test_ess_examples():
    assert effective_sample_size(np.full(50, 0.3)) == pytest.approx(50, rel=1e-14)
    assert effective_sample_size([1.0, 1e-12]) == pytest.approx(1.0, abs=1e-9)
    assert effective_sample_size([2.0, 1.0, 1.0]) == pytest.approx(16 / 6, rel=1e-15)
    with pytest.raises(InvalidInput):
        effective_sample_size([1.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=40))
def test_ess_bounds(w):
    ess = effective_sample_size(w)
    assert 1 - 1e-9 <= ess <= len(w) * (1 + 1e-9)
    if len(set(w)) == 1:
        assert ess == pytest.approx(len(w), rel=1e-12)


def test_ess_equals_n_only_for_equal_weights(rng):
    for _ in range(50):
        w = rng.uniform(0.1, 2, size=20)
        assert effective_sample_size(w) < 20


def test_efficient_score_cases():
    D = LabeledDataset(np.zeros((2, 1)), [0, 1], [1.0, 4.0])
    half = LogisticModel(np.zeros(2))
    assert efficient_score(D, half, const(0.0), const(0.0)).tolist() == [-2.0, 8.0]
    f0, f1 = const(1.0), const(4.0)
    assert efficient_score(D, half, f0, f1).tolist() == [3.0, 3.0]


def test_efficient_score_identity_with_oracles():
    cfg = SimConfig(noise_sd=0.0)
    D = gen_target_labeled(cfg, stream(0, 5), n=5000)
    pi = LogisticModel(np.array([0.0] + [cfg.S_R / 8] * 4))
    f0 = FunctionModel(lambda Z: true_outcome(cfg, Z, 0))
    f1 = FunctionModel(lambda Z: true_outcome(cfg, Z, 1))
    assert np.max(np.abs(efficient_score(D, pi, f0, f1) - true_cate(cfg, D.Z))) <= 1e-12


def test_glr_nuisances_run():
    cfg = SimConfig()
    D = gen_target_labeled(cfg, stream(0, 6), n=800)
    pi, f0, f1 = fit_glr_nuisances(D)
    s = efficient_score(D, pi, f0, f1)
    assert s.shape == (800,) and np.all(np.isfinite(s))


def test_density_ratio_null_and_shift(rng):
    Z = rng.normal(size=(2000, 3))
    _, ls, lt = density_ratio_diag(Z, rng.normal(size=(2000, 3)))
    assert np.mean(np.abs(ls)) <= 0.1 and np.mean(np.abs(lt)) <= 0.1

    cfg = SimConfig(S_B=10.0)
    _, ls, lt = density_ratio_diag(gen_source(cfg, stream(1, 0)).Z, gen_target(cfg, stream(1, 1)).Z)
    assert np.mean(ls) < 0 < np.mean(lt)


def test_density_ratio_constant_covariates():
    Z_S, Z_T = np.ones((30, 2)), np.ones((10, 2))
    model, ls, _ = density_ratio_diag(Z_S, Z_T)
    assert np.ptp(ls) == pytest.approx(0, abs=1e-12)
    # p = 10/40 at every point, ratio = n_S p / (n_T (1 - p)) = 1
    assert model.ratio(Z_S)[0] == pytest.approx(1.0, rel=1e-8)


def test_correlation_examples():
    x = [1.0, 2.0, 3.0, 5.0]
    assert pearson(x, x) == 1.0 and spearman(x, x) == 1.0
    neg = [-v for v in x]
    assert pearson(x, neg) == -1.0 and spearman(x, neg) == -1.0
    assert spearman([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)


def test_spearman_brute_force_permutations():
    # all 3! rank orders: Spearman is 1 - 6 sum d^2 / (n (n^2 - 1)) without ties
    for perm in itertools.permutations([1, 2, 3]):
        d2 = sum((a - b) ** 2 for a, b in zip([1, 2, 3], perm))
        assert spearman([1, 2, 3], perm) == pytest.approx(1 - 6 * d2 / 24, abs=1e-15)


def test_constant_input_flagged():
    with pytest.warns(RuntimeWarning):
        assert np.isnan(pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))
    with pytest.raises(InvalidInput):
        pearson([1.0], [2.0])


def test_against_reference_rank_implementation(rng):
    for k in range(50):
        n = int(rng.integers(2, 13))
        if k % 2:
            x, y = rng.integers(0, 4, n).astype(float), rng.integers(0, 4, n).astype(float)
        else:
            x, y = rng.normal(size=n), rng.normal(size=n)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        assert spearman(x, y) == pytest.approx(oracles.spearman(list(x), list(y)), abs=1e-12)
        assert pearson(x, y) == pytest.approx(oracles.pearson(list(x), list(y)), abs=1e-12)


def test_spearman_monotone_invariance(rng):
    for _ in range(50):
        x, y = rng.normal(size=12), rng.normal(size=12)
        assert spearman(np.exp(x), y ** 3) == spearman(x, y)
