import math

import numpy as np
import pytest

from msw import (
    DomainError,
    Gaussian,
    OptimizerOpts,
    RngStream,
    ScaleError,
    SpecError,
    UnsupportedDimensionError,
    msw_empirical,
    msw_grid_oracle,
    msw_vs_analytic,
    w1d_empirical,
    wasserstein_full,
)

FAST = OptimizerOpts(restarts=8, max_iters=120)


def random_instance(rng, n, d, scale=1.0):
    return scale * rng.normal(size=(n, d)), scale * rng.normal(size=(n, d))


def test_dirac_pair_gives_the_norm():
    for p in (1.0, 2.0, 3.0):
        res = msw_empirical([[0.0, 0.0]], [[3.0, 4.0]], p, FAST, RngStream(1))
        assert res.value == pytest.approx(5.0, rel=1e-9)
        assert np.abs(res.argmax) == pytest.approx([0.6, 0.8], abs=1e-6)


def test_identical_inputs_give_zero():
    pts = np.random.default_rng(0).normal(size=(7, 3))
    res = msw_empirical(pts, pts, 2.0, FAST, RngStream(1))
    assert res.value == 0.0


def test_d1_is_exact():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(9, 1))
    y = rng.normal(size=(6, 1))
    res = msw_empirical(x, y, 2.0, FAST, RngStream(0))
    assert res.value == w1d_empirical(np.sort(x[:, 0]), np.sort(y[:, 0]), 2.0)
    assert res.argmax == pytest.approx([1.0])


def test_oracle_agreement_d2():
    rng = np.random.default_rng(11)
    for k in range(8):
        n = int(rng.integers(4, 21))
        x, y = random_instance(rng, n, 2)
        oracle = msw_grid_oracle(x, y, 2.0, 100_000)
        res = msw_empirical(x, y, 2.0, rng=RngStream(900 + k))
        assert abs(res.value - oracle.value) <= max(1e-4, oracle.oracle_gap)


def test_lower_bound_soundness_sample():
    rng = np.random.default_rng(21)
    for k in range(25):
        n = int(rng.integers(1, 9))
        d = int(rng.integers(1, 5))
        x, y = random_instance(rng, n, d)
        res = msw_empirical(x, y, 2.0, FAST, RngStream(100 + k))
        assert res.value <= wasserstein_full(x, y, 2.0) + 1e-9


def test_symmetry_with_shared_seeds():
    rng = np.random.default_rng(31)
    x, y = random_instance(rng, 12, 3)
    a = msw_empirical(x, y, 2.0, FAST, RngStream(8))
    b = msw_empirical(y, x, 2.0, FAST, RngStream(8))
    assert a.value == pytest.approx(b.value, abs=1e-9)


def test_unequal_sizes_supported():
    rng = np.random.default_rng(41)
    x = rng.normal(size=(9, 2))
    y = rng.normal(size=(5, 2))
    res = msw_empirical(x, y, 2.0, FAST, RngStream(2))
    oracle = msw_grid_oracle(x, y, 2.0, 50_000)
    assert abs(res.value - oracle.value) <= max(1e-4, oracle.oracle_gap)


def test_result_value_matches_projection_recompute():
    rng = np.random.default_rng(51)
    x, y = random_instance(rng, 10, 3)
    res = msw_empirical(x, y, 2.0, FAST, RngStream(3))
    from msw import project

    again = w1d_empirical(project(x, res.argmax), project(y, res.argmax), 2.0)
    assert res.value == pytest.approx(again, rel=1e-10)


def test_grid_oracle_examples():
    o = msw_grid_oracle([[0.0, 0.0]], [[3.0, 4.0]], 2.0, 10_000)
    assert o.value == pytest.approx(5.0, abs=5e-3)
    pts = np.random.default_rng(2).normal(size=(5, 2))
    assert msw_grid_oracle(pts, pts, 1.0, 100).value == 0.0


def test_grid_oracle_refinement_is_cauchy():
    rng = np.random.default_rng(61)
    x, y = random_instance(rng, 5, 2)
    coarse = msw_grid_oracle(x, y, 2.0, 1_000)
    fine = msw_grid_oracle(x, y, 2.0, 10_000)
    assert fine.value >= coarse.value - 1e-12
    assert fine.value - coarse.value <= coarse.oracle_gap


def test_grid_oracle_scaling_and_rotation():
    rng = np.random.default_rng(71)
    x, y = random_instance(rng, 6, 2)
    base = msw_grid_oracle(x, y, 2.0, 20_000)
    scaled = msw_grid_oracle(3.0 * x, 3.0 * y, 2.0, 20_000)
    assert scaled.value == pytest.approx(3.0 * base.value, abs=3.0 * base.oracle_gap + 1e-9)
    ang = 0.83
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    rotated = msw_grid_oracle(x @ rot.T, y @ rot.T, 2.0, 20_000)
    assert rotated.value == pytest.approx(base.value, abs=2.0 * base.oracle_gap + 1e-9)


def test_grid_oracle_monotone_in_p():
    rng = np.random.default_rng(81)
    x, y = random_instance(rng, 6, 2)
    vals = [msw_grid_oracle(x, y, p, 20_000).value for p in (1.0, 1.5, 2.0, 3.0)]
    gap = msw_grid_oracle(x, y, 1.0, 20_000).oracle_gap
    for lo, hi in zip(vals, vals[1:]):
        assert lo <= hi + 2.0 * gap


def test_grid_oracle_d3_fibonacci():
    rng = np.random.default_rng(91)
    x, y = random_instance(rng, 6, 3)
    o = msw_grid_oracle(x, y, 2.0, 40_000)
    res = msw_empirical(x, y, 2.0, rng=RngStream(12))
    assert abs(res.value - o.value) <= max(1e-3, o.oracle_gap)


def test_wasserstein_full_examples():
    pts = np.random.default_rng(3).normal(size=(6, 2))
    assert wasserstein_full(pts, pts, 2.0) == 0.0
    assert wasserstein_full([[0.0, 0.0]], [[3.0, 4.0]], 2.0) == pytest.approx(5.0)
    assert wasserstein_full([[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 1.0]], 2.0) == pytest.approx(1.0)


def test_wasserstein_full_errors():
    with pytest.raises(DomainError):
        wasserstein_full([[0.0, 0.0]], [[1.0, 0.0], [2.0, 0.0]], 2.0)
    big = np.zeros((65, 2))
    with pytest.raises(ScaleError):
        wasserstein_full(big, big, 2.0)


def test_msw_errors():
    with pytest.raises(DomainError):
        msw_empirical([[0.0, 1.0]], [[1.0, 2.0, 3.0]], 2.0)
    with pytest.raises(DomainError):
        msw_empirical([[0.0, 1.0]], [[1.0, 2.0]], 0.5)
    with pytest.raises(UnsupportedDimensionError):
        msw_grid_oracle(np.zeros((2, 4)), np.zeros((2, 4)), 2.0, 100)
    with pytest.raises(DomainError):
        OptimizerOpts(restarts=0)
    with pytest.raises(DomainError):
        OptimizerOpts(step_decay=1.5)


def test_vs_analytic_point_at_mean_isotropic():
    # single point at the mean of N(0, I2), p = 1: every direction sees E|Z|
    spec = Gaussian(np.zeros(2), np.eye(2))
    res = msw_vs_analytic([[0.0, 0.0]], spec, 1.0, FAST, RngStream(5))
    assert res.value == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-3)


def test_vs_analytic_point_at_mean_anisotropic():
    # for xs = {mean}, the sup is the top-eigenvalue Gaussian second moment
    spec = Gaussian(np.zeros(2), np.diag([4.0, 1.0]))
    res = msw_vs_analytic([[0.0, 0.0]], spec, 2.0, FAST, RngStream(5))
    assert res.value == pytest.approx(2.0, rel=5e-3)
    assert abs(res.argmax[0]) == pytest.approx(1.0, abs=1e-3)
    shifted = Gaussian(np.array([3.0, -1.0]), np.diag([4.0, 1.0]))
    res2 = msw_vs_analytic([[3.0, -1.0]], shifted, 2.0, FAST, RngStream(5))
    assert res2.value == pytest.approx(2.0, rel=5e-3)


def test_vs_analytic_seedpinned_regression_large_n():
    spec = Gaussian(np.zeros(2), np.eye(2))
    xs = np.random.default_rng(314).normal(size=(10_000, 2))
    res = msw_vs_analytic(xs, spec, 2.0, OptimizerOpts(restarts=4, max_iters=100), RngStream(6))
    assert res.value <= 0.15


def test_vs_analytic_d1_and_spec_errors():
    spec = Gaussian(np.zeros(1), np.eye(1))
    res = msw_vs_analytic([[0.5], [-0.5]], spec, 2.0, FAST, RngStream(0))
    assert res.argmax == pytest.approx([1.0])
    assert res.value > 0.0
    from msw import ParetoProduct

    with pytest.raises(SpecError):
        msw_vs_analytic([[1.0, 1.0]], ParetoProduct(8.0, 2), 2.0, FAST, RngStream(0))
