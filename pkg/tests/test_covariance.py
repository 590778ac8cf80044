import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simerr.covariance import (
    CovMode,
    CovModeConfig,
    assemble_asymptotic_covariance,
    batch_means_covariance,
    estimate_asymptotic_covariance,
    sample_covariance_iid,
)
from simerr.estimation import DensityAtQuantiles, EstimandSpec, SampleMatrix, joint_estimate
from simerr.exceptions import BatchConfigError, BatchMeansWarning, DegenerateDensityError


def test_two_point_sample_covariance():
    np.testing.assert_allclose(sample_covariance_iid(np.array([[0, 0], [1, 1]])), 0.5)


def test_constant_rows_give_zero():
    s = np.full((50, 3), 2.5)
    assert not sample_covariance_iid(s).any()
    with pytest.warns(BatchMeansWarning):
        assert not batch_means_covariance(s, CovModeConfig(CovMode.MCMC)).any()


def test_iid_identity(rng):
    s = rng.standard_normal((100_000, 2))
    np.testing.assert_allclose(sample_covariance_iid(s), np.eye(2), atol=0.02)


def test_batch_means_hand_computation():
    s = np.array([0.0, 0.0, 1.0, 1.0])
    with pytest.warns(BatchMeansWarning):
        out = batch_means_covariance(s, CovModeConfig(CovMode.MCMC, batch_size=2))
    assert out[0, 0] == pytest.approx(1.0)


def test_batch_means_discards_tail():
    s = np.array([0.0, 0.0, 1.0, 1.0, 100.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BatchMeansWarning)
        out = batch_means_covariance(s, CovModeConfig(CovMode.MCMC, batch_size=2))
    assert out[0, 0] == pytest.approx(1.0)


def test_auto_batch_size():
    assert CovModeConfig(CovMode.MCMC).resolve(400) == (20, 20)
    assert CovModeConfig(CovMode.MCMC).resolve(1000) == (31, 32)


def test_batch_config_errors():
    with pytest.raises(BatchConfigError):
        CovModeConfig(CovMode.MCMC, batch_size=0)
    with pytest.raises(BatchConfigError):
        CovModeConfig(CovMode.MCMC, batch_size=60).resolve(100)


def test_rank_deficient_warning(rng):
    s = rng.normal(size=(30, 4))
    with pytest.warns(BatchMeansWarning, match="rank deficient"):
        batch_means_covariance(s, CovModeConfig(CovMode.MCMC, batch_size=10))


def test_many_estimands_warning(rng):
    s = rng.normal(size=(10_000, 6))
    with pytest.warns(BatchMeansWarning, match="biased"):
        batch_means_covariance(s, CovModeConfig(CovMode.MCMC))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 40), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_batch_size_one_is_sample_covariance(n, p, seed):
    s = np.random.default_rng(seed).normal(size=(n, p))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BatchMeansWarning)
        bm = batch_means_covariance(s, CovModeConfig(CovMode.MCMC, batch_size=1))
    np.testing.assert_allclose(bm, sample_covariance_iid(s), rtol=1e-10, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 200), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_outputs_symmetric_nonnegative_diagonal(n, p, seed):
    s = np.random.default_rng(seed).normal(size=(n, p))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BatchMeansWarning)
        for m in (sample_covariance_iid(s), batch_means_covariance(s)):
            np.testing.assert_array_equal(m, m.T)
            assert np.all(np.diag(m) >= 0)


def test_assemble_without_quantiles_is_identity():
    sigma = np.array([[2.0, 0.3], [0.3, 1.0]])
    spec = EstimandSpec(("a", "b"), ())
    acov = assemble_asymptotic_covariance(sigma, None, spec, 10)
    np.testing.assert_array_equal(acov.assembled, sigma)


def test_assemble_classical_quantile_variance():
    q, f = 0.3, 0.25
    spec = EstimandSpec((), (("x", q),))
    acov = assemble_asymptotic_covariance(
        np.array([[q * (1 - q)]]), DensityAtQuantiles(np.array([f])), spec, 100
    )
    assert acov.assembled[0, 0] == pytest.approx(q * (1 - q) / f**2)
    assert acov.standard_errors[0] == pytest.approx(np.sqrt(q * (1 - q) / f**2 / 100))


def test_assemble_unit_density_unchanged():
    sigma = np.array([[1.0, 0.2, 0.1], [0.2, 0.5, 0.05], [0.1, 0.05, 0.4]])
    spec = EstimandSpec(("x",), (("x", 0.2), ("x", 0.8)))
    acov = assemble_asymptotic_covariance(sigma, DensityAtQuantiles(np.ones(2)), spec, 10)
    np.testing.assert_allclose(acov.assembled, sigma)


def test_assemble_rejects_bad_density():
    spec = EstimandSpec((), (("x", 0.5),))
    with pytest.raises(DegenerateDensityError):
        assemble_asymptotic_covariance(np.eye(1), DensityAtQuantiles(np.zeros(1)), spec, 10)


def test_assemble_permutation_invariance(rng):
    x = SampleMatrix(rng.normal(size=(2000, 1)), ("x",))
    a = EstimandSpec(("x",), (("x", 0.2), ("x", 0.7)))
    b = EstimandSpec(("x",), (("x", 0.7), ("x", 0.2)))
    ca = estimate_asymptotic_covariance(x, a, joint_estimate(x, a)).assembled
    cb = estimate_asymptotic_covariance(x, b, joint_estimate(x, b)).assembled
    perm = [0, 2, 1]
    np.testing.assert_allclose(cb, ca[np.ix_(perm, perm)], rtol=1e-12)


def _ar1(n, rho, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - rho**2)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + e[t]
    return x


def test_ar1_batch_means_exceeds_naive():
    x = _ar1(200_000, 0.5, 3)
    ratio = batch_means_covariance(x)[0, 0] / sample_covariance_iid(x)[0, 0]
    assert ratio > 2
