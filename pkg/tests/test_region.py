import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simerr.covariance import AsymptoticCovariance, estimate_asymptotic_covariance
from simerr.estimation import EstimandSpec, JointEstimate, SampleMatrix, joint_estimate
from simerr.exceptions import RegionError, ToleranceWarning
from simerr.region import (
    ConfidenceRegion,
    RegionMethod,
    all_regions,
    bonferroni_region,
    bonferroni_z,
    calibrate,
    simultaneous_region,
    standardize_arrays,
    uncorrected_region,
    uncorrected_z,
)

# mpmath oracle values
Z_95 = 1.644853626951472
Z_BONF_3 = 2.128045234184985  # quantile at 1 - 0.1/6
Z_STAR_INDEP_2 = 1.948821862507059  # quantile at (1 + sqrt(0.9))/2
BONF_INDEP_3 = 0.9032962962962963  # (1 - 0.1/3)^3


def _fixture(cov, nu=None, n=100):
    cov = np.asarray(cov, dtype=float)
    p = cov.shape[0]
    spec = EstimandSpec(tuple(f"c{j + 1}" for j in range(p)), ())
    nu = np.zeros(p) if nu is None else np.asarray(nu, dtype=float)
    est = JointEstimate(nu_hat=nu, n=n, spec=spec)
    acov = AsymptoticCovariance(sigma_hat=cov, lambda_inv=np.eye(p), assembled=cov, n=n)
    return est, acov


def test_uncorrected_z():
    assert abs(uncorrected_z(0.10) - Z_95) < 1e-12


def test_bonferroni_z():
    assert abs(bonferroni_z(0.10, 3) - Z_BONF_3) < 1e-12
    assert abs(bonferroni_z(0.10, 3) - 2.128045) < 1e-5


def test_half_width_is_standard_error_form():
    est, acov = _fixture([[4.0, 0.0], [0.0, 9.0]], nu=[1.0, 2.0], n=25)
    reg = uncorrected_region(est, acov, 0.10)
    np.testing.assert_allclose(reg.half_widths, Z_95 * np.array([2.0, 3.0]) / 5.0)
    np.testing.assert_allclose(reg.lower, np.array([1.0, 2.0]) - reg.half_widths)


def test_p1_regions_coincide():
    est, acov = _fixture([[2.0]])
    u = uncorrected_region(est, acov, 0.1)
    b = bonferroni_region(est, acov, 0.1)
    s = simultaneous_region(est, acov, 0.1)
    assert u.z == b.z == s.z
    assert u.achieved_coverage == pytest.approx(0.9, abs=1e-12)


def test_independent_three_coverages():
    est, acov = _fixture(np.eye(3))
    assert uncorrected_region(est, acov, 0.1).achieved_coverage == pytest.approx(0.729, abs=2e-3)
    bonf = bonferroni_region(est, acov, 0.1).achieved_coverage
    assert bonf == pytest.approx(BONF_INDEP_3, abs=1e-3)
    assert bonf > 0.90


def test_independent_pair_calibration():
    est, acov = _fixture(np.eye(2))
    reg = simultaneous_region(est, acov, 0.10)
    assert abs(reg.achieved_coverage - 0.90) <= 1e-3 + reg.coverage_error
    # coverage tolerance 1e-3 moves z by at most 1e-3 / (d coverage / dz) < 0.01
    assert abs(reg.z - Z_STAR_INDEP_2) < 0.01


def test_nearly_collinear_pair():
    est, acov = _fixture([[1.0, 0.9999], [0.9999, 1.0]])
    reg = simultaneous_region(est, acov, 0.10)
    assert abs(reg.z - Z_95) < 1e-2


def test_all_regions_ordering_and_nesting(rng):
    a = rng.normal(size=(4, 6))
    est, acov = _fixture(a @ a.T, nu=rng.normal(size=4))
    regs = all_regions(est, acov, 0.1)
    u, s, b = (regs[m] for m in RegionMethod)
    assert u.z <= s.z <= b.z
    for inner, outer in ((u, s), (s, b)):
        assert all(o <= i for i, o in zip(inner.lower, outer.lower))
        assert all(i <= o for i, o in zip(inner.upper, outer.upper))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.sampled_from([0.05, 0.1, 0.2]))
def test_bracketing_and_coverage(p, seed, alpha):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(p, p + 1))
    est, acov = _fixture(a @ a.T + 0.05 * np.eye(p))
    reg = simultaneous_region(est, acov, alpha, seed=seed % 1000)
    assert uncorrected_z(alpha) <= reg.z <= bonferroni_z(alpha, p)
    slack = 1e-3 + reg.coverage_error
    if reg.z > uncorrected_z(alpha):
        assert abs(reg.achieved_coverage - (1 - alpha)) <= slack
    else:
        assert reg.achieved_coverage >= 1 - alpha - slack


def test_coverage_monotone_in_z_under_shared_seed(rng):
    a = rng.normal(size=(4, 5))
    cov = a @ a.T
    std = standardize_arrays(np.zeros(4), cov, 10)
    from simerr.region import region_at

    covs = [region_at(std, RegionMethod.SIMULTANEOUS, 0.1, z, seed=3) for z in np.linspace(1.6, 2.5, 8)]
    for r0, r1 in zip(covs, covs[1:]):
        assert r0.achieved_coverage <= r1.achieved_coverage + r1.coverage_error


def test_scale_equivariance(rng):
    x = rng.normal(size=(4000, 2))
    spec = EstimandSpec(("a",), (("b", 0.3),))
    base = SampleMatrix(x, ("a", "b"))
    scaled = SampleMatrix(x * np.array([3.0, 0.5]), ("a", "b"))
    regs = []
    for m in (base, scaled):
        est = joint_estimate(m, spec)
        regs.append(simultaneous_region(est, estimate_asymptotic_covariance(m, spec, est), 0.1))
    r0, r1 = regs
    assert r1.z == pytest.approx(r0.z, abs=1e-3)
    np.testing.assert_allclose(np.array(r1.half_widths) / np.array(r0.half_widths) * r0.z / r1.z,
                               [3.0, 0.5], rtol=0.05)


def test_rejects_non_pd():
    est, acov = _fixture([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(RegionError):
        simultaneous_region(est, acov, 0.1)


def test_rejects_bad_alpha():
    est, acov = _fixture(np.eye(2))
    with pytest.raises(RegionError):
        uncorrected_region(est, acov, 1.5)


def test_tolerance_warning():
    est, acov = _fixture(np.eye(3) * 0.5 + 0.5 * np.ones((3, 3)))
    with pytest.warns(ToleranceWarning):
        bonferroni_region(est, acov, 0.1, abs_tol=1e-12)


def test_round_trip_and_contains():
    est, acov = _fixture(np.eye(2), nu=[1.0, -1.0])
    reg = simultaneous_region(est, acov, 0.1)
    again = ConfidenceRegion.from_dict(reg.to_dict())
    assert again.to_dict() == reg.to_dict()
    assert reg.contains([1.0, -1.0])
    assert not reg.contains([1.0, 5.0])


def test_calibrate_requires_sensible_tolerances():
    std = standardize_arrays(np.zeros(2), np.eye(2), 10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(RegionError):
            calibrate(std, 0.1, cov_tol=1e-4, abs_tol=5e-4)
