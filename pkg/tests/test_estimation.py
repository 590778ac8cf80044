import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from simerr.estimation import (
    EstimandSpec,
    SampleMatrix,
    build_s_process,
    compute_means,
    compute_quantiles,
    estimate_density_at_quantiles,
    joint_estimate,
    order_statistic_rank,
    silverman_bandwidth,
)
from simerr.exceptions import DegenerateDensityError, InsufficientDataError, SpecError
from simerr.samplers import MixtureSpec, sample_mixture_iid

# mixture density at 0.2544116, evaluated directly from the component formula
F_MIX_AT_REFERENCE_Q10 = 0.07370342805714866


def column(values, name="x"):
    return SampleMatrix(np.asarray(values, dtype=float)[:, None], (name,))


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_sample_matrix_validation():
    with pytest.raises(InsufficientDataError):
        SampleMatrix(np.array([[1.0]]), ("x",))
    with pytest.raises(SpecError):
        SampleMatrix(np.array([[1.0], [np.nan]]), ("x",))
    with pytest.raises(SpecError):
        SampleMatrix(np.ones((3, 2)), ("a", "a"))
    m = SampleMatrix(np.ones((3, 2)))
    assert m.names() == ("c1", "c2")
    assert m.drop_leading(1).n == 2


def test_spec_validation():
    with pytest.raises(SpecError):
        EstimandSpec((), ())
    with pytest.raises(SpecError):
        EstimandSpec((), (("x", 1.0),))
    with pytest.raises(SpecError):
        EstimandSpec(("y",), ()).resolve(column([1, 2, 3]))


def test_labels_follow_means_then_quantiles():
    spec = EstimandSpec(("x",), (("x", 0.1), ("x", 0.9)))
    assert spec.labels() == ["mean(x)", "q0.1(x)", "q0.9(x)"]
    assert (spec.p1, spec.p2, spec.p) == (1, 2, 3)


def test_mean_examples():
    spec = EstimandSpec(("x",), ())
    assert compute_means(column([1, 2, 3, 4]), spec)[0] == 2.5
    assert compute_means(column([7.0] * 5), spec)[0] == 7.0


@pytest.mark.parametrize("q", [0.30, 0.25])
def test_quantile_uses_ceiling_rank(q):
    x = column([10, 20, 30, 40, 50, 60, 70, 80, 90, 100])
    assert compute_quantiles(x, EstimandSpec((), (("x", q),)))[0] == 30


def test_order_statistic_rank_guards_float_error():
    assert 100 * 0.07 != 7
    assert order_statistic_rank(100, 0.07) == 7
    assert order_statistic_rank(10, 0.3) == 3
    assert order_statistic_rank(10, 0.31) == 4
    assert order_statistic_rank(5, 0.01) == 1


def test_s_process_strict_indicator():
    x = column([1, 2, 3])
    spec = EstimandSpec((), (("x", 0.5),))
    est = joint_estimate(x, spec)
    assert est.nu_hat[0] == 2
    assert build_s_process(x, spec, est)[:, 0].tolist() == [0, 0, 1]


def test_s_process_without_quantiles_copies_means(rng):
    data = rng.normal(size=(20, 2))
    m = SampleMatrix(data, ("a", "b"))
    spec = EstimandSpec(("b", "a"), ())
    s = build_s_process(m, spec, joint_estimate(m, spec))
    np.testing.assert_array_equal(s, data[:, ::-1])


def test_s_process_indicator_fraction_q90(rng):
    x = column(rng.permutation(1000).astype(float))
    spec = EstimandSpec((), (("x", 0.9),))
    s = build_s_process(x, spec, joint_estimate(x, spec))
    assert abs(s.mean() - 0.100) <= 1 / 1000


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=2, max_size=60, unique=True), st.floats(0.01, 0.99))
def test_indicator_fraction_exact(values, q):
    x = column(values)
    spec = EstimandSpec((), (("x", q),))
    s = build_s_process(x, spec, joint_estimate(x, spec))
    n = len(values)
    assert s.sum() == n - order_statistic_rank(n, q)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=2, max_size=60), st.floats(0.01, 0.99), st.randoms())
def test_quantile_permutation_invariant(values, q, rnd):
    spec = EstimandSpec((), (("x", q),))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert compute_quantiles(column(values), spec) == compute_quantiles(column(shuffled), spec)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50),
    st.floats(0.01, 0.99),
    st.floats(0.1, 10.0),
    st.floats(-100, 100),
)
def test_affine_equivariance(values, q, a, c):
    x = np.array(values)
    spec = EstimandSpec(("x",), (("x", q),))
    base = joint_estimate(column(x), spec).nu_hat
    moved = joint_estimate(column(a * x + c), spec).nu_hat
    # the quantile is the transformed order statistic itself; the mean is up to rounding
    assert moved[1] == a * x[np.argsort(x, kind="stable")][order_statistic_rank(x.size, q) - 1] + c
    assert moved[0] == pytest.approx(a * base[0] + c, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=2, max_size=40), st.floats(0.01, 0.5), st.floats(0.5, 0.99))
def test_quantiles_ordered_within_column(values, qa, qb):
    spec = EstimandSpec((), (("x", qb), ("x", qa)))
    hi, lo = compute_quantiles(column(values), spec)
    assert lo <= hi


def test_silverman_bandwidth_formula(rng):
    x = rng.normal(size=500)
    sd = x.std(ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 500 ** -0.2)


def test_silverman_falls_back_to_sd_when_iqr_zero():
    x = np.array([0.0] * 10 + [1.0])
    assert silverman_bandwidth(x) == pytest.approx(0.9 * x.std(ddof=1) * 11 ** -0.2)


def test_density_degenerate_column():
    x = column([3.0] * 50)
    spec = EstimandSpec((), (("x", 0.5),))
    with pytest.raises(DegenerateDensityError):
        estimate_density_at_quantiles(x, spec, joint_estimate(x, spec))


def test_density_requires_quantile_target():
    x = column([1.0, 2.0, 3.0])
    spec = EstimandSpec(("x",), ())
    with pytest.raises(SpecError):
        estimate_density_at_quantiles(x, spec, joint_estimate(x, spec))


@pytest.mark.slow
def test_density_standard_normal_median():
    x = column(np.random.default_rng(1).standard_normal(1_000_000))
    spec = EstimandSpec((), (("x", 0.5), ("x", 0.9)))
    f = estimate_density_at_quantiles(x, spec, joint_estimate(x, spec)).values
    assert f[0] == pytest.approx(1 / math.sqrt(2 * math.pi), rel=0.02)
    assert f[1] == pytest.approx(norm.pdf(norm.ppf(0.9)), rel=0.02)


@pytest.mark.slow
def test_mixture_large_sample_estimates():
    spec = MixtureSpec()
    x = sample_mixture_iid(spec, 1_000_000, 7)
    es = EstimandSpec(("x",), (("x", 0.1), ("x", 0.9)))
    est = joint_estimate(x, es)
    sd = x.column("x").std(ddof=1)
    assert abs(est.nu_hat[0] - 5) < 3 * sd / 1000
    f = estimate_density_at_quantiles(x, es, est).values
    assert f[0] == pytest.approx(F_MIX_AT_REFERENCE_Q10, rel=0.03)
    assert float(spec.pdf(0.2544116)) == pytest.approx(F_MIX_AT_REFERENCE_Q10, rel=1e-12)
    # 3 SE for a quantile: sqrt(q(1-q)/n)/f
    se90 = math.sqrt(0.09 / 1e6) / float(spec.pdf(11.0143117))
    assert abs(est.nu_hat[2] - 11.0143117) < 3 * se90
