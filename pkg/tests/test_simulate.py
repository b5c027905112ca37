import math

import numpy as np
import pytest

from locstat.errors import Unsupported, UnstableFilter
from locstat.simulate import (
    InnovationLaw,
    ProcessSpec,
    frozen_autocov,
    make_rng,
    mean_function,
    sample_innovations,
    simulate_path,
    true_covariance,
)


@pytest.mark.parametrize("family", InnovationLaw.FAMILIES)
def test_innovation_moments(family):
    x = sample_innovations(family, 10**6, make_rng(51, 0))
    assert abs(x.mean()) <= 0.004
    assert abs(x.var() - 1) <= 0.01


def test_innovations_deterministic_and_validated():
    a = sample_innovations("std_t6", 50, make_rng(52, 3))
    b = sample_innovations(InnovationLaw("std_t6"), 50, make_rng(52, 3))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_innovations("std_t6", 50, make_rng(52, 4)))
    with pytest.raises(ValueError):
        sample_innovations("std_normal", 0, make_rng(1))
    with pytest.raises(ValueError):
        InnovationLaw("cauchy")


def test_law_cdf_inverts_ppf():
    q = np.array([0.01, 0.3, 0.5, 0.9, 0.999])
    for fam in InnovationLaw.FAMILIES:
        law = InnovationLaw(fam)
        np.testing.assert_allclose(law.cdf(law.ppf(q)), q, atol=1e-12)


def test_mean_functions():
    t = np.array([0.0, 0.25, 0.5, 0.75])
    np.testing.assert_allclose(mean_function("I", t), [0, 2, 0, -2], atol=1e-14)
    np.testing.assert_allclose(mean_function("II", t), [0, 1.5, 2, 1.5], atol=1e-14)
    np.testing.assert_array_equal(mean_function("III", t), 0)
    with pytest.raises(ValueError):
        mean_function("IV", t)


def test_model_b_midpoint_is_scaled_innovation():
    n = 100
    spec = ProcessSpec("b")
    C = spec.ma_coefficients(0.5)
    assert C[0, 0] == 1 and np.all(np.abs(C[0, 1:]) < 1e-15)
    assert frozen_autocov(spec, 0.5, 0)[0] == pytest.approx(0.64, abs=1e-12)
    # replay the stream: only the lag-0 coefficient survives at t = 0.5
    _, eps = simulate_path(spec, n, make_rng(53, 0))
    J = spec.truncation(np.arange(1, n + 1) / n)
    e = spec.law.sample(n + J, make_rng(53, 0))
    assert eps[n // 2 - 1] == pytest.approx(0.8 * e[n // 2 - 1 + J], abs=1e-12)


def test_model_b_frozen_variance():
    n, i = 200, 30
    t = i / n
    target = 0.64 / (1 - 0.49 * math.sin(2 * math.pi * t) ** 2)
    spec = ProcessSpec("b")
    x = np.array([simulate_path(spec, n, make_rng(54, r))[1][i - 1] for r in range(2000)])
    se = math.sqrt(np.var(x * x, ddof=1) / x.size)
    assert abs(np.mean(x * x) - target) <= 3 * se
    assert true_covariance(spec, n).matrix[i - 1, i - 1] == pytest.approx(target, rel=1e-10)


def test_model_b_lag_one_covariance():
    n, i = 1000, 200
    spec = ProcessSpec("b")
    a = 0.7 * math.sin(2 * math.pi * i / n)
    var = 0.64 / (1 - a * a)
    prods = np.empty(10**4)
    for r in range(prods.size):
        eps = simulate_path(spec, n, make_rng(55, r))[1]
        prods[r] = eps[i - 1] * eps[i - 2]
    se = prods.std(ddof=1) / math.sqrt(prods.size)
    assert abs(prods.mean() - a * var) <= 3 * se


@pytest.mark.parametrize("kind", ["a", "b", "tvar6"])
def test_truncation_tail_bound(kind):
    spec = ProcessSpec(kind)
    t = np.linspace(0, 1, 201)
    J = spec.truncation(t)
    long = spec.ma_coefficients(t, J + 400)
    assert np.max(np.abs(long[:, J + 1:]).sum(axis=1)) <= 1e-10
    np.testing.assert_array_equal(long[:, : J + 1], spec.ma_coefficients(t, J))


def test_truncation_geometric_single_root():
    spec = ProcessSpec("a")
    J = spec.truncation(np.array([0.5]))
    assert 0.3 ** (J + 1) / 0.7 <= 1e-10 < 0.3**J / 0.7


def test_unstable_filter():
    bad = ProcessSpec("b")
    object.__setattr__(bad, "factors", lambda t: np.full((np.size(t), 1), 1.2))
    with pytest.raises(UnstableFilter):
        bad.truncation(np.array([0.5]))


def test_determinism():
    spec = ProcessSpec("tvar6", "II")
    a = simulate_path(spec, 120, make_rng(56, 7))
    b = simulate_path(spec, 120, make_rng(56, 7))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_allclose(a[0] - a[1], mean_function("II", np.arange(1, 121) / 120), atol=1e-12)


def test_model_c_diagonal():
    S = true_covariance(ProcessSpec("c"), 40).matrix
    np.testing.assert_array_equal(S - np.diag(np.diag(S)), 0)
    with pytest.raises(Unsupported):
        ProcessSpec("c").ma_coefficients(0.5)


def test_model_d_band_two():
    S = true_covariance(ProcessSpec("d"), 40).matrix
    i, j = np.indices(S.shape)
    assert np.all(S[np.abs(i - j) > 2] == 0)
    assert np.any(S[np.abs(i - j) == 2] != 0)


def test_model_a_toeplitz():
    n = 30
    S = true_covariance(ProcessSpec("a"), n).matrix
    i, j = np.indices(S.shape)
    np.testing.assert_allclose(S, 0.3 ** np.abs(i - j) / 0.91, atol=1e-10)


def test_tvma6_has_seven_coefficients():
    spec = ProcessSpec("tvma6")
    C = spec.ma_coefficients(np.array([0.13, 0.5]))
    assert C.shape == (2, 7)
    assert np.all(C != 0)
    # product of (1 - a_s z) expanded by polynomial multiplication
    a = spec.factors(np.array([0.13]))[0]
    poly = np.array([1.0])
    for root in a:
        poly = np.convolve(poly, [1.0, -root])
    np.testing.assert_allclose(C[0], poly, atol=1e-15)


@pytest.mark.parametrize("kind", ["a", "b", "c", "d", "tvar6", "tvma6"])
def test_true_covariance_psd_and_symmetric(kind):
    S = true_covariance(ProcessSpec(kind), 60).matrix
    np.testing.assert_array_equal(S, S.T)
    assert np.linalg.eigvalsh(S).min() >= -1e-8


def test_noise_scale_scales_covariance():
    a = true_covariance(ProcessSpec("b"), 30).matrix
    b = true_covariance(ProcessSpec("b", noise_scale=0.5), 30).matrix
    np.testing.assert_allclose(b, 0.25 * a, rtol=1e-12)
