import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from locstat.errors import AllDegenerate, DegenerateWindow
from locstat.simulate import ProcessSpec, make_rng, simulate_path
from locstat.smoothing import (
    BIWEIGHT,
    EPANECHNIKOV,
    BandwidthSearch,
    KernelSpec,
    bandwidth_grid,
    equivalent_weights,
    gcv_scores,
    gcv_select,
    hat_diagonal,
    local_linear_fit,
)


def normal_equations(y, x, t, tau, kern):
    """Intercept and slope from a direct 2x2 weighted least-squares solve."""
    w = kern((x - t) / tau)
    X = np.column_stack([np.ones_like(x), x - t])
    A = X.T @ (w[:, None] * X)
    rhs = X.T @ (w * y)
    return np.linalg.solve(A, rhs)


@pytest.mark.parametrize("kern", [BIWEIGHT, EPANECHNIKOV])
def test_kernel_density(kern):
    u = np.linspace(-1.5, 1.5, 301)
    np.testing.assert_array_equal(kern(u), kern(-u))
    assert np.all(kern(u) >= 0)
    assert np.all(kern(np.array([-1.2, 1.0, 1.7])) == 0)
    total, _ = integrate.quad(kern, -1, 1)
    assert abs(total - 1) < 1e-6


def test_biweight_is_smooth_at_support_edge():
    h = 1e-6
    left = (BIWEIGHT(1.0) - BIWEIGHT(1.0 - h)) / h
    assert abs(left) < 1e-5
    # Epanechnikov has a kink at 1
    assert abs((EPANECHNIKOV(1.0) - EPANECHNIKOV(1.0 - h)) / h) > 1


def test_unknown_kernel():
    with pytest.raises(ValueError):
        KernelSpec("gaussian")


def test_constant_input_reproduced():
    n = 80
    fit = local_linear_fit(np.full(n, 5.0), np.linspace(0, 1, 41), 0.15)
    np.testing.assert_allclose(fit.level, 5.0, atol=1e-12)
    np.testing.assert_allclose(fit.slope, 0.0, atol=1e-10)


def test_linear_input_reproduced_at_boundaries():
    n = 60
    x = np.arange(1, n + 1) / n
    grid = np.concatenate([[0.0, 0.005], np.linspace(0.1, 0.9, 9), [1.0]])
    fit = local_linear_fit(2 * x, grid, 0.2)
    np.testing.assert_allclose(fit.level, 2 * grid, atol=1e-10)
    np.testing.assert_allclose(fit.slope, 2.0, atol=1e-9)


def test_closed_form_matches_normal_equations_small_case():
    n = 10
    y = make_rng(4, 0).standard_normal(n)
    x = np.arange(1, n + 1) / n
    fit = local_linear_fit(y, [0.5], 0.3)
    b0, b1 = normal_equations(y, x, 0.5, 0.3, BIWEIGHT)
    assert abs(fit.level[0] - b0) <= 1e-12
    assert abs(fit.slope[0] - b1) <= 1e-11


def test_closed_form_matches_normal_equations_random_configs():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(10, 120))
        m = int(rng.integers(6, n + 1))
        tau = float(rng.uniform(0.1, 0.9))
        kern = BIWEIGHT if rng.random() < 0.5 else EPANECHNIKOV
        y = rng.standard_normal(m) * 3 + 1
        x = np.arange(1, m + 1) / n
        t = float(rng.uniform(0, m / n))
        try:
            fit = local_linear_fit(y, [t], tau, kern, n=n)
        except DegenerateWindow:
            continue
        b0, b1 = normal_equations(y, x, t, tau, kern)
        assert abs(fit.level[0] - b0) <= 1e-12 * max(1.0, abs(b0))
        assert abs(fit.slope[0] - b1) <= 1e-9 * max(1.0, abs(b1))


@settings(max_examples=60, deadline=None)
@given(c=st.floats(-1e3, 1e3), scale=st.floats(0.01, 100), seed=st.integers(0, 10_000),
       tau=st.floats(0.08, 0.6))
def test_affine_equivariance(c, scale, seed, tau):
    y = np.random.default_rng(seed).standard_normal(50)
    grid = np.linspace(0, 1, 17)
    base = local_linear_fit(y, grid, tau).level
    np.testing.assert_allclose(local_linear_fit(y + c, grid, tau).level, base + c, atol=1e-10 * (1 + abs(c)))
    np.testing.assert_allclose(local_linear_fit(scale * y, grid, tau).level, scale * base,
                               atol=1e-10 * scale * (1 + np.abs(base).max()))


def test_degenerate_window():
    with pytest.raises(DegenerateWindow):
        local_linear_fit(np.ones(10), [0.5], 0.05)
    with pytest.raises(DegenerateWindow):
        equivalent_weights([0.5], 1, 10, 0.5)


def _dense_smoother(m, n, tau, kern):
    x = np.arange(1, m + 1) / n
    S = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            S[i, j] = normal_equations(e, x, x[i], tau, kern)[0]
    return S


def test_hat_diagonal_matches_dense_smoother():
    m, n, tau = 30, 40, 0.2
    S = _dense_smoother(m, n, tau, BIWEIGHT)
    np.testing.assert_allclose(hat_diagonal(m, n, tau), np.diag(S), atol=1e-12)
    np.testing.assert_allclose(S.sum(axis=1), 1.0, atol=1e-12)
    assert hat_diagonal(m, n, tau).sum() == pytest.approx(np.trace(S), abs=1e-12)
    assert np.all(hat_diagonal(m, n, tau) > 0)


@pytest.mark.parametrize("tau", [1.0, 1e4])
def test_hat_diagonal_wide_bandwidth(tau):
    m = 5
    x = np.arange(1, m + 1) / m
    if tau == 1.0:
        # every point inside every window, still kernel weighted
        expected = np.diag(_dense_smoother(m, m, tau, BIWEIGHT))
    else:
        X = np.column_stack([np.ones(m), x])
        expected = np.diag(X @ np.linalg.solve(X.T @ X, X.T))
    np.testing.assert_allclose(hat_diagonal(m, m, tau), expected, atol=1e-8)


def test_bandwidth_grid_bounds():
    g = bandwidth_grid(500, lower=0.05, upper=0.5)
    assert len(g) == 20 and g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(0.5)
    assert np.all(np.diff(g) > 0)
    assert bandwidth_grid(40, lower=0.05)[0] == pytest.approx(0.1)
    assert bandwidth_grid(1000)[0] == pytest.approx(0.1)


def test_gcv_scores_match_direct_formula():
    n = 60
    y = make_rng(5, 0).standard_normal(n) + np.linspace(0, 2, n)
    cands = [0.1, 0.2, 0.4]
    scores = gcv_scores(y[:, None], cands)[:, 0]
    for tau, s in zip(cands, scores):
        S = _dense_smoother(n, n, tau, BIWEIGHT)
        rss = np.sum((y - S @ y) ** 2)
        assert s == pytest.approx(rss / n / (1 - np.trace(S) / n) ** 2, rel=1e-10)


def test_gcv_select_is_argmin_and_ties_go_small():
    y = make_rng(6, 0).standard_normal(100)
    search = gcv_select(y, bandwidth_grid(100, lower=0.05))
    assert search.scores[search.index] == search.scores.min()
    assert np.all(search.scores[search.index] <= search.scores)
    tie = BandwidthSearch([0.1, 0.2, 0.3], [1.0, 1.0, 2.0])
    assert tie.selected == 0.1
    with pytest.raises(AllDegenerate):
        BandwidthSearch([0.1, 0.2], [np.inf, np.nan])


def test_gcv_linear_part_is_free():
    # local linear reproduces the line, so only the noise drives the choice
    n = 200
    x = np.arange(1, n + 1) / n
    g = bandwidth_grid(n, lower=0.05)
    for r in range(10):
        e = make_rng(7, r).standard_normal(n)
        assert gcv_select(3 * x - 1 + 1e-8 * e, g).index == gcv_select(e, g).index


@pytest.mark.xfail(strict=True, reason="GCV on a line plus white noise equals GCV on the noise alone, "
                   "which picks an interior bandwidth for this stream")
def test_gcv_nearly_linear_data_selects_largest():
    n = 200
    x = np.arange(1, n + 1) / n
    y = 3 * x - 1 + 1e-8 * make_rng(7, 0).standard_normal(n)
    g = bandwidth_grid(n, lower=0.05)
    assert gcv_select(y, g).selected == g[-1]


def test_gcv_scale_invariant():
    y = make_rng(8, 0).standard_normal(150).cumsum() / 10
    g = bandwidth_grid(150, lower=0.05)
    assert gcv_select(y, g).selected == gcv_select(1000 * y, g).selected


@pytest.mark.xfail(strict=True, reason="GCV undersmooths under positively correlated AR(1) errors "
                   "and stops at the lower end of the grid")
def test_gcv_trend_bandwidth_interior_model_a():
    # tau strictly inside the default trend grid on at least 90% of runs
    spec = ProcessSpec("a", "I")
    g = bandwidth_grid(500)
    inside = 0
    for r in range(100):
        x, _ = simulate_path(spec, 500, make_rng(11, r))
        s = gcv_select(x, g, n=500)
        inside += 0 < s.index < len(g) - 1
    assert inside >= 90
