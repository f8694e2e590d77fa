from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankmatch.matcher import (
    ConstantTemplate, DegenerateSignal, Method, RefineOpts, correlate_grid, estimate,
    estimate_least_squares, golden_section_max, objective, objective_rank, wrap_error,
)
from rankmatch.noise import CAUCHY, GAUSSIAN, T3
from rankmatch.sampling import Signal, generate_signal, rank_transform
from rankmatch.templates import TEMPLATE_A, TEMPLATE_B, TEMPLATE_C, piecewise_linear

TEMPLATES = [TEMPLATE_A, TEMPLATE_B, TEMPLATE_C]


def direct_correlation(w, t):
    n = len(w)
    i = np.arange(1, n + 1)
    return np.array([np.dot(w, t.eval((i - k) / n)) / n for k in range(n)])


def test_objective_rank_example():
    assert objective_rank(0.0, [1, 2, 3, 4], TEMPLATE_A) == pytest.approx(0.125, abs=1e-15)
    r = rank_transform(np.random.default_rng(0).normal(size=50))
    assert objective_rank(1.3, r, TEMPLATE_B) == pytest.approx(objective_rank(0.3, r, TEMPLATE_B),
                                                               abs=1e-14)


@pytest.mark.parametrize("seed", range(100))
def test_fft_matches_direct_sum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 300))
    t = TEMPLATES[seed % 3]
    w = rng.normal(size=n) * rng.uniform(0.1, 10)
    assert np.max(np.abs(correlate_grid(w, t) - direct_correlation(w, t))) <= 1e-10


def test_grid_matches_objective_rank():
    rng = np.random.default_rng(5)
    r = rank_transform(rng.normal(size=128))
    grid = correlate_grid(r / 128, TEMPLATE_C)
    direct = [objective_rank(k / 128, r, TEMPLATE_C) for k in range(128)]
    assert np.max(np.abs(grid - direct)) <= 1e-12


def test_correlate_grid_properties():
    u = TEMPLATE_A.eval(np.arange(1, 101) / 100)
    c = correlate_grid(u, TEMPLATE_A)
    assert int(np.argmax(c)) == 0
    w = np.random.default_rng(2).normal(size=100) + 3 * u
    k0 = int(np.argmax(correlate_grid(w, TEMPLATE_A)))
    for j in (1, 17, 99):
        assert int(np.argmax(correlate_grid(np.roll(w, j), TEMPLATE_A))) == (k0 + j) % 100
    with pytest.raises(ValueError):
        correlate_grid([1.0], TEMPLATE_A)


@pytest.mark.parametrize("method", list(Method))
def test_noiseless_recovery_large_n(method):
    s = generate_signal(TEMPLATE_A, 0.37, 10000)
    est = estimate(s, TEMPLATE_A, method)
    assert abs(wrap_error(est.theta_hat, 0.37)) <= 1e-4


@pytest.mark.parametrize("t", TEMPLATES, ids="ABC")
@pytest.mark.parametrize("method", list(Method))
def test_translation_equivariance(t, method):
    n = 600
    base = generate_signal(t, 0.2, n, GAUSSIAN, 3)
    e0 = estimate(base, t, method)
    for j in (1, 250, 599):
        moved = Signal(np.roll(base.values, j))
        ej = estimate(moved, t, method)
        assert abs(wrap_error(ej.theta_hat, e0.theta_hat + j / n)) <= 1e-9
        assert ej.grid_argmax == (e0.grid_argmax + j) % n


@pytest.mark.parametrize("seed", range(5))
def test_rank_estimate_bit_identical_under_distortion(seed):
    s = generate_signal(TEMPLATE_B, 0.61, 1500, T3, seed)
    ref = estimate(s, TEMPLATE_B, Method.RANK)
    w_ref = rank_transform(s.values) / s.n
    for g in (np.arctan, lambda x: x**3 + x, lambda x: np.exp(x / 4)):
        d = Signal(g(s.values))
        assert np.array_equal(correlate_grid(rank_transform(d.values) / d.n, TEMPLATE_B),
                              correlate_grid(w_ref, TEMPLATE_B))
        assert estimate(d, TEMPLATE_B, Method.RANK) == ref


@pytest.mark.parametrize("seed", range(100))
def test_pearson_grid_argmax_equals_least_squares(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(64, 4097))
    t = TEMPLATES[seed % 3]
    noise = (GAUSSIAN, T3, CAUCHY)[seed % 3 if seed % 7 else 0]
    s = generate_signal(t, rng.uniform(), n, noise, seed)
    corr = estimate(s, t, Method.PEARSON, RefineOpts(refine=False))
    ls = estimate_least_squares(s, t, RefineOpts(refine=False))
    assert corr.grid_argmax == ls.grid_argmax


@pytest.mark.parametrize("seed", range(10))
def test_pearson_refined_close_to_least_squares(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(64, 2049))
    opts = RefineOpts()
    for t in TEMPLATES:
        s = generate_signal(t, rng.uniform(), n, GAUSSIAN, seed)
        corr = estimate(s, t, Method.PEARSON, opts)
        ls = estimate_least_squares(s, t, opts)
        gap = abs(wrap_error(corr.theta_hat, ls.theta_hat))
        # sum_i f(x_i - theta)^2 is flat in theta only up to aliasing; for the smooth
        # bump that is far below tol, for the kinked templates it moves by O(1/n) within a cell
        assert gap <= (opts.tol if t is TEMPLATE_C else 1.0 / n)


def brute_force_theta(w, t, m=10**6):
    n = len(w)
    thetas = np.arange(m) / m
    x = np.arange(1, n + 1) / n
    best, best_val = 0.0, -np.inf
    for lo in range(0, m, 20000):
        th = thetas[lo:lo + 20000]
        vals = t.eval(x[None, :] - th[:, None]) @ w / n
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best, best_val = th[j], vals[j]
    return best, best_val


@pytest.mark.parametrize("case", range(6))
def test_brute_force_equivalence(case):
    rng = np.random.default_rng(77 + case)
    n = int(rng.integers(8, 65))
    t = TEMPLATES[case % 3]
    method = Method.RANK if case < 3 else Method.PEARSON
    s = generate_signal(t, rng.uniform(), n, GAUSSIAN, case)
    opts = RefineOpts()
    est = estimate(s, t, method, opts)
    w = rank_transform(s.values) / n if method is Method.RANK else s.values
    bt, bv = brute_force_theta(w, t)
    assert est.objective_value >= bv - 1e-12
    # the argmax may be a flat top; then any maximizer is acceptable
    if abs(wrap_error(est.theta_hat, bt)) > 2e-6 + opts.tol:
        assert objective(bt, w, t) == pytest.approx(est.objective_value, abs=1e-12)


@pytest.mark.parametrize("t", TEMPLATES, ids="ABC")
@pytest.mark.parametrize("noise", [GAUSSIAN, CAUCHY], ids=["gaussian", "cauchy"])
def test_result_invariants(t, noise):
    for seed in range(5):
        s = generate_signal(t, 0.9, 997, noise, seed)
        for method in Method:
            w = rank_transform(s.values) / s.n if method is Method.RANK else s.values
            grid = correlate_grid(w, t)
            est = estimate(s, t, method)
            assert 0.0 <= est.theta_hat < 1.0
            assert est.objective_value >= grid.max() - 1e-12
            assert est.objective_value == pytest.approx(objective(est.theta_hat, w, t), abs=1e-12)
            assert abs(wrap_error(est.theta_hat, est.grid_argmax / s.n)) <= 1.0 / s.n
            assert grid[est.grid_argmax] == pytest.approx(grid.max(), abs=1e-12)


def test_refine_off_reports_grid_point():
    s = generate_signal(TEMPLATE_C, 0.3333, 500, GAUSSIAN, 1)
    est = estimate(s, TEMPLATE_C, Method.RANK, RefineOpts(refine=False))
    assert est.theta_hat == est.grid_argmax / 500
    assert est.refine_iterations == 0


def test_grid_ties_pick_smallest_index():
    # period-4 weights against a quarter-period tent: shifts 3/8 and 7/8 tie exactly
    s = Signal(np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0]))
    t = piecewise_linear([[0.0, 0.0], [0.25, 1.0], [0.5, 0.0]])
    grid = correlate_grid(s.values, t)
    assert grid[3] == pytest.approx(grid[7], abs=1e-15)
    assert estimate(s, t, Method.PEARSON, RefineOpts(refine=False)).grid_argmax == 3
    assert estimate(s, t, Method.RANK, RefineOpts(refine=False)).grid_argmax == 3


def test_errors():
    flat = piecewise_linear([[0.0, 1.0], [0.5, 1.0]])
    s = generate_signal(TEMPLATE_A, 0.1, 100, GAUSSIAN, 0)
    for method in Method:
        with pytest.raises(ConstantTemplate):
            estimate(s, flat, method)
    with pytest.raises(ConstantTemplate):
        estimate_least_squares(s, flat)
    const = Signal(np.full(50, 2.5))
    with pytest.raises(DegenerateSignal):
        estimate(const, TEMPLATE_A, Method.RANK)
    assert 0.0 <= estimate(const, TEMPLATE_A, Method.PEARSON).theta_hat < 1.0
    with pytest.raises(ValueError):
        estimate(s, TEMPLATE_A, "spearman")


def test_concurrent_estimates_agree():
    sigs = [generate_signal(TEMPLATE_B, 0.4, 700 + 13 * i, GAUSSIAN, i) for i in range(16)]
    serial = [estimate(s, TEMPLATE_B) for s in sigs]
    with ThreadPoolExecutor(8) as ex:
        threaded = list(ex.map(lambda s: estimate(s, TEMPLATE_B), sigs))
    assert threaded == serial


def test_golden_section_and_wrap():
    x, fx, it = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, 1e-9)
    assert x == pytest.approx(0.3, abs=1e-8) and it > 0
    assert wrap_error(0.99, 0.01) == pytest.approx(-0.02)
    assert wrap_error(0.01, 0.99) == pytest.approx(0.02)
    assert wrap_error(0.5, 0.0) == 0.5
    np.testing.assert_allclose(wrap_error(np.array([0.2, 0.9]), 0.1), [0.1, -0.2])


@given(st.floats(0, 1, exclude_max=True), st.integers(500, 5000),
       st.sampled_from(TEMPLATES), st.sampled_from(list(Method)))
def test_noiseless_exact_recovery(theta, n, t, method):
    est = estimate(generate_signal(t, theta, n), t, method)
    assert abs(wrap_error(est.theta_hat, theta)) <= 1.0 / n + 1e-7
