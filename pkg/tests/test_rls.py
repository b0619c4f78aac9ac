from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from conftest import random_dataset
from isopref.isotonic import isotonic_fit
from isopref.lattice import Dataset, InputError, LatticeSpec, is_isotonic
from isopref.rls import LinearModel, nnls, nnls_fit, rls_objective, rls_solve


def _kkt(X, t, w, g):
    r = g(X) - t
    grad_a = 2 * (w * r) @ X
    grad_b = 2 * (w @ r)
    assert abs(grad_b) <= 1e-8
    for ai, gi in zip(g.a, grad_a):
        assert ai >= 0
        if ai > 0:
            assert abs(gi) <= 1e-8
        else:
            assert gi >= -1e-8


def test_linear_model_rejects_negative_slope():
    with pytest.raises(InputError):
        LinearModel(np.array([0.1, -0.01]), 0.0)


def test_nnls_exact_linear():
    X = LatticeSpec(2, 3).points()
    g = nnls_fit(X, 0.1 * X[:, 0] + 0.05 * X[:, 1] + 0.2)
    np.testing.assert_allclose(g.a, [0.1, 0.05], atol=1e-9)
    assert abs(g.b - 0.2) <= 1e-9


def test_nnls_decreasing_chain_clamps():
    g = nnls_fit([[1], [2], [3]], [0.9, 0.5, 0.1])
    assert g.a.tolist() == [0.0]
    assert abs(g.b - 0.5) <= 1e-12


def _active_set_oracle(X, t, w):
    """Enumerate which slopes are pinned at zero; solve each reduced problem."""
    best = None
    sw = np.sqrt(w)
    for pinned in itertools.product([False, True], repeat=X.shape[1]):
        cols = [k for k in range(X.shape[1]) if not pinned[k]]
        A = np.column_stack([X[:, cols], np.ones(len(X))])
        z = np.linalg.lstsq(sw[:, None] * A, sw * t, rcond=None)[0]
        if np.any(z[:-1] < 0):
            continue
        a = np.zeros(X.shape[1])
        a[cols] = z[:-1]
        sse = w @ (X @ a + z[-1] - t) ** 2
        if best is None or sse < best[0] - 1e-15:
            best = (sse, a, z[-1])
    return best


@pytest.mark.parametrize("seed", range(25))
def test_nnls_matches_active_set_oracle(seed):
    rng = np.random.default_rng(seed)
    X = LatticeSpec(2, 4).points()
    t = rng.normal(size=16) + rng.uniform(-0.3, 0.3) * X[:, 0] + rng.uniform(-0.3, 0.3) * X[:, 1]
    w = rng.uniform(0.1, 5, 16)
    g = nnls_fit(X, t, w)
    sse, a, b = _active_set_oracle(X, t, w)
    np.testing.assert_allclose(g.a, a, atol=1e-9)
    assert abs(g.b - b) <= 1e-9
    _kkt(X, t, w, g)


@given(st.integers(0, 10**9), st.integers(1, 6))
def test_nnls_kkt(seed, d):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 40))
    X = rng.integers(1, 6, size=(n, d)).astype(float)
    t = X @ rng.normal(size=d) + rng.normal(size=n)
    w = rng.uniform(0.1, 5, n)
    _kkt(X, t, w, nnls_fit(X, t, w))


def test_nnls_free_variables():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(20, 4))
    r = A @ np.array([-1.0, 2.0, -3.0, 0.5])
    z = nnls(A, r, free=[True, False, True, False])
    np.testing.assert_allclose(z, [-1.0, 2.0, -3.0, 0.5], atol=1e-9)


def test_lambda_zero_interpolates_consistent_data():
    spec = LatticeSpec(2, 3)
    X = spec.points()
    y = X.sum(axis=1) / 6.0
    sol = rls_solve(Dataset(spec, X, y), 0.0)
    assert np.array_equal(sol.f_values, y[np.argsort(spec.encode(X))])


def test_lambda_inf_recovers_linear():
    spec = LatticeSpec(2, 4)
    X = np.repeat(spec.points(), 2, axis=0)
    y = 0.07 * X[:, 0] + 0.11 * X[:, 1] + 0.03
    sol = rls_solve(Dataset(spec, X, y), math.inf)
    np.testing.assert_allclose(sol.g.a, [0.07, 0.11], atol=1e-9)
    assert abs(sol.g.b - 0.03) <= 1e-9
    np.testing.assert_allclose(sol.f_values, sol.g(sol.summary.points), atol=0)


def test_endpoints_match_direct_solvers():
    ds = random_dataset(np.random.default_rng(5), n=60)
    s = ds.summary
    np.testing.assert_allclose(rls_solve(ds, 0).f_values, isotonic_fit(s.dag, s.mean_y, s.counts), atol=1e-9)
    g_direct = nnls_fit(ds.X, ds.y)
    g = rls_solve(ds, math.inf).g
    np.testing.assert_allclose(g.a, g_direct.a, atol=1e-9)
    assert abs(g.b - g_direct.b) <= 1e-9


def test_rejects_bad_lambda():
    ds = random_dataset(np.random.default_rng(0))
    for lam in (-1.0, float("nan")):
        with pytest.raises(InputError):
            rls_solve(ds, lam)


def _plain_alternation(ds, lam, f0, iters):
    s = ds.summary
    c = s.counts / ds.n
    mu = lam / len(s)
    f = f0
    for _ in range(iters):
        g = nnls_fit(s.points, f)
        f = isotonic_fit(s.dag, (c * s.mean_y + mu * g(s.points)) / (c + mu), c + mu)
    return rls_objective(s, f, nnls_fit(s.points, f), lam)


def test_leontief_lambda_one_long_run_oracle():
    rng = np.random.default_rng(2024)
    spec = LatticeSpec(2, 3)
    X = rng.integers(1, 4, size=(60, 2))
    y = np.minimum(1.3 * X[:, 0], 1.8 * X[:, 1]) / (3 * 1.3) + rng.normal(0, 0.2, 60)
    ds = Dataset(spec, X, y)
    obj = rls_solve(ds, 1.0).objective
    K = len(ds.summary)
    runs = [_plain_alternation(ds, 1.0, rng.uniform(-1, 2, K), 5000) for _ in range(10)]
    assert max(runs) - min(runs) <= 1e-6
    assert abs(obj - np.mean(runs)) <= 1e-6


def _qp_oracle(ds, lam):
    """Joint minimization over (f, a, b) by a generic constrained optimizer."""
    s = ds.summary
    K, d = s.points.shape
    edges = s.dag.edges

    def obj(z):
        return rls_objective(s, z[:K], _lm(z), lam)

    def _lm(z):
        return LinearModel(np.maximum(z[K : K + d], 0), z[K + d])

    cons = [{"type": "ineq", "fun": lambda z, u=u, v=v: z[v] - z[u]} for u, v in edges]
    bounds = [(None, None)] * K + [(0, None)] * d + [(None, None)]
    z0 = np.concatenate([s.mean_y, np.zeros(d), [s.mean_y.mean()]])
    res = minimize(obj, z0, method="SLSQP", constraints=cons, bounds=bounds, options={"ftol": 1e-14, "maxiter": 2000})
    return res.fun


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("lam", [0.05, 1.0, 20.0])
def test_matches_generic_qp(seed, lam):
    ds = random_dataset(np.random.default_rng(seed), m=3, n=40, noise=0.3)
    sol = rls_solve(ds, lam)
    assert is_isotonic(ds.summary.dag, sol.f_values)
    assert sol.objective <= _qp_oracle(ds, lam) + 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_trace_monotone_and_objective_consistent(seed):
    ds = random_dataset(np.random.default_rng(seed), m=5, n=300)
    prev = None
    for lam in [2.0**k for k in range(-9, 9)]:
        sol = rls_solve(ds, lam)
        tr = sol.objective_trace
        assert all(b <= a + 1e-10 for a, b in zip(tr, tr[1:]))
        assert abs(sol.objective - rls_objective(sol.summary, sol.f_values, sol.g, lam)) <= 1e-9
        pen = np.sum((sol.f_values - sol.g(sol.summary.points)) ** 2) / len(sol.summary)
        if prev is not None:
            assert pen <= prev + 1e-9
        prev = pen


@pytest.mark.parametrize("seed", range(5))
def test_initialization_independent(seed):
    ds = random_dataset(np.random.default_rng(seed), m=4, n=120)
    s = ds.summary
    for lam in (0.1, 3.0, 100.0):
        a = rls_solve(ds, lam, init=s.mean_y).objective
        b = rls_solve(ds, lam, init=nnls_fit(s.points, s.mean_y)(s.points)).objective
        assert abs(a - b) <= 1e-6


def test_deterministic():
    ds = random_dataset(np.random.default_rng(9), n=100)
    a, b = rls_solve(ds, 0.7), rls_solve(ds, 0.7)
    assert np.array_equal(a.f_values, b.f_values) and np.array_equal(a.g.a, b.g.a)
