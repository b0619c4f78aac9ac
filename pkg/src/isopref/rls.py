"""Regularized isotonic least squares, anchored to a non-negative linear fit.

For one regularization weight ``lam`` the problem is

    min_{f isotonic, g linear with a >= 0}
        (1/N) sum_j (f(x_j) - y_j)^2 + (lam/K) sum_{x in X_S} (f(x) - g(x))^2

over the ``K`` distinct inputs ``X_S``. It is jointly convex, so alternating
exact minimization over ``g`` (non-negative least squares) and over ``f``
(weighted isotonic regression) reaches the global minimum. ``lam = 0`` is
plain isotonic regression and ``lam = inf`` plain non-negative regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .isotonic import isotonic_blocks
from .lattice import Dataset, InputError, UniqueSummary, is_isotonic

MAX_ITER = 200
DECREASE_TOL = 1e-10


@dataclass(frozen=True)
class LinearModel:
    """``g(x) = a . x + b`` with non-negative slopes ``a``."""

    a: NDArray[np.float64]
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64).ravel()
        if np.any(a < 0):
            raise InputError(f"slopes must be non-negative, got {a}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def __call__(self, X: ArrayLike) -> NDArray[np.float64]:
        X = np.asarray(X, dtype=np.float64)
        return X.reshape(-1, len(self.a)) @ self.a + self.b


def nnls(A: ArrayLike, r: ArrayLike, free: ArrayLike | None = None, tol: float | None = None):
    """Lawson-Hanson active set for ``min ||A z - r||`` with ``z >= 0`` except ``free``.

    Args:
        A: design matrix, shape ``(n, p)``.
        r: right-hand side, shape ``(n,)``.
        free: boolean mask of unconstrained coefficients.
        tol: dual feasibility tolerance; defaults to a multiple of machine
            precision scaled by ``A`` and ``r``.

    Returns:
        Solution vector ``z``.
    """
    A = np.asarray(A, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    n, p = A.shape
    free = np.zeros(p, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    if tol is None:
        tol = 10 * max(n, p) * np.finfo(float).eps * (np.abs(A).max(initial=0) + 1) * (np.abs(r).max(initial=0) + 1)

    def lsq(cols):
        z = np.zeros(p)
        if cols.any():
            z[cols] = np.linalg.lstsq(A[:, cols], r, rcond=None)[0]
        return z

    passive = free.copy()
    z = lsq(passive)
    for _ in range(3 * p + 10):
        grad = A.T @ (r - A @ z)
        cand = (~passive) & (grad > tol)
        if not cand.any():
            break
        j = int(np.flatnonzero(cand)[np.argmax(grad[cand])])
        passive[j] = True
        while True:
            s = lsq(passive)
            bad = np.flatnonzero(passive & ~free & (s <= 0))
            if bad.size == 0:
                z = s
                break
            ratios = z[bad] / (z[bad] - s[bad])
            k = int(np.argmin(ratios))
            z = z + ratios[k] * (s - z)
            z[bad[k]] = 0.0
            drop = passive & ~free & (z <= 0)
            passive &= ~drop
            z[drop] = 0.0
    return z


def nnls_fit(X: ArrayLike, targets: ArrayLike, weights: ArrayLike | None = None) -> LinearModel:
    """Weighted least squares ``a . x + b`` with ``a >= 0`` and free intercept."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    t = np.asarray(targets, dtype=np.float64).ravel()
    if len(t) < 1 or len(t) != len(X):
        raise InputError("need at least one point and one target per point")
    w = np.ones(len(t)) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    # centering removes the intercept from the constrained solve exactly
    xbar = w @ X / w.sum()
    tbar = w @ t / w.sum()
    sw = np.sqrt(w)
    a = nnls(sw[:, None] * (X - xbar), sw * (t - tbar))
    return LinearModel(a, tbar - xbar @ a)


@dataclass(frozen=True)
class RlsSolution:
    """Fitted pair for one regularization weight.

    Attributes:
        f_values: isotonic values on the distinct training inputs.
        g: the linear anchor.
        lam: regularization weight (``math.inf`` for the linear endpoint).
        objective_trace: objective after every accepted step.
        iterations: number of alternation rounds.
        summary: the pooled training data the fit was computed on.
    """

    f_values: NDArray[np.float64]
    g: LinearModel
    lam: float
    objective_trace: list[float]
    iterations: int
    summary: UniqueSummary = field(repr=False)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def rls_objective(s: UniqueSummary, f: NDArray, g: LinearModel, lam: float) -> float:
    """The regularized objective evaluated at ``(f, g)``."""
    N = s.counts.sum()
    data = (s.counts @ (f - s.mean_y) ** 2 + s.within_ss.sum()) / N
    if lam == 0 or math.isinf(lam):
        return float(data)
    return float(data + lam / len(s) * np.sum((f - g(s.points)) ** 2))


def _joint_step(s: UniqueSummary, blocks, c, mu):
    """Solve the problem exactly with ``f`` tied to a fixed block partition."""
    K, d = s.points.shape
    P = len(blocks)
    label = np.empty(K, dtype=np.int64)
    for i, b in enumerate(blocks):
        label[b] = i
    sc, sm = np.sqrt(c), math.sqrt(mu)
    W = np.bincount(label, c, P) + mu * np.bincount(label, minlength=P)
    # Stacked residual rows: sqrt(c)(phi - ybar) over sqrt(mu)(phi - a.x - b).
    # The block values phi enter through disjoint indicator columns, so they
    # are eliminated exactly by projecting every column onto their complement.
    top = np.zeros((K, d + 2))
    bot = np.zeros((K, d + 2))
    bot[:, :d] = -sm * s.points
    bot[:, d] = -sm
    top[:, d + 1] = sc * s.mean_y
    proj = np.stack([np.bincount(label, sc * top[:, k] + sm * bot[:, k], P) for k in range(d + 2)], axis=1) / W[:, None]
    top -= sc[:, None] * proj[label]
    bot -= sm * proj[label]
    A = np.vstack([top, bot])
    free = np.zeros(d + 1, dtype=bool)
    free[d] = True
    z = nnls(A[:, : d + 1], A[:, d + 1], free)
    g = LinearModel(z[:d], z[d])
    phi = (np.bincount(label, c * s.mean_y, P) + mu * np.bincount(label, g(s.points), P)) / W
    return phi[label], g


def rls_solve(ds: Dataset, lam: float, init: ArrayLike | None = None, max_iter: int = MAX_ITER) -> RlsSolution:
    """Fit the regularized problem for one ``lam`` (``math.inf`` allowed).

    Args:
        ds: training data.
        lam: regularization weight, ``>= 0`` or ``math.inf``.
        init: optional starting values for ``f`` on the distinct inputs;
            defaults to the isotonic fit of the pooled means.
        max_iter: cap on alternation rounds.
    """
    lam = float(lam)
    if math.isnan(lam) or lam < 0:
        raise InputError(f"lambda must be >= 0 or inf, got {lam!r}")
    s = ds.summary
    N = int(s.counts.sum())
    K = len(s)
    c = s.counts / N

    if math.isinf(lam):
        g = nnls_fit(s.points, s.mean_y, s.counts)
        f = g(s.points)
        return RlsSolution(f, g, lam, [rls_objective(s, f, g, lam)], 0, s)

    f = isotonic_blocks(s.dag, s.mean_y, c)[0]
    if lam == 0:
        g = nnls_fit(s.points, f)
        return RlsSolution(f, g, lam, [rls_objective(s, f, g, lam)], 0, s)
    if init is not None:
        f = np.asarray(init, dtype=np.float64).ravel()
        if f.shape != (K,):
            raise InputError(f"init needs {K} values")

    mu = lam / K
    w = c + mu
    g = nnls_fit(s.points, f)
    trace = [rls_objective(s, f, g, lam)]
    it = 0
    for it in range(1, max_iter + 1):
        g = nnls_fit(s.points, f)
        f, blocks = isotonic_blocks(s.dag, (c * s.mean_y + mu * g(s.points)) / w, w)
        obj = rls_objective(s, f, g, lam)
        # exact solve with the current level sets; kept only if it helps
        f2, g2 = _joint_step(s, blocks, c, mu)
        if is_isotonic(s.dag, f2, 0.0):
            obj2 = rls_objective(s, f2, g2, lam)
            if obj2 < obj:
                f, g, obj = f2, g2, obj2
        decrease = trace[-1] - obj
        trace.append(obj)
        if decrease < DECREASE_TOL:
            break
    return RlsSolution(f, g, lam, trace, it, s)
