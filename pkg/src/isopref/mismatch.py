"""Isotonic matrices that linear and additive models cannot fit or rank.

Matrices are indexed ``M[i - 1, j - 1]`` with ``i`` the first criterion and
``j`` the second, so a lattice point ``(i, j)`` reads entry ``(i, j)``.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linprog

from .isotonic import isotonic_fit
from .lattice import InputError, LatticeSpec, OrderDag
from .metrics import kendall_tau_distance
from .rls import nnls_fit

_B4 = np.array([[1, 2, 6, 12], [3, 5, 7, 12], [4, 8, 11, 12], [9, 10, 12, 12]]) / 12.0
_B3 = np.array([[1, 2, 6], [3, 5, 7], [4, 8, 9]]) / 10.0
GAM_BOX = 1e6
DEMO_COLUMNS = ("construction", "m", "nnls_mse", "iso_residual", "kendall_tau")

# (row, col) one-based, each chain must be strictly increasing
INTERACTION_CHAINS = (
    ((1, 2), (2, 1), (3, 1), (2, 2)),
    ((2, 2), (1, 3), (2, 3), (3, 2)),
    ((3, 1), (2, 2), (3, 2), (4, 1)),
    ((2, 3), (3, 2), (4, 2), (3, 3)),
)


@dataclass(frozen=True)
class CounterexampleMatrix:
    entries: NDArray[np.float64]
    provenance: str

    def __post_init__(self):
        M = np.asarray(self.entries, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InputError("counterexample matrices are square")
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def as_function(self):
        """The matrix as a function on ``[m]^2``."""
        M = self.entries

        def f(X):
            X = np.asarray(X, dtype=np.int64).reshape(-1, 2)
            return M[X[:, 0] - 1, X[:, 1] - 1]

        return f


def is_bivariate_isotonic(M: ArrayLike) -> bool:
    M = np.asarray(M)
    return bool(np.all(np.diff(M, axis=0) >= 0) and np.all(np.diff(M, axis=1) >= 0))


def build_B4() -> CounterexampleMatrix:
    return CounterexampleMatrix(_B4.copy(), "B4")


def _block_index(m: int, parts: int) -> NDArray[np.int64]:
    """Zero-based block of each one-based index ``i``: ``ceil(parts * i / m) - 1``."""
    i = np.arange(1, m + 1)
    return -((-parts * i) // m) - 1


def build_M_interactions(m: int) -> CounterexampleMatrix:
    """Block-constant ``m x m`` expansion of ``B4``; ``m`` must be a multiple of 4."""
    if m < 4 or m % 4:
        raise InputError(f"m must be a positive multiple of 4, got {m}")
    k = _block_index(m, 4)
    return CounterexampleMatrix(_B4[np.ix_(k, k)], f"M_interactions({m})")


def build_M_ranking(m: int) -> CounterexampleMatrix:
    """Block expansion of ``B3`` plus a small in-block tie-breaking ramp.

    The ramp is ``E[i, j] = i / (10 m) + j / (10 m^2)`` on block-local indices.
    """
    if m < 3 or m % 3:
        raise InputError(f"m must be a positive multiple of 3, got {m}")
    k = _block_index(m, 3)
    h = np.arange(1, m + 1) - (m // 3) * k
    E = h[:, None] / (10 * m) + h[None, :] / (10 * m * m)
    return CounterexampleMatrix(_B3[np.ix_(k, k)] + E, f"M_ranking({m})")


def build_unique_tensor(spec: LatticeSpec) -> NDArray[np.float64]:
    """Isotonic tensor with distinct entries ``sum_k m^(k-1) i_k / (d m^d)``.

    Returned with shape ``(m,) * d`` and indexed by ``i - 1``.
    """
    if spec.size > 10**6:
        raise InputError(f"tensor with {spec.size} entries is too large")
    X = spec.points()
    vals = (X @ spec.m ** np.arange(spec.d)) / (spec.d * spec.size)
    return vals.reshape((spec.m,) * spec.d, order="F")


def check_interaction_chains(M: ArrayLike) -> tuple[bool, bool, bool, bool]:
    """Whether each of the four strict chains holds on a ``4 x 4`` matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (4, 4):
        raise InputError("need a 4 x 4 matrix")
    out = []
    for chain in INTERACTION_CHAINS:
        v = [M[i - 1, j - 1] for i, j in chain]
        out.append(all(a < b for a, b in zip(v, v[1:])))
    return tuple(out)


def gam_orderable(M: ArrayLike, margin: float = 1.0) -> bool:
    """Whether some ``a_i + b_j`` orders the entries of ``M`` exactly as ``M`` does.

    Decided as feasibility of a linear program: every pair of cells must be
    separated by at least ``margin`` in the right direction, with all
    variables boxed in ``[-1e6, 1e6]``. Works for any square size.
    """
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise InputError("need a square matrix")
    if len(np.unique(M)) != M.size:
        raise InputError("entries must be distinct for the order to be strict")
    cells = list(itertools.product(range(n), repeat=2))
    A = []
    for (i, j), (k, l) in itertools.combinations(cells, 2):
        lo, hi = ((i, j), (k, l)) if M[i, j] < M[k, l] else ((k, l), (i, j))
        row = np.zeros(2 * n)
        # lo_sum - hi_sum <= -margin
        row[lo[0]] += 1
        row[n + lo[1]] += 1
        row[hi[0]] -= 1
        row[n + hi[1]] -= 1
        A.append(row)
    res = linprog(
        np.zeros(2 * n),
        A_ub=np.array(A),
        b_ub=np.full(len(A), -float(margin)),
        bounds=[(-GAM_BOX, GAM_BOX)] * (2 * n),
        method="highs",
    )
    return res.status == 0


def ols_2x2_closed_form(counts: Sequence[float], alphas: Sequence[float]) -> tuple[float, float]:
    """No-intercept least squares ``a1 x1 + a2 x2`` on binary criteria.

    Args:
        counts: ``(N00, N10, N01, N11)`` record counts per input.
        alphas: ``(a00, a10, a01, a11)`` noiseless targets per input.

    Returns:
        ``(a1, a2)``.
    """
    _, n10, n01, n11 = (float(c) for c in counts)
    _, t10, t01, t11 = (float(a) for a in alphas)
    if min(n10, n01, n11) < 0 or sum(c > 0 for c in (n11, n01, n10)) < 2:
        raise InputError("at least two of N11, N01, N10 must be positive")
    s1 = n10 * t10 + n11 * t11
    s2 = n01 * t01 + n11 * t11
    den = n11 * (n01 + n10) + n10 * n01
    a1 = ((n01 + n11) * s1 - n11 * s2) / den
    a2 = (-n11 * s1 + (n11 + n10) * s2) / den
    return a1, a2


def ols_2x2_numeric(counts: Sequence[float], alphas: Sequence[float]) -> tuple[float, float]:
    """The same fit by weighted least squares on the four inputs."""
    X = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=np.float64)
    w = np.sqrt(np.asarray(counts, dtype=np.float64))
    a = np.linalg.lstsq(w[:, None] * X, w * np.asarray(alphas, dtype=np.float64), rcond=None)[0]
    return float(a[0]), float(a[1])


def prop3_sign_condition(n10: float, n01: float, n11: float, alpha: float) -> bool:
    """``a1 < a2`` predicted for symmetric targets ``a10 = a01 = alpha``, ``a11 = 1``."""
    return n11 * (1 - 2 * alpha) * (n01 - n10) < 0


def matrix_dag(m: int) -> OrderDag:
    return OrderDag.from_points(LatticeSpec(2, m).points())


@dataclass(frozen=True)
class BiasRow:
    construction: str
    m: int
    nnls_mse: float
    iso_residual: float
    kendall_tau: float


def bias_report(C: CounterexampleMatrix) -> BiasRow:
    """Fit one record per cell, noiselessly, with NNLS and with exact isotonic regression.

    ``nnls_mse`` is the mean squared per-entry error of the linear fit,
    ``iso_residual`` the largest absolute error of the isotonic fit, and
    ``kendall_tau`` the ranking distance from the linear fit to the matrix.
    """
    m = C.m
    spec = LatticeSpec(2, m)
    X = spec.points()
    truth = C.as_function()
    y = truth(X)
    g = nnls_fit(X, y)
    mse = float(np.mean((g(X) - y) ** 2))
    iso = isotonic_fit(OrderDag.from_points(X), y)
    resid = float(np.max(np.abs(iso - y)))
    tau = kendall_tau_distance(g, truth, spec)
    return BiasRow(C.provenance.split("(")[0], m, mse, resid, tau)


def demo_bias(m: int) -> list[BiasRow]:
    """Bias rows for every construction defined at this ``m``."""
    rows = []
    if m % 4 == 0:
        rows.append(bias_report(build_M_interactions(m)))
    if m % 3 == 0:
        rows.append(bias_report(build_M_ranking(m)))
    if not rows:
        raise InputError(f"no construction is defined for m={m}; use a multiple of 3 or 4")
    return rows


def write_bias(rows: Sequence[BiasRow], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(DEMO_COLUMNS)
    for r in rows:
        w.writerow([r.construction, r.m, repr(r.nnls_mse), repr(r.iso_residual), repr(r.kendall_tau)])


def feasibility_checks() -> dict[str, object]:
    """The construction premises, evaluated."""
    return {
        "B4_chains": check_interaction_chains(build_B4().entries),
        "B4_isotonic": is_bivariate_isotonic(build_B4().entries),
        "M_ranking3_gam_orderable": gam_orderable(build_M_ranking(3).entries),
    }


INTERACTION_FLOOR = float(Fraction(1, 4 * 16 * 288))
RANKING_FLOOR = 2 / 162
