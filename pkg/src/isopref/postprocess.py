"""Turn a fitted solution into a total preference function on the lattice.

Fitted values are truncated to ``[0, 1]``. An unobserved point takes the
midpoint of the tightest bounds the observed values impose on it through the
dominance order (with the global extremes as fall-backs), which keeps the
extension isotonic. Linear-endpoint fits are instead extended by the
truncated linear function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .lattice import Dataset, LatticeSpec
from .rls import LinearModel, RlsSolution

_CHUNK = 2_000_000


class Mode(str, Enum):
    INTERPOLATE = "interpolate"
    LINEAR_EXTRAPOLATE = "linear_extrapolate"


@dataclass(frozen=True)
class PreferenceModel:
    """A fitted isotonic preference function over the whole lattice.

    Attributes:
        spec: lattice geometry and score range.
        points: observed distinct inputs, shape ``(K, d)``, sorted by code.
        values: truncated fitted values at ``points``.
        mode: how unobserved points are filled in.
        g: linear function used in ``LINEAR_EXTRAPOLATE`` mode.
        lam: regularization weight the model was fitted with.
    """

    spec: LatticeSpec
    points: NDArray[np.int64]
    values: NDArray[np.float64]
    mode: Mode
    g: LinearModel | None = None
    lam: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, self.spec.d)
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        codes = self.spec.encode(pts)
        order = np.argsort(codes, kind="stable")
        object.__setattr__(self, "points", pts[order])
        object.__setattr__(self, "values", vals[order])
        object.__setattr__(self, "_codes", codes[order])
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.mode is Mode.LINEAR_EXTRAPOLATE and self.g is None:
            raise ValueError("linear extrapolation needs a linear function")

    @property
    def trained_max(self) -> float:
        return float(self.values.max())

    @property
    def trained_min(self) -> float:
        return float(self.values.min())

    def __call__(self, X: ArrayLike) -> NDArray[np.float64]:
        return evaluate_many(self, X)


def post_process(sol: RlsSolution, ds: Dataset | LatticeSpec) -> PreferenceModel:
    """Truncate fitted values to ``[0, 1]`` and fix the extension rule."""
    spec = ds if isinstance(ds, LatticeSpec) else ds.spec
    values = np.clip(sol.f_values, 0.0, 1.0)
    mode = Mode.LINEAR_EXTRAPOLATE if math.isinf(sol.lam) else Mode.INTERPOLATE
    return PreferenceModel(spec, sol.summary.points, values, mode, sol.g, sol.lam)


def _observed_index(model: PreferenceModel, X: NDArray[np.int64]) -> NDArray[np.int64]:
    """Index into ``model.points`` for each row of ``X``, or -1 if unobserved."""
    codes = model.spec.encode(X)
    pos = np.searchsorted(model._codes, codes)
    pos = np.minimum(pos, len(model._codes) - 1)
    return np.where(model._codes[pos] == codes, pos, -1)


def evaluate_many(model: PreferenceModel, X: ArrayLike) -> NDArray[np.float64]:
    """Evaluate the model at every row of ``X``."""
    X = model.spec.check_points(X)
    idx = _observed_index(model, X)
    out = np.empty(len(X))
    hit = idx >= 0
    out[hit] = model.values[idx[hit]]
    miss = np.flatnonzero(~hit)
    if miss.size == 0:
        return out
    if model.mode is Mode.LINEAR_EXTRAPOLATE:
        out[miss] = np.clip(model.g(X[miss]), 0.0, 1.0)
        return out
    P, v = model.points, model.values
    hi, lo = model.trained_max, model.trained_min
    step = max(1, _CHUNK // max(1, len(P) * model.spec.d))
    for start in range(0, miss.size, step):
        rows = miss[start : start + step]
        Q = X[rows]
        up = np.all(P[None, :, :] >= Q[:, None, :], axis=2)
        down = np.all(P[None, :, :] <= Q[:, None, :], axis=2)
        min_a = np.where(up, v[None, :], hi).min(axis=1, initial=hi)
        max_b = np.where(down, v[None, :], lo).max(axis=1, initial=lo)
        out[rows] = 0.5 * (min_a + max_b)
    return out


def evaluate(model: PreferenceModel, x: ArrayLike) -> float:
    """Evaluate the model at a single criteria vector."""
    return float(evaluate_many(model, np.asarray(x).reshape(1, -1))[0])
