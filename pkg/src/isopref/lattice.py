"""Criteria lattice geometry, datasets and the dominance order.

A point of the lattice ``[m]^d`` is an integer vector with every coordinate in
``1..m``. Points are compared coordinate-wise; the resulting partial order is
what every fitted preference function must respect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

MAX_LATTICE_BITS = 40
ISOTONIC_TOL = 1e-12


class InputError(ValueError):
    """Raised when an input violates a precondition of the operation."""


class RecordRangeError(InputError):
    """Raised when a raw overall score falls outside the configured range."""

    def __init__(self, index: int, value: float, lo: float, hi: float):
        super().__init__(f"record {index}: score {value!r} outside [{lo}, {hi}]")
        self.index = index
        self.value = value


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of the criteria lattice and the raw score range.

    Attributes:
        d: number of criteria.
        m: number of score levels per criterion.
        score_min, score_max: range of the raw overall score.
    """

    d: int
    m: int
    score_min: float = 0.0
    score_max: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InputError(f"d must be an integer >= 1, got {self.d!r}")
        if int(self.m) != self.m or self.m < 2:
            raise InputError(f"m must be an integer >= 2, got {self.m!r}")
        if not (math.isfinite(self.score_min) and math.isfinite(self.score_max)):
            raise InputError("score range must be finite")
        if not self.score_min < self.score_max:
            raise InputError(
                f"score_min must be < score_max, got [{self.score_min}, {self.score_max}]"
            )
        if self.d * math.log2(self.m) > MAX_LATTICE_BITS:
            raise InputError(f"lattice [{self.m}]^{self.d} is too large")

    @property
    def size(self) -> int:
        return self.m**self.d

    def points(self) -> NDArray[np.int64]:
        """All lattice points, shape ``(m**d, d)``, first coordinate varying fastest."""
        grids = np.meshgrid(*([np.arange(1, self.m + 1)] * self.d), indexing="ij")
        return np.stack([g.ravel(order="F") for g in grids], axis=1).astype(np.int64)

    def encode(self, X: ArrayLike) -> NDArray[np.int64]:
        """Integer code of each point (base-``m`` digits ``x_i - 1``)."""
        X = np.asarray(X, dtype=np.int64).reshape(-1, self.d)
        radix = self.m ** np.arange(self.d, dtype=np.int64)
        return (X - 1) @ radix

    def check_points(self, X: ArrayLike) -> NDArray[np.int64]:
        """Validate and return points as an ``(n, d)`` int array."""
        arr = np.asarray(X)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise InputError(f"expected points with {self.d} coordinates, got shape {arr.shape}")
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise InputError("criteria coordinates must be integers")
        arr = arr.astype(np.int64)
        bad = (arr < 1) | (arr > self.m)
        if bad.any():
            row = int(np.argwhere(bad)[0, 0])
            raise InputError(f"point {tuple(arr[row])} has a coordinate outside [1, {self.m}]")
        return arr

    def rescale(self, y_raw: ArrayLike) -> NDArray[np.float64]:
        """Affine map of raw scores onto ``[0, 1]``; raises on out-of-range values."""
        y_raw = np.atleast_1d(np.asarray(y_raw, dtype=np.float64))
        bad = ~((y_raw >= self.score_min) & (y_raw <= self.score_max))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise RecordRangeError(i, float(y_raw[i]), self.score_min, self.score_max)
        return (y_raw - self.score_min) / (self.score_max - self.score_min)

    def unscale(self, y: ArrayLike) -> NDArray[np.float64]:
        y = np.asarray(y, dtype=np.float64)
        return self.score_min + y * (self.score_max - self.score_min)


class Ordering(str, Enum):
    EQUAL = "equal"
    DOMINATES = "dominates"
    DOMINATED = "dominated"
    INCOMPARABLE = "incomparable"


def compare(a: Sequence[int], b: Sequence[int]) -> Ordering:
    """Coordinate-wise comparison of two criteria vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    ge = bool(np.all(a >= b))
    le = bool(np.all(a <= b))
    if ge and le:
        return Ordering.EQUAL
    if ge:
        return Ordering.DOMINATES
    if le:
        return Ordering.DOMINATED
    return Ordering.INCOMPARABLE


def dominance_matrix(X: NDArray, Y: NDArray | None = None) -> NDArray[np.bool_]:
    """``D[i, j]`` is True when ``X[i] <= Y[j]`` coordinate-wise."""
    Y = X if Y is None else Y
    return np.all(X[:, None, :] <= Y[None, :, :], axis=2)


@dataclass(frozen=True)
class OrderDag:
    """Covering relation of the dominance order on a set of distinct points.

    ``edges`` is an ``(E, 2)`` array of node indices ``(u, v)`` with
    ``points[u] < points[v]`` and no node strictly in between.
    """

    points: NDArray[np.int64]
    edges: NDArray[np.int64]

    def __post_init__(self):
        E = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        n = len(self.points)
        if E.size and (E.min() < 0 or E.max() >= n):
            raise InputError("edge endpoint out of range")
        if topological_order(n, E) is None:
            raise InputError("order graph contains a cycle")
        object.__setattr__(self, "edges", E)

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @classmethod
    def from_points(cls, points: ArrayLike) -> "OrderDag":
        P = np.asarray(points, dtype=np.int64)
        if P.ndim != 2:
            raise InputError("points must be a 2-d array")
        if len(np.unique(P, axis=0)) != len(P):
            raise InputError("points must be distinct")
        return cls(P, covering_edges(P))

    @classmethod
    def from_edges(cls, n_nodes: int, edges: ArrayLike) -> "OrderDag":
        """A DAG given directly by its edges (nodes carry no coordinates).

        Raises ``InputError`` when the edges contain a cycle.
        """
        return cls(np.zeros((n_nodes, 0), dtype=np.int64), edges)


def covering_edges(points: NDArray[np.int64]) -> NDArray[np.int64]:
    """Transitive reduction of strict dominance among distinct ``points``.

    For each node the strict upper set is found by one vectorised comparison;
    its minimal elements are the covers.
    """
    n = len(points)
    if n <= 1:
        return np.zeros((0, 2), dtype=np.int64)
    # sum of coordinates strictly increases along the order
    levels = points.sum(axis=1)
    out = []
    for u in range(n):
        above = np.flatnonzero((levels > levels[u]) & np.all(points >= points[u], axis=1))
        if above.size == 0:
            continue
        if above.size == 1:
            out.append(np.array([[u, above[0]]]))
            continue
        sub = points[above]
        # w strictly below v inside the upper set means v is not a cover
        below = np.all(sub[:, None, :] <= sub[None, :, :], axis=2)
        np.fill_diagonal(below, False)
        covers = above[~below.any(axis=0)]
        out.append(np.column_stack([np.full(covers.size, u), covers]))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(out).astype(np.int64)


def topological_order(n_nodes: int, edges: NDArray[np.int64]) -> list[int] | None:
    """Kahn's algorithm; ``None`` if the graph has a cycle."""
    indeg = np.zeros(n_nodes, dtype=np.int64)
    succ: list[list[int]] = [[] for _ in range(n_nodes)]
    for u, v in edges:
        succ[u].append(int(v))
        indeg[v] += 1
    stack = [i for i in range(n_nodes) if indeg[i] == 0]
    order = []
    while stack:
        u = stack.pop()
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return order if len(order) == n_nodes else None


@dataclass(frozen=True)
class UniqueSummary:
    """Per-point aggregates of a dataset over its distinct inputs.

    Attributes:
        points: distinct inputs, shape ``(K, d)``, sorted by lattice code.
        counts: number of records at each point.
        mean_y: mean rescaled score at each point.
        within_ss: sum of squared deviations from ``mean_y`` at each point.
        dag: covering relation over ``points``.
        inverse: index into ``points`` for every record.
    """

    points: NDArray[np.int64]
    counts: NDArray[np.int64]
    mean_y: NDArray[np.float64]
    within_ss: NDArray[np.float64]
    dag: OrderDag
    inverse: NDArray[np.int64]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Dataset:
    """Evaluation records: criteria vectors ``X`` and rescaled scores ``y``.

    ``y`` is kept as given (synthetic data may carry noise outside ``[0, 1]``);
    use :meth:`from_raw` to rescale raw overall scores with range checking.
    Duplicate inputs are kept; they are only pooled by :attr:`summary`.
    """

    spec: LatticeSpec
    X: NDArray[np.int64]
    y: NDArray[np.float64]
    y_raw: NDArray[np.float64] | None = field(default=None, compare=False)

    def __post_init__(self):
        X = self.spec.check_points(self.X)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if len(X) < 1:
            raise InputError("dataset needs at least one record")
        if len(y) != len(X):
            raise InputError(f"{len(X)} inputs but {len(y)} scores")
        if not np.all(np.isfinite(y)):
            raise InputError("scores must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_raw(cls, spec: LatticeSpec, X: ArrayLike, y_raw: ArrayLike) -> "Dataset":
        y_raw = np.asarray(y_raw, dtype=np.float64).ravel()
        return cls(spec, np.asarray(X), spec.rescale(y_raw), y_raw)

    @property
    def n(self) -> int:
        return len(self.y)

    def __len__(self) -> int:
        return self.n

    def subset(self, idx: ArrayLike) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        raw = None if self.y_raw is None else self.y_raw[idx]
        return Dataset(self.spec, self.X[idx], self.y[idx], raw)

    @cached_property
    def summary(self) -> UniqueSummary:
        return summarize(self)


def summarize(ds: Dataset) -> UniqueSummary:
    """Pool records by distinct input and build the covering DAG over them."""
    codes = ds.spec.encode(ds.X)
    uniq, first, inverse, counts = np.unique(
        codes, return_index=True, return_inverse=True, return_counts=True
    )
    inverse = inverse.ravel()
    points = ds.X[first]
    # shift by each point's first score so identical records pool exactly
    shift = ds.y[first]
    dev = ds.y - shift[inverse]
    mean_dev = np.bincount(inverse, weights=dev, minlength=len(uniq)) / counts
    mean_y = shift + mean_dev
    within = np.bincount(inverse, weights=(dev - mean_dev[inverse]) ** 2, minlength=len(uniq))
    dag = OrderDag(points, covering_edges(points))
    return UniqueSummary(points, counts.astype(np.int64), mean_y, within, dag, inverse)


def is_isotonic(dag: OrderDag, values: ArrayLike, tol: float = ISOTONIC_TOL) -> bool:
    """True iff ``values[u] <= values[v] + tol`` on every edge of ``dag``."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (dag.n_nodes,):
        raise InputError(f"expected {dag.n_nodes} values, got shape {values.shape}")
    if np.isnan(values).any():
        raise InputError("missing node value")
    if len(dag.edges) == 0:
        return True
    u, v = dag.edges[:, 0], dag.edges[:, 1]
    return bool(np.all(values[u] <= values[v] + tol))
