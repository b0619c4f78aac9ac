"""Exact weighted L2 isotonic regression over a DAG.

The solver works by recursive partitioning. A block of nodes is first pooled
at its weighted mean. The upper set of the block with the largest total
weighted residual is then found as a maximum-weight closure (one minimum
cut). If that weight is positive the block splits into the upper set and its
complement; in the optimum every value in the upper part is at least the
pooled mean and every value in the lower part at most, so the two halves are
solved independently. Blocks that admit no improving split keep their mean.
"""

from __future__ import annotations

from collections import deque

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .lattice import InputError, OrderDag

SPLIT_RTOL = 1e-12
ORACLE_MAX_NODES = 10
ORACLE_MAX_EDGES = 20


def _check(dag: OrderDag, targets: ArrayLike, weights: ArrayLike | None):
    t = np.asarray(targets, dtype=np.float64).ravel()
    n = dag.n_nodes
    if t.shape != (n,):
        raise InputError(f"expected {n} targets, got {t.shape}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    if w.shape != (n,):
        raise InputError(f"expected {n} weights, got {w.shape}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
        raise InputError("targets and weights must be finite")
    if np.any(w <= 0):
        raise InputError("weights must be strictly positive")
    return t, w


class _FlowNetwork:
    """Dinic's maximum flow on a small graph with float capacities."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, c: float):
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def _levels(self, s: int, t: int, eps: float):
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        to, cap = self.to, self.cap
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = to[e]
                if level[v] < 0 and cap[e] > eps:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int, eps: float) -> float:
        total = 0.0
        to, cap, adj = self.to, self.cap, self.adj
        while True:
            level = self._levels(s, t, eps)
            if level is None:
                return total
            it = [0] * self.n

            def push(u: int, f: float) -> float:
                if u == t:
                    return f
                edges = adj[u]
                while it[u] < len(edges):
                    e = edges[it[u]]
                    v = to[e]
                    if cap[e] > eps and level[v] == level[u] + 1:
                        got = push(v, min(f, cap[e]))
                        if got > 0.0:
                            cap[e] -= got
                            cap[e ^ 1] += got
                            return got
                    it[u] += 1
                return 0.0

            while True:
                f = push(s, float("inf"))
                if f <= 0.0:
                    break
                total += f

    def source_side(self, s: int, eps: float) -> list[int]:
        seen = [False] * self.n
        seen[s] = True
        stack = [s]
        while stack:
            u = stack.pop()
            for e in self.adj[u]:
                v = self.to[e]
                if not seen[v] and self.cap[e] > eps:
                    seen[v] = True
                    stack.append(v)
        return [i for i in range(self.n) if seen[i]]


def _max_weight_upper_set(k: int, edges: NDArray[np.int64], r: NDArray[np.float64]):
    """Upper set (closed under successors) of ``k`` nodes maximising ``sum(r)``."""
    src, snk = k, k + 1
    net = _FlowNetwork(k + 2)
    pos = np.maximum(r, 0.0)
    big = float(pos.sum()) + 1.0
    for u, v in edges:
        net.add_edge(int(u), int(v), big)
    for i in range(k):
        if r[i] > 0:
            net.add_edge(src, i, float(r[i]))
        elif r[i] < 0:
            net.add_edge(i, snk, float(-r[i]))
    eps = 1e-15 * big
    net.max_flow(src, snk, eps)
    side = net.source_side(src, eps)
    return np.array([i for i in side if i < k], dtype=np.int64)


def isotonic_blocks(dag: OrderDag, targets: ArrayLike, weights: ArrayLike | None = None):
    """Solve the weighted isotonic projection and return its level-set blocks.

    Returns:
        ``(values, blocks)`` where ``blocks`` is a list of node-index arrays;
        every node of a block carries the block's weighted mean target.
    """
    t, w = _check(dag, targets, weights)
    n = dag.n_nodes
    edges = dag.edges
    if n == 0:
        return t.copy(), []
    if len(edges) == 0 or np.all(t[edges[:, 0]] <= t[edges[:, 1]]):
        return t.copy(), [np.array([i]) for i in range(n)]
    values = np.empty(n)
    blocks: list[NDArray[np.int64]] = []
    local = np.full(n, -1, dtype=np.int64)
    stack = [np.arange(n)]
    while stack:
        nodes = stack.pop()
        wb, tb = w[nodes], t[nodes]
        mean = float(np.dot(wb, tb) / wb.sum())
        if len(nodes) > 1:
            local[nodes] = np.arange(len(nodes))
            keep = (local[edges[:, 0]] >= 0) & (local[edges[:, 1]] >= 0)
            sub = local[edges[keep]]
            r = wb * (tb - mean)
            upper = _max_weight_upper_set(len(nodes), sub, r) if len(sub) else np.flatnonzero(r > 0)
            local[nodes] = -1
            gain = float(r[upper].sum()) if upper.size else 0.0
            if 0 < upper.size < len(nodes) and gain > SPLIT_RTOL * float(np.abs(r).sum()):
                mask = np.zeros(len(nodes), dtype=bool)
                mask[upper] = True
                stack.append(nodes[~mask])
                stack.append(nodes[mask])
                continue
        values[nodes] = mean
        blocks.append(nodes)
    return values, blocks


def isotonic_fit(dag: OrderDag, targets: ArrayLike, weights: ArrayLike | None = None) -> NDArray[np.float64]:
    """Minimise ``sum_u w_u (f_u - t_u)^2`` subject to ``f_u <= f_v`` on every edge."""
    return isotonic_blocks(dag, targets, weights)[0]


def weighted_sse(values, targets, weights) -> float:
    return float(np.dot(weights, (np.asarray(values) - np.asarray(targets)) ** 2))


def _set_partitions(n: int):
    """Restricted growth strings of length ``n`` (each labels one set partition)."""
    labels = [0] * n

    def rec(i: int, k: int):
        if i == n:
            yield labels
            return
        for b in range(k + 1):
            labels[i] = b
            yield from rec(i + 1, max(k, b + 1))

    if n == 0:
        yield labels
    else:
        labels[0] = 0
        yield from rec(1, 1)


def isotonic_oracle(dag: OrderDag, targets: ArrayLike, weights: ArrayLike | None = None) -> NDArray[np.float64]:
    """Brute-force isotonic projection for tiny instances (test oracle).

    Every level-set structure an optimum can have arises from some set of
    active constraints, and each is a partition of the nodes whose blocks take
    their weighted mean. All partitions are enumerated; the feasible one with
    least objective wins.
    """
    t, w = _check(dag, targets, weights)
    n = dag.n_nodes
    if n > ORACLE_MAX_NODES or len(dag.edges) > ORACLE_MAX_EDGES:
        raise InputError(
            f"oracle limited to {ORACLE_MAX_NODES} nodes and {ORACLE_MAX_EDGES} constraints"
        )
    u, v = dag.edges[:, 0], dag.edges[:, 1]
    wt = w * t
    best, best_obj = None, np.inf
    for labels in _set_partitions(n):
        lab = np.array(labels)
        k = lab.max() + 1 if n else 0
        means = np.bincount(lab, weights=wt, minlength=k) / np.bincount(lab, weights=w, minlength=k)
        f = means[lab]
        if len(u) and np.any(f[u] > f[v] + 1e-12):
            continue
        obj = weighted_sse(f, t, w)
        if obj < best_obj:
            best, best_obj = f, obj
    return best

