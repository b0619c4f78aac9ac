"""Utility-family truths, noisy samples from them, and the sample-size benchmark."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .cv import check_grid, cross_validate, default_grid, fit_model
from .lattice import Dataset, InputError, LatticeSpec
from .metrics import EmpiricalDistribution, estimation_error

SAMPLE_SIZES = (50, 100, 200, 300, 400, 500, 600, 700, 800, 1000)
RESULT_COLUMNS = ("family", "N", "method", "mean_error", "se", "trials")
METHODS = ("nnls", "cv")


class Family(str, Enum):
    LINEAR = "linear"
    LEONTIEF = "leontief"
    COBB_DOUGLAS = "cobb_douglas"


@dataclass(frozen=True)
class UtilitySpec:
    """A normalized utility function on the lattice, parameterized by ``a > 0``."""

    family: Family
    a: NDArray[np.float64]
    spec: LatticeSpec

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64).ravel()
        if len(a) != self.spec.d or not np.all(a > 0):
            raise InputError(f"need {self.spec.d} positive utility weights")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "family", Family(self.family))

    def __call__(self, X: ArrayLike) -> NDArray[np.float64]:
        # on the x/m scale the top corner is all ones, so it maps to 1 exactly
        Z = self.spec.check_points(X) / self.spec.m
        a = self.a
        if self.family is Family.LINEAR:
            return np.sum(Z * a, axis=1) / np.sum(a)
        if self.family is Family.LEONTIEF:
            return (Z * a).min(axis=1) / a.min()
        return np.prod(Z**a, axis=1)


def utility_eval(u: UtilitySpec, x: ArrayLike) -> float:
    return float(u(np.asarray(x).reshape(1, -1))[0])


def sample_dataset(u: UtilitySpec, N: int, sigma: float, seed) -> tuple[Dataset, NDArray[np.float64]]:
    """Uniform inputs with Gaussian noise added to the utility.

    Returns the dataset and the noiseless utility at each record. Targets are
    left unclamped.
    """
    if N < 1 or sigma < 0:
        raise InputError("need N >= 1 and sigma >= 0")
    rng = np.random.default_rng(seed)
    X = rng.integers(1, u.spec.m + 1, size=(N, u.spec.d))
    truth = u(X)
    y = truth + rng.normal(0.0, sigma, size=N) if sigma > 0 else truth.copy()
    return Dataset(u.spec, X, y), truth


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    m: int = 5
    sigma: float = 0.2
    sample_sizes: tuple[int, ...] = SAMPLE_SIZES
    trials: int = 50
    seed: int = 0
    grid: tuple[float, ...] = field(default_factory=default_grid)

    def __post_init__(self):
        if self.sigma < 0 or self.trials < 1 or not self.sample_sizes:
            raise InputError("need sigma >= 0, trials >= 1 and at least one sample size")
        if any(int(n) < 2 for n in self.sample_sizes):
            raise InputError("sample sizes must be at least 2")
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "grid", check_grid(self.grid))

    @property
    def spec(self) -> LatticeSpec:
        return LatticeSpec(self.d, self.m)


@dataclass(frozen=True)
class ResultRow:
    family: str
    N: int
    method: str
    mean_error: float
    se: float
    trials: int


def _trial(cfg: ExperimentConfig, family: Family, N: int, trial: int) -> tuple[float, float]:
    """Estimation errors ``(nnls, cv)`` for one trial."""
    fam_id = list(Family).index(family)
    ss = np.random.SeedSequence([cfg.seed, fam_id, N, trial])
    a_seed, data_seed, split_seed = ss.spawn(3)
    spec = cfg.spec
    u = UtilitySpec(family, np.random.default_rng(a_seed).uniform(1.0, 2.0, spec.d), spec)
    ds, _ = sample_dataset(u, N, cfg.sigma, data_seed)
    P = EmpiricalDistribution.uniform(spec)
    cv_seed = int(split_seed.generate_state(1, np.uint64)[0])
    nnls = estimation_error(fit_model(ds, math.inf), u, P)
    cv = estimation_error(cross_validate(ds, cfg.grid, cv_seed).final_model, u, P)
    return nnls, cv


def _trial_args(args):
    return _trial(*args)


def default_threads() -> int:
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, family: Family | str, threads: int | None = None) -> list[ResultRow]:
    """Mean estimation error and its standard error per sample size and method.

    Every trial draws fresh weights ``a ~ U[1, 2]^d`` and a fresh dataset from
    its own seed, so results do not depend on ``threads``.
    """
    family = Family(family)
    jobs = [(cfg, family, N, t) for N in cfg.sample_sizes for t in range(cfg.trials)]
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads) as pool:
            errs = list(pool.map(_trial_args, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        errs = [_trial(*j) for j in jobs]
    E = np.asarray(errs).reshape(len(cfg.sample_sizes), cfg.trials, 2)
    rows = []
    for i, N in enumerate(cfg.sample_sizes):
        for k, method in enumerate(METHODS):
            e = E[i, :, k]
            se = float(np.std(e, ddof=1) / math.sqrt(len(e))) if len(e) > 1 else 0.0
            rows.append(ResultRow(family.value, N, method, float(np.mean(e)), se, cfg.trials))
    return rows


def run_all(cfg: ExperimentConfig, families: Iterable[Family | str] = tuple(Family), threads: int | None = None):
    return [row for fam in families for row in run_experiment(cfg, fam, threads)]


def write_results(rows: Sequence[ResultRow], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([r.family, r.N, r.method, repr(r.mean_error), repr(r.se), r.trials])


def error_table(rows: Sequence[ResultRow]) -> dict[tuple[str, int, str], ResultRow]:
    """Index rows by ``(family, N, method)``."""
    return {(r.family, r.N, r.method): r for r in rows}
