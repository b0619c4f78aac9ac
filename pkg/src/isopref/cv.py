"""Hold-out selection of the regularization weight, then a full-data refit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .lattice import Dataset, InputError
from .postprocess import PreferenceModel, evaluate_many, post_process
from .rls import rls_solve

TRAIN_FRACTION = 0.75


def default_grid() -> tuple[float, ...]:
    """``{0} U {2^k : -9 <= k <= 8} U {inf}``, 20 values in increasing order."""
    return (0.0, *(2.0**k for k in range(-9, 9)), math.inf)


def check_grid(grid: Iterable[float]) -> tuple[float, ...]:
    values = tuple(float(v) for v in grid)
    if any(math.isnan(v) or v < 0 for v in values):
        raise InputError("regularization weights must be >= 0 or inf")
    if 0.0 not in values or math.inf not in values:
        raise InputError("the grid must contain both 0 and inf")
    return values


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse a comma separated list such as ``"0,0.5,1,inf"``."""
    try:
        return check_grid(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad lambda grid {text!r}") from exc


def split(ds: Dataset, seed: int, train_fraction: float = TRAIN_FRACTION) -> tuple[Dataset, Dataset]:
    """Random partition into ``ceil(train_fraction * N)`` training records and the rest."""
    if ds.n < 2:
        raise InputError("need at least two records to split")
    n_train = min(math.ceil(train_fraction * ds.n), ds.n - 1)
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))


def validation_risk(model: PreferenceModel, val: Dataset) -> float:
    """Sum of squared residuals of ``model`` on ``val``."""
    r = evaluate_many(model, val.X) - val.y
    return float(r @ r)


def fit_model(ds: Dataset, lam: float) -> PreferenceModel:
    """Fit one weight and post-process it."""
    return post_process(rls_solve(ds, lam), ds)


@dataclass(frozen=True)
class CvResult:
    """Outcome of hold-out selection.

    ``pre_refit_model`` is the selected fit on the training part only;
    ``final_model`` is the same weight refitted on all the data.
    """

    chosen_lambda: float
    validation_risks: dict[float, float]
    final_model: PreferenceModel
    pre_refit_model: PreferenceModel
    split_seed: int


def cross_validate(ds: Dataset, grid: Iterable[float] | None = None, seed: int = 0) -> CvResult:
    """Select the regularization weight on a 75/25 hold-out split and refit.

    Ties in validation risk go to the larger weight.
    """
    grid = check_grid(default_grid() if grid is None else grid)
    train, val = split(ds, seed)
    risks: dict[float, float] = {}
    models: dict[float, PreferenceModel] = {}
    for lam in grid:
        models[lam] = fit_model(train, lam)
        risks[lam] = validation_risk(models[lam], val)
    best = min(risks.values())
    chosen = max(lam for lam, r in risks.items() if r == best)
    return CvResult(chosen, risks, fit_model(ds, chosen), models[chosen], seed)
