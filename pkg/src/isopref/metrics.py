"""Error measures, ranking distance, bootstrap intervals and criteria-effect curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .isotonic import isotonic_fit
from .lattice import Dataset, InputError, LatticeSpec
from .postprocess import PreferenceModel, evaluate_many

KENDALL_EXACT_MAX = 10**6
Z95 = 1.96


def _values(f, X: NDArray) -> NDArray[np.float64]:
    """Evaluate anything callable on an ``(n, d)`` array of points."""
    return np.asarray(f(X), dtype=np.float64).ravel()


def _mean_se(v: NDArray) -> tuple[float, float]:
    n = len(v)
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(v)), se


@dataclass(frozen=True)
class EmpiricalDistribution:
    """A probability distribution on lattice points.

    ``n_samples`` is the number of draws behind an empirical distribution;
    it sets the standard errors of expectations under it.
    """

    support: NDArray[np.int64]
    probabilities: NDArray[np.float64]
    n_samples: int | None = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64).ravel()
        S = np.asarray(self.support, dtype=np.int64)
        if S.ndim != 2 or len(S) != len(p):
            raise InputError("support and probabilities disagree in length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InputError("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "support", S)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def uniform(cls, spec: LatticeSpec) -> "EmpiricalDistribution":
        return cls(spec.points(), np.full(spec.size, 1.0 / spec.size))

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "EmpiricalDistribution":
        s = ds.summary
        return cls(s.points, s.counts / ds.n, ds.n)

    def expect(self, v: NDArray) -> tuple[float, float]:
        """Mean of per-point values ``v`` and its standard error."""
        p = self.probabilities
        mean = float(p @ v)
        n = self.n_samples if self.n_samples is not None else 1.0 / float(p @ p)
        if n <= 1:
            return mean, 0.0
        var = float(p @ (v - mean) ** 2) * n / (n - 1)
        return mean, math.sqrt(var / n)


@dataclass(frozen=True)
class MetricReport:
    prediction_error: float
    prediction_error_se: float
    irreducible_error: float
    reducible_error: float
    reducible_error_se: float
    n_test: int

    def to_dict(self) -> dict:
        return {
            "prediction_error": self.prediction_error,
            "prediction_error_se": self.prediction_error_se,
            "irreducible_error": self.irreducible_error,
            "reducible_error": self.reducible_error,
            "reducible_error_se": self.reducible_error_se,
            "n_test": self.n_test,
        }


def prediction_error(model, test: Dataset) -> tuple[float, float]:
    """Mean squared residual on ``test`` and its standard error."""
    r2 = (_values(model, test.X) - test.y) ** 2
    return _mean_se(r2)


def irreducible_error(ds: Dataset) -> float:
    """Least mean squared residual any isotonic function achieves on ``ds``.

    The minimizer is constant on each distinct input, so the residual splits
    into the within-point scatter plus the pooled isotonic fit residual.
    """
    s = ds.summary
    f = isotonic_fit(s.dag, s.mean_y, s.counts)
    return float((s.counts @ (f - s.mean_y) ** 2 + s.within_ss.sum()) / ds.n)


def reducible_error(model, test: Dataset) -> tuple[float, float]:
    """Prediction error minus irreducible error; SE is the prediction-error SE."""
    pe, se = prediction_error(model, test)
    return pe - irreducible_error(test), se


def metric_report(model, test: Dataset) -> MetricReport:
    pe, se = prediction_error(model, test)
    irr = irreducible_error(test)
    return MetricReport(pe, se, irr, pe - irr, se, test.n)


def estimation_error(model, truth, P: EmpiricalDistribution) -> float:
    """``sum_x P(x) (truth(x) - model(x))^2``."""
    diff = _values(truth, P.support) - _values(model, P.support)
    return float(P.probabilities @ diff**2)


def preference_misalignment(fa, fb, P: EmpiricalDistribution) -> tuple[float, float]:
    """Expected squared gap between two preference functions under ``P``."""
    for f in (fa, fb):
        spec = getattr(f, "spec", None)
        if spec is not None and spec.d != P.support.shape[1]:
            raise InputError("models and distribution live on different lattices")
    if isinstance(fa, PreferenceModel) and isinstance(fb, PreferenceModel):
        if (fa.spec.d, fa.spec.m) != (fb.spec.d, fb.spec.m):
            raise InputError("models live on different lattices")
    diff2 = (_values(fa, P.support) - _values(fb, P.support)) ** 2
    return P.expect(diff2)


def _tied_pairs(*keys: NDArray) -> int:
    """Number of unordered pairs equal in every key."""
    _, counts = np.unique(np.column_stack(keys), axis=0, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def _strict_inversions(seq: NDArray[np.int64]) -> int:
    """Pairs ``i < j`` with ``seq[i] > seq[j]``, by bottom-up merge counting."""
    n = len(seq)
    total = 0
    idx = np.arange(n)
    width = 1
    while width < n:
        block = idx // (2 * width)
        right = (idx // width) % 2 == 1
        # sort left halves by value inside each block; count left values > each right value
        lkey = block[~right] * (n + 1) + seq[~right]
        lkey.sort()
        rkey = block[right] * (n + 1) + seq[right]
        le = np.searchsorted(lkey, rkey, side="right")
        end = np.searchsorted(lkey, block[right] * (n + 1) + n, side="right")
        total += int((end - le).sum())
        width *= 2
    return total


def kendall_counts(a: NDArray, b: NDArray) -> tuple[int, int, int]:
    """``(discordant, tied_in_a_ranked_in_b, total_pairs)`` for two score vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    n = len(a)
    order = np.lexsort((b, a))
    rb = np.unique(b, return_inverse=True)[1].ravel()[order]
    discordant = _strict_inversions(rb)
    ties = _tied_pairs(a) - _tied_pairs(a, b)
    return discordant, ties, n * (n - 1) // 2


def kendall_tau_distance(fa, fb, spec: LatticeSpec, sample: int | None = None, seed: int = 0):
    """Tie-aware normalized Kendall distance between the rankings of two functions.

    A pair costs 1 when the strict orders disagree and 1/2 when ``fa`` ties a
    pair ``fb`` ranks. Exact over all lattice pairs up to ``10**6`` points;
    larger lattices need ``sample`` (number of random pairs), in which case
    ``(estimate, standard_error)`` is returned.
    """
    if sample is None:
        if spec.size > KENDALL_EXACT_MAX:
            raise InputError(f"lattice has {spec.size} points; pass sample= for an estimate")
        X = spec.points()
        disc, ties, total = kendall_counts(_values(fa, X), _values(fb, X))
        return (disc + 0.5 * ties) / total if total else 0.0
    rng = np.random.default_rng(seed)
    i = rng.integers(0, spec.size, size=sample)
    j = rng.integers(0, spec.size - 1, size=sample)
    j = j + (j >= i)
    X = spec.points() if spec.size <= KENDALL_EXACT_MAX else None
    pi = X[i] if X is not None else _decode(spec, i)
    pj = X[j] if X is not None else _decode(spec, j)
    da = _values(fa, pi) - _values(fa, pj)
    db = _values(fb, pi) - _values(fb, pj)
    k = np.where(da * db < 0, 1.0, np.where((da == 0) & (db != 0), 0.5, 0.0))
    return _mean_se(k)


def _decode(spec: LatticeSpec, codes: NDArray) -> NDArray[np.int64]:
    digits = (codes[:, None] // spec.m ** np.arange(spec.d)) % spec.m
    return digits.astype(np.int64) + 1


def bootstrap_ci(
    statistic: Callable[[Dataset], float],
    ds: Dataset,
    B: int = 1000,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap interval of ``statistic`` over record resamples."""
    if B < 2:
        raise InputError("need at least two resamples")
    rng = np.random.default_rng(seed)
    stats = np.empty(B)
    for b in range(B):
        stats[b] = statistic(ds.subset(rng.integers(0, ds.n, size=ds.n)))
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(stats, [tail, 100 - tail])
    return float(lo), float(hi)


def error_bar_halfwidth(prediction_se: float, reducible: float) -> float | None:
    """Delta-method half-width on the L1 scale; ``None`` when reducible error <= 0."""
    if not reducible > 0:
        return None
    return Z95 * prediction_se / (2 * math.sqrt(reducible))


def criteria_effect_curve(
    model: PreferenceModel, vary: int, fixed_levels: ArrayLike, report: MetricReport
) -> list[tuple[int, float, float | None]]:
    """Model value as one criterion sweeps ``1..m`` with the others held fixed.

    Args:
        model: fitted preference function.
        vary: zero-based index of the criterion that sweeps.
        fixed_levels: scores of the other ``d - 1`` criteria, in order.
        report: metrics supplying the error bar.

    Returns:
        ``(level, value, halfwidth)`` rows; ``halfwidth`` is ``None`` when the
        reducible error is not positive.
    """
    spec = model.spec
    fixed = [int(v) for v in np.asarray(fixed_levels).ravel()]
    if not 0 <= vary < spec.d or len(fixed) != spec.d - 1:
        raise InputError("need a valid criterion index and d-1 fixed scores")
    levels = np.arange(1, spec.m + 1)
    X = np.empty((spec.m, spec.d), dtype=np.int64)
    X[:, vary] = levels
    others = [k for k in range(spec.d) if k != vary]
    X[:, others] = fixed
    vals = evaluate_many(model, X)
    hw = error_bar_halfwidth(report.prediction_error_se, report.reducible_error)
    return [(int(l), float(v), hw) for l, v in zip(levels, vals)]
