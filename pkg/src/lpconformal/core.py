"""Empirical score distributions: quantiles, CDFs, and the conformal quantile.

The quantile convention throughout the package is the infimum rule: the
``beta``-quantile of an ``n``-point sample is its ``ceil(beta * n)``-th order
statistic. Every coverage statement in this package assumes that convention;
no interpolation is ever applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LEVEL_REL_TOL",
    "InfeasibleLevelError",
    "ScoreSample",
    "ThresholdResult",
    "cdf",
    "conformal_quantile",
    "quantile",
    "snapped_ceil",
    "snapped_floor",
]

# Relative tolerance used to absorb floating-point round-off when derived
# quantile levels land, mathematically, on an order-statistic boundary.
LEVEL_REL_TOL = 1e-12


class InfeasibleLevelError(ValueError):
    """A derived quantile level fell outside (0, 1]."""


def snapped_ceil(value: float) -> int:
    """Ceiling that treats values within ``LEVEL_REL_TOL`` of an integer as exact.

    Level arithmetic such as ``n * (1 - alpha + rho)`` routinely yields
    ``950.0000000000001`` where the intended value is 950; a plain ceiling
    would then overshoot by a whole order statistic.
    """
    nearest = round(value)
    if abs(value - nearest) <= LEVEL_REL_TOL * max(1.0, abs(value)):
        return int(nearest)
    return int(math.ceil(value))


def snapped_floor(value: float) -> int:
    """Floor with the same near-integer snapping as :func:`snapped_ceil`."""
    nearest = round(value)
    if abs(value - nearest) <= LEVEL_REL_TOL * max(1.0, abs(value)):
        return int(nearest)
    return int(math.floor(value))


class ScoreSample:
    """Empirical distribution of real nonconformity scores.

    Scores are stored sorted ascending. Duplicates are kept, so the empirical
    measure carries one atom of mass ``1/n`` per input value. Scores must be
    finite; the unbounded conformal threshold is represented by
    :class:`ThresholdResult`, never by an infinity stored here.
    """

    __slots__ = ("_scores",)

    def __init__(self, scores) -> None:
        arr = np.array(scores, dtype=float)
        if arr.ndim != 1:
            raise ValueError("scores must be a one-dimensional sequence")
        if arr.size == 0:
            raise ValueError("a score sample needs at least one score")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scores must be finite (no NaN or infinities)")
        arr.sort()
        arr.flags.writeable = False
        self._scores = arr

    @property
    def scores(self) -> np.ndarray:
        """Sorted, read-only view of the scores."""
        return self._scores

    @property
    def n(self) -> int:
        return int(self._scores.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScoreSample):
            return NotImplemented
        return np.array_equal(self._scores, other._scores)

    def __hash__(self):
        return hash((self.n, float(self._scores[0]), float(self._scores[-1])))

    def __repr__(self) -> str:
        return f"ScoreSample(n={self.n}, min={self._scores[0]!r}, max={self._scores[-1]!r})"


@dataclass(frozen=True)
class ThresholdResult:
    """A score threshold together with the quantile level that produced it.

    ``threshold is None`` marks the unbounded regime: the calibration sample
    cannot certify any finite threshold, and prediction sets must include
    every label. In that case ``level_used`` records the requested (out of
    range) level. ``coverage_bound`` carries a finite-sample coverage lower
    bound when one applies.
    """

    threshold: float | None
    level_used: float
    coverage_bound: float | None = None

    @property
    def is_unbounded(self) -> bool:
        return self.threshold is None


def quantile(sample: ScoreSample, beta: float) -> float:
    """Empirical ``beta``-quantile: the smallest score s with cdf(s) >= beta.

    Equals the ``ceil(beta * n)``-th order statistic (1-indexed, clamped to
    at least 1).

    Raises ``ValueError`` if ``beta`` is outside (0, 1].
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"quantile level must be in (0, 1], got {beta!r}")
    n = sample.n
    k = snapped_ceil(beta * n)
    k = min(max(k, 1), n)
    return float(sample.scores[k - 1])


def cdf(sample: ScoreSample, q: float) -> float:
    """Right-continuous empirical CDF: fraction of scores <= q."""
    if not np.isfinite(q):
        raise ValueError(f"cdf argument must be finite, got {q!r}")
    count = int(np.searchsorted(sample.scores, q, side="right"))
    return count / sample.n


def conformal_quantile(sample: ScoreSample, alpha: float) -> ThresholdResult:
    """Split conformal threshold with the finite-sample correction.

    Returns the quantile at level ``ceil((1 - alpha) * (n + 1)) / n``. When
    that index exceeds ``n`` (small samples), the classical threshold is
    unbounded and the tagged marker is returned instead of an infinity.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    n = sample.n
    k = snapped_ceil((1.0 - alpha) * (n + 1))
    level = k / n
    if k > n:
        return ThresholdResult(threshold=None, level_used=level)
    return ThresholdResult(threshold=quantile(sample, level), level_used=level)
