"""Worst-case quantiles and coverage over a local/global ambiguity ball.

For an ambiguity ball with local radius ``epsilon`` and global mass budget
``rho`` around an empirical score distribution, the worst-case
``beta``-quantile is ``quantile(beta + rho) + epsilon`` (unbounded once
``beta + rho`` exceeds one, since the adversary can park a ``rho`` fraction
of mass arbitrarily far out) and the worst-case coverage at a threshold ``q``
is ``cdf(q - epsilon) - rho``, floored at zero. These drive the robust
prediction-set thresholds and their finite-sample coverage bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    LEVEL_REL_TOL,
    InfeasibleLevelError,
    ScoreSample,
    ThresholdResult,
    cdf,
    quantile,
    snapped_ceil,
)
from .lp_metric import LPParams

__all__ = [
    "PredictionSet",
    "adjusted_beta",
    "coverage_lower_bound",
    "prediction_set",
    "robust_threshold",
    "tv_threshold",
    "winf_threshold",
    "worst_case_coverage",
    "worst_case_quantile",
]


@dataclass(frozen=True)
class PredictionSet:
    """Labels whose scores fall at or below a threshold.

    ``threshold is None`` means the threshold was unbounded and every label
    is a member.
    """

    member_labels: frozenset[int]
    threshold: float | None


def _level_at_most_one(level: float) -> bool:
    # Absorbs round-off at the boundary: beta + rho == 1 must stay finite.
    return level <= 1.0 + LEVEL_REL_TOL


def worst_case_quantile(
    sample: ScoreSample, beta: float, params: LPParams
) -> ThresholdResult:
    """Largest ``beta``-quantile over the ambiguity ball around ``sample``.

    Finite exactly when ``beta + rho <= 1``: the value is
    ``quantile(sample, beta + rho) + epsilon``. Beyond that the quantile can
    be driven arbitrarily high and the unbounded marker is returned, carrying
    the overflowing level for diagnosis.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta!r}")
    level = beta + params.rho
    if not _level_at_most_one(level):
        return ThresholdResult(threshold=None, level_used=level)
    level = min(level, 1.0)
    value = quantile(sample, level) + params.epsilon
    return ThresholdResult(threshold=value, level_used=level)


def worst_case_coverage(sample: ScoreSample, q: float, params: LPParams) -> float:
    """Smallest CDF value at ``q`` over the ambiguity ball, floored at zero."""
    if not np.isfinite(q):
        raise ValueError(f"q must be finite, got {q!r}")
    return max(cdf(sample, q - params.epsilon) - params.rho, 0.0)


def coverage_lower_bound(n: int, alpha: float, rho: float) -> float:
    """Finite-sample coverage guarantee of the robust threshold.

    Equals ``ceil(n * (1 - alpha + rho)) / (n + 1) - rho``, clamped to
    [0, 1]. Valid for calibration size ``n >= 1`` and ``rho < 1``.
    """
    if n < 1:
        raise ValueError(f"calibration size must be positive, got {n!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho!r}")
    k = snapped_ceil(n * (1.0 - alpha + rho))
    return max(0.0, min(1.0, k / (n + 1) - rho))


def robust_threshold(
    sample: ScoreSample, alpha: float, params: LPParams
) -> ThresholdResult:
    """Prediction-set threshold that is valid for every ball member.

    The worst-case ``(1 - alpha)``-quantile of the calibration sample, with
    the finite-sample coverage bound attached (omitted in the degenerate
    ``rho == 1`` case, where the threshold is unbounded anyway).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    result = worst_case_quantile(sample, 1.0 - alpha, params)
    bound = coverage_lower_bound(sample.n, alpha, params.rho) if params.rho < 1.0 else None
    return replace(result, coverage_bound=bound)


def adjusted_beta(n: int, alpha: float, rho: float) -> float:
    """Miscoverage level to request so the robust guarantee reaches ``1 - alpha``.

    Returns ``alpha + (alpha - rho - 2) / n``. Raises
    :class:`InfeasibleLevelError` when the adjustment is not positive, i.e.
    the calibration sample is too small to certify ``1 - alpha`` coverage at
    this ``rho``.
    """
    if n < 1:
        raise ValueError(f"calibration size must be positive, got {n!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho!r}")
    beta = alpha + (alpha - rho - 2.0) / n
    if beta <= 0.0:
        raise InfeasibleLevelError(
            f"adjusted miscoverage {beta!r} is not positive: n={n} is too small "
            f"for alpha={alpha!r}, rho={rho!r}"
        )
    return beta


def _bound_at_level(n: int, level: float, rho: float) -> float:
    # Finite-sample bound for a threshold taken at quantile `level`.
    k = snapped_ceil(n * level)
    return max(0.0, min(1.0, k / (n + 1) - rho))


def tv_threshold(sample: ScoreSample, alpha: float, rho: float) -> ThresholdResult:
    """Purely-global (``epsilon = 0``) threshold with ``1 - alpha`` coverage.

    Uses the quantile level ``1 - ((alpha - rho) * (n + 1) - 2) / n``, which
    equals the robust threshold at the adjusted miscoverage from
    :func:`adjusted_beta` with ``epsilon = 0``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho!r}")
    n = sample.n
    level = 1.0 - ((alpha - rho) * (n + 1) - 2.0) / n
    if level <= 0.0 or not _level_at_most_one(level):
        raise InfeasibleLevelError(
            f"threshold level {level!r} falls outside (0, 1] for n={n}, "
            f"alpha={alpha!r}, rho={rho!r}"
        )
    level = min(level, 1.0)
    return ThresholdResult(
        threshold=quantile(sample, level),
        level_used=level,
        coverage_bound=_bound_at_level(n, level, rho),
    )


def winf_threshold(sample: ScoreSample, alpha: float, epsilon: float) -> ThresholdResult:
    """Purely-local (``rho = 0``) threshold with ``1 - alpha`` coverage.

    The quantile at level ``1 - (alpha * (n + 1) - 2) / n`` plus ``epsilon``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if not (np.isfinite(epsilon) and epsilon >= 0.0):
        raise ValueError(f"epsilon must be a finite nonnegative real, got {epsilon!r}")
    n = sample.n
    level = 1.0 - (alpha * (n + 1) - 2.0) / n
    if level <= 0.0 or not _level_at_most_one(level):
        raise InfeasibleLevelError(
            f"threshold level {level!r} falls outside (0, 1] for n={n}, alpha={alpha!r}"
        )
    level = min(level, 1.0)
    return ThresholdResult(
        threshold=quantile(sample, level) + epsilon,
        level_used=level,
        coverage_bound=_bound_at_level(n, level, 0.0),
    )


def prediction_set(label_scores, threshold: ThresholdResult) -> PredictionSet:
    """Labels whose scores are at or below the threshold (all, if unbounded)."""
    scores = np.asarray(label_scores, dtype=float)
    if scores.ndim != 1:
        raise ValueError("label scores must be one-dimensional")
    if not np.all(np.isfinite(scores)):
        raise ValueError("label scores must be finite")
    if threshold.is_unbounded:
        members = range(scores.size)
    else:
        members = np.nonzero(scores <= threshold.threshold)[0]
    return PredictionSet(
        member_labels=frozenset(int(i) for i in members),
        threshold=threshold.threshold,
    )
