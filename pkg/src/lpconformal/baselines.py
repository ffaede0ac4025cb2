"""Comparison thresholds: standard split conformal, chi-square robust,
covariate-shift weighting, smoothing-based, and fine-grained weighted."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ScoreSample, ThresholdResult, conformal_quantile, quantile
from .robust import _level_at_most_one

__all__ = [
    "WeightedScores",
    "chi2_g",
    "chi2_g_inv",
    "chi2_threshold",
    "fg_threshold",
    "rscp_threshold",
    "sc_threshold",
    "weighted_threshold",
]


@dataclass(frozen=True)
class WeightedScores:
    """Calibration scores with unnormalized likelihood-ratio weights.

    ``test_weight`` is the weight of the (unseen) test point; it funds the
    point mass at infinity in the weighted empirical distribution.
    """

    scores: np.ndarray
    weights: np.ndarray
    test_weight: float

    def __init__(self, scores, weights, test_weight: float) -> None:
        s = np.asarray(scores, dtype=float)
        w = np.asarray(weights, dtype=float)
        if s.ndim != 1 or w.ndim != 1:
            raise ValueError("scores and weights must be one-dimensional")
        if s.size != w.size:
            raise ValueError(f"length mismatch: {s.size} scores vs {w.size} weights")
        if s.size == 0:
            raise ValueError("need at least one weighted score")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        if not (np.all(np.isfinite(w)) and np.all(w > 0.0)):
            raise ValueError("weights must be finite and strictly positive")
        tw = float(test_weight)
        if not (np.isfinite(tw) and tw > 0.0):
            raise ValueError(f"test weight must be finite and positive, got {test_weight!r}")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "test_weight", tw)

    @property
    def n(self) -> int:
        return int(self.scores.size)


def sc_threshold(sample: ScoreSample, alpha: float) -> ThresholdResult:
    """Standard split conformal threshold (finite-sample corrected quantile)."""
    return conformal_quantile(sample, alpha)


def chi2_g(beta: float, rho_chi2: float) -> float:
    """Worst-case coverage map of the chi-square divergence ball.

    The smallest ``z`` in [0, 1] such that the chi-square divergence of the
    binary distribution ``(z, 1 - z)`` from ``(beta, 1 - beta)`` is at most
    ``rho_chi2``. For the quadratic generator this reduces to
    ``max(0, beta - sqrt(rho_chi2 * beta * (1 - beta)))``; endpoints map to
    themselves by convention.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta!r}")
    if not (np.isfinite(rho_chi2) and rho_chi2 >= 0.0):
        raise ValueError(f"rho_chi2 must be a finite nonnegative real, got {rho_chi2!r}")
    if beta in (0.0, 1.0):
        return beta
    return max(0.0, beta - math.sqrt(rho_chi2 * beta * (1.0 - beta)))


def chi2_g_inv(tau: float, rho_chi2: float) -> float:
    """Largest ``beta`` in [0, 1] with ``chi2_g(beta, rho_chi2) <= tau``.

    Computed by bisection; ``chi2_g`` is nondecreasing in ``beta`` (asserted
    by property tests rather than assumed blindly).
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    if not (np.isfinite(rho_chi2) and rho_chi2 >= 0.0):
        raise ValueError(f"rho_chi2 must be a finite nonnegative real, got {rho_chi2!r}")
    if chi2_g(1.0, rho_chi2) <= tau:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if chi2_g(mid, rho_chi2) <= tau:
            lo = mid
        else:
            hi = mid
    return lo


def chi2_threshold(sample: ScoreSample, alpha: float, rho_chi2: float) -> ThresholdResult:
    """Chi-square robust conformal threshold.

    The finite-sample corrected level is ``(1 + 1/n) * g_inv(1 - alpha)``;
    if it exceeds one the threshold is unbounded. Otherwise the threshold is
    the quantile at ``g_inv(g(corrected level))``, which undoes the coverage
    map after the correction.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    n = sample.n
    inner = (1.0 + 1.0 / n) * chi2_g_inv(1.0 - alpha, rho_chi2)
    if not _level_at_most_one(inner):
        return ThresholdResult(threshold=None, level_used=inner)
    inner = min(inner, 1.0)
    alpha_n = 1.0 - chi2_g(inner, rho_chi2)
    level = chi2_g_inv(1.0 - alpha_n, rho_chi2)
    if level <= 0.0:
        raise ValueError(
            f"degenerate chi-square level {level!r} for alpha={alpha!r}, rho={rho_chi2!r}"
        )
    return ThresholdResult(threshold=quantile(sample, level), level_used=level)


def _weighted_quantile(ws: WeightedScores, level: float) -> ThresholdResult:
    """Quantile of the weighted empirical distribution with an infinity atom.

    Weights (including the test weight) are normalized by their common total;
    the threshold is the smallest score whose cumulative normalized weight
    reaches ``level``. If the finite atoms cannot reach ``level`` the
    infinity atom is needed and the unbounded marker is returned.

    Cumulative masses are computed as partial raw-weight sums over the total,
    so uniform weights give exact ``k / (n + 1)`` fractions.
    """
    if not 0.0 < level <= 1.0:
        raise ValueError(f"quantile level must be in (0, 1], got {level!r}")
    order = np.argsort(ws.scores, kind="stable")
    sorted_scores = ws.scores[order]
    total = float(np.sum(ws.weights)) + ws.test_weight
    cum = np.cumsum(ws.weights[order]) / total
    idx = int(np.searchsorted(cum, level, side="left"))
    if idx >= ws.n:
        return ThresholdResult(threshold=None, level_used=level)
    return ThresholdResult(threshold=float(sorted_scores[idx]), level_used=level)


def weighted_threshold(ws: WeightedScores, alpha: float) -> ThresholdResult:
    """Covariate-shift threshold: ``(1 - alpha)``-quantile of the weighted scores."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    return _weighted_quantile(ws, 1.0 - alpha)


def rscp_threshold(
    sample: ScoreSample, alpha: float, delta: float, sigma: float
) -> ThresholdResult:
    """Smoothed-score threshold: inflated-level quantile plus ``delta / sigma``.

    ``sample`` must already contain the externally computed smoothed scores;
    this function only applies the quantile rule.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if not (np.isfinite(delta) and delta >= 0.0):
        raise ValueError(f"delta must be a finite nonnegative real, got {delta!r}")
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise ValueError(f"sigma must be a finite positive real, got {sigma!r}")
    n = sample.n
    level = (1.0 - alpha) * (2 + n) / (1 + n)
    if not _level_at_most_one(level):
        return ThresholdResult(threshold=None, level_used=level)
    level = min(level, 1.0)
    return ThresholdResult(
        threshold=quantile(sample, level) + delta / sigma, level_used=level
    )


def fg_threshold(ws: WeightedScores, alpha: float, rho_chi2: float) -> ThresholdResult:
    """Fine-grained threshold: weighted quantile at level ``g_inv(1 - alpha)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    level = chi2_g_inv(1.0 - alpha, rho_chi2)
    if level <= 0.0:
        raise ValueError(f"degenerate weighted level {level!r} for alpha={alpha!r}")
    return _weighted_quantile(ws, level)
