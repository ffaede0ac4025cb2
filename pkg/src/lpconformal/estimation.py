"""Data-driven selection of the ambiguity parameters (epsilon, rho).

Given two disjoint calibration batches and a batch of test scores, each
candidate ``epsilon`` on a grid is paired with the exact transport
discrepancy ``rho`` between the first calibration batch and the test batch.
The candidate whose robust threshold (computed on the second batch, at the
coverage-adjusted level) is smallest wins: it yields the tightest prediction
set that is still certified for the observed shift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import InfeasibleLevelError, ScoreSample, quantile
from .lp_metric import lp_distance
from .robust import _level_at_most_one, adjusted_beta

__all__ = [
    "EstimationResult",
    "GridPoint",
    "NoFeasibleGridError",
    "default_epsilon_grid",
    "estimate_lp_params",
]


class NoFeasibleGridError(InfeasibleLevelError):
    """Every grid point was infeasible: no ambiguity set can be certified."""


@dataclass(frozen=True)
class GridPoint:
    """One audited grid evaluation.

    ``beta`` and ``q`` are ``None`` when the point is infeasible, with the
    reason recorded.
    """

    epsilon: float
    rho: float
    beta: float | None
    q: float | None
    feasible: bool
    reason: str | None = None


@dataclass(frozen=True)
class EstimationResult:
    """Selected ambiguity parameters plus the full grid trace for audit."""

    epsilon: float
    rho: float
    beta: float
    q: float
    grid_trace: tuple[GridPoint, ...]


def _validate_grid(epsilon_grid: Sequence[float]) -> list[float]:
    grid = [float(e) for e in epsilon_grid]
    if not grid:
        raise ValueError("epsilon grid must be nonempty")
    if any(not (np.isfinite(e) and e >= 0.0) for e in grid):
        raise ValueError("epsilon grid entries must be finite and nonnegative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be strictly increasing")
    return grid


def estimate_lp_params(
    calib_a: ScoreSample,
    calib_b: ScoreSample,
    test: ScoreSample,
    epsilon_grid: Sequence[float],
    alpha: float,
) -> EstimationResult:
    """Pick the (epsilon, rho) pair giving the tightest certified threshold.

    ``calib_a`` estimates the shift against ``test``; ``calib_b`` computes
    the quantiles. The two calibration batches must come from disjoint draws
    of the same source (the caller's responsibility; values may collide).

    For each grid epsilon: ``rho`` is the exact transport discrepancy, the
    miscoverage is adjusted via :func:`lpconformal.robust.adjusted_beta` on
    ``calib_b``'s size, and the candidate threshold is the quantile of
    ``calib_b`` at ``1 - beta + rho`` plus epsilon. Points whose adjustment
    fails or whose level exceeds one are traced as infeasible and skipped.
    Ties in the threshold break toward the smallest epsilon.

    Raises :class:`NoFeasibleGridError` if no grid point is feasible.
    """
    grid = _validate_grid(epsilon_grid)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    n_b = calib_b.n
    trace: list[GridPoint] = []
    best: GridPoint | None = None
    for eps in grid:
        rho = lp_distance(calib_a, test, eps).rho
        try:
            beta = adjusted_beta(n_b, alpha, rho)
        except InfeasibleLevelError:
            trace.append(
                GridPoint(eps, rho, None, None, False, "coverage adjustment infeasible")
            )
            continue
        level = 1.0 - beta + rho
        if not _level_at_most_one(level):
            trace.append(
                GridPoint(eps, rho, beta, None, False, "quantile level above one")
            )
            continue
        q = quantile(calib_b, min(level, 1.0)) + eps
        point = GridPoint(eps, rho, beta, q, True)
        trace.append(point)
        if best is None or q < best.q:
            best = point
    if best is None:
        raise NoFeasibleGridError(
            "no feasible ambiguity set: every grid point failed the coverage adjustment"
        )
    return EstimationResult(
        epsilon=best.epsilon,
        rho=best.rho,
        beta=best.beta,
        q=best.q,
        grid_trace=tuple(trace),
    )


def default_epsilon_grid(*samples: ScoreSample, num_points: int = 20) -> list[float]:
    """Log-spaced grid spanning [0.01, 2] times the pooled interquartile range."""
    if not samples:
        raise ValueError("need at least one sample to build a grid")
    pooled = np.concatenate([s.scores for s in samples])
    iqr = float(np.quantile(pooled, 0.75) - np.quantile(pooled, 0.25))
    if iqr <= 0.0:
        raise ValueError(
            "pooled scores have zero interquartile range; supply an explicit grid"
        )
    return [float(e) for e in np.geomspace(0.01 * iqr, 2.0 * iqr, num_points)]
