"""Constructive machinery around the ambiguity ball.

Three kinds of objects live here: a sampler that realizes the
local-displacement-plus-global-replacement representation of ball members, the
extremal rank-band families that approach the worst-case quantile and
coverage, and the empirical check that a Lipschitz score map carries a
data-space ball into the corresponding score-space ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScoreSample, cdf, snapped_ceil, snapped_floor
from .lp_metric import LPParams, _solve_flow, lp_distance

__all__ = [
    "PerturbationDraw",
    "PerturbationSpec",
    "PointMass",
    "Uniform",
    "perturb_draws",
    "perturb_sample",
    "propagate_params",
    "pushforward_check",
    "wc_coverage_family",
    "wc_quantile_family",
]


@dataclass(frozen=True)
class PointMass:
    """Degenerate law concentrated at ``value``."""

    value: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError(f"point mass location must be finite, got {self.value!r}")


@dataclass(frozen=True)
class Uniform:
    """Uniform law on the closed interval [low, high]."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise ValueError("uniform bounds must be finite")
        if self.low > self.high:
            raise ValueError(f"uniform bounds out of order: [{self.low!r}, {self.high!r}]")


Law = PointMass | Uniform


def _draw_law(law: Law, rng: np.random.Generator, size) -> np.ndarray:
    if isinstance(law, PointMass):
        return np.full(size, law.value, dtype=float)
    return rng.uniform(law.low, law.high, size)


def _law_support(law: Law) -> tuple[float, float]:
    if isinstance(law, PointMass):
        return law.value, law.value
    return law.low, law.high


@dataclass(frozen=True)
class PerturbationSpec:
    """Recipe for corrupting a score sample inside a known ambiguity ball.

    Each score is independently replaced by a draw from ``global_law`` with
    probability ``rho``; otherwise it is displaced by a draw from
    ``local_law``, whose support must lie in [-epsilon, epsilon]. ``None``
    means the default local law, uniform on [-epsilon, epsilon]. Everything
    is deterministic given ``seed``.
    """

    epsilon: float
    rho: float
    local_law: Law | None = None
    global_law: Law = PointMass(0.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be a finite nonnegative real, got {self.epsilon!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho!r}")
        if self.local_law is not None:
            lo, hi = _law_support(self.local_law)
            if lo < -self.epsilon or hi > self.epsilon:
                raise ValueError(
                    f"local law support [{lo!r}, {hi!r}] exceeds [-epsilon, epsilon]"
                )
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def resolved_local_law(self) -> Law:
        if self.local_law is not None:
            return self.local_law
        return Uniform(-self.epsilon, self.epsilon)


@dataclass(frozen=True)
class PerturbationDraw:
    """Perturbed values plus the mask of globally replaced positions."""

    values: np.ndarray
    replaced: np.ndarray


def _clamp_displacement(values: np.ndarray, center: np.ndarray, eps: float) -> np.ndarray:
    """Nudge values so the realized displacement never exceeds ``eps``.

    Floating-point addition can overshoot the nominal bound by an ulp, which
    would silently break exact ball membership; a couple of nextafter steps
    repair it.
    """
    out = np.array(values, dtype=float)
    for _ in range(4):
        delta = out - center
        over = delta > eps
        under = delta < -eps
        if not (over.any() or under.any()):
            break
        out[over] = np.nextafter(out[over], -np.inf)
        out[under] = np.nextafter(out[under], np.inf)
    return out


def perturb_draws(base: ScoreSample, spec: PerturbationSpec) -> PerturbationDraw:
    """Raw perturbation outcome, exposing which atoms were globally replaced.

    The draw order is fixed (replacement mask, then local noise, then global
    draws) so results are reproducible from the seed alone.
    """
    rng = np.random.default_rng(spec.seed)
    x = base.scores
    n = base.n
    replaced = rng.random(n) < spec.rho
    noise = _draw_law(spec.resolved_local_law(), rng, n)
    global_vals = _draw_law(spec.global_law, rng, n)
    shifted = _clamp_displacement(x + noise, x, spec.epsilon)
    values = np.where(replaced, global_vals, shifted)
    return PerturbationDraw(values=values, replaced=replaced)


def perturb_sample(base: ScoreSample, spec: PerturbationSpec) -> ScoreSample:
    """Corrupt ``base`` according to ``spec``; the result is a valid ball member."""
    return ScoreSample(perturb_draws(base, spec).values)


def _shifted_scores(base: ScoreSample, eps: float) -> np.ndarray:
    return _clamp_displacement(base.scores + eps, base.scores, eps)


def _rank_band(n: int, lo_level: float, hi_level: float, rho: float) -> tuple[int, int]:
    """Indices (i_lo, i_hi] of the atoms whose rank/n lies in the level band.

    The band is trimmed from below so at most ``floor(n * rho)`` atoms move:
    the discretized construction must never exceed the global mass budget.
    """
    i_lo = max(snapped_floor(n * lo_level), 0)
    i_hi = min(snapped_floor(n * hi_level), n)
    cap = snapped_floor(n * rho)
    i_lo = max(i_lo, i_hi - cap)
    if i_hi <= i_lo:
        raise ValueError(
            f"level band ({lo_level!r}, {hi_level!r}] contains no sample atoms at n={n}"
        )
    return i_lo, i_hi


def wc_quantile_family(
    base: ScoreSample, beta: float, params: LPParams, k: int
) -> ScoreSample:
    """Ball member whose ``beta``-quantile approaches the worst case as k grows.

    Every score is shifted up by ``epsilon``, then the atoms whose rank lies
    in the level band ``(beta - 1/k, beta - 1/k + rho]`` are moved to the
    band's upper quantile (plus ``epsilon``). Requires ``beta + rho <= 1``
    and, for ``rho > 0``, granularity ``1/k <= rho``.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta!r}")
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if beta + params.rho > 1.0 + 1e-12:
        raise ValueError(f"beta + rho must be at most one, got {beta + params.rho!r}")
    shifted = _shifted_scores(base, params.epsilon)
    if params.rho == 0.0:
        return ScoreSample(shifted)
    if 1.0 / k > params.rho:
        raise ValueError(f"need 1/k <= rho, got k={k}, rho={params.rho!r}")
    n = base.n
    lo_level = beta - 1.0 / k
    hi_level = lo_level + params.rho
    i_lo, i_hi = _rank_band(n, lo_level, hi_level, params.rho)
    target = min(max(snapped_ceil(n * hi_level), 1), n)
    out = shifted.copy()
    out[i_lo:i_hi] = shifted[target - 1]
    return ScoreSample(out)


def wc_coverage_family(
    base: ScoreSample, q: float, params: LPParams, k: int
) -> ScoreSample:
    """Ball member whose CDF at ``q`` approaches the worst case as k grows.

    Mirror of :func:`wc_quantile_family`: after the ``epsilon`` shift, atoms
    in the level band ``(F(q - eps) - rho + 1/k, F(q - eps) + 1/k]`` are
    moved to the band's upper quantile, emptying the CDF just below ``q``
    down to the worst-case plateau.
    """
    if not np.isfinite(q):
        raise ValueError(f"q must be finite, got {q!r}")
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    shifted = _shifted_scores(base, params.epsilon)
    if params.rho == 0.0:
        return ScoreSample(shifted)
    if 1.0 / k > params.rho:
        raise ValueError(f"need 1/k <= rho, got k={k}, rho={params.rho!r}")
    n = base.n
    f0 = cdf(base, q - params.epsilon)
    lo_level = f0 - params.rho + 1.0 / k
    hi_level = f0 + 1.0 / k
    i_lo, i_hi = _rank_band(n, lo_level, hi_level, params.rho)
    target = min(max(snapped_ceil(n * hi_level), 1), n)
    out = shifted.copy()
    out[i_lo:i_hi] = shifted[target - 1]
    return ScoreSample(out)


def propagate_params(k_lipschitz: float, params: LPParams) -> LPParams:
    """Ball parameters after pushing through a ``k_lipschitz``-Lipschitz map."""
    if not (np.isfinite(k_lipschitz) and k_lipschitz > 0.0):
        raise ValueError(f"Lipschitz constant must be finite and positive, got {k_lipschitz!r}")
    return LPParams(k_lipschitz * params.epsilon, params.rho)


_PUSHFORWARD_MAX_SIZE = 2000


def pushforward_check(
    points_p,
    points_q,
    scores_p: ScoreSample,
    scores_q: ScoreSample,
    epsilon: float,
    k_lipschitz: float = 1.0,
    norm_ord: float = 2,
) -> bool:
    """Empirical inclusion check for score-space propagation.

    Solves the exact transport problem twice: in data space with admissible
    pairs ``||z1 - z2|| <= epsilon`` (dense cost matrix), and in score space
    at radius ``k_lipschitz * epsilon``. Returns ``True`` when the
    score-space discrepancy does not exceed the data-space one, which a
    ``k_lipschitz``-Lipschitz score map guarantees.

    A verification tool for moderate sizes (at most 2000 points per cloud).
    """
    p = np.atleast_2d(np.asarray(points_p, dtype=float))
    q = np.atleast_2d(np.asarray(points_q, dtype=float))
    if p.ndim != 2 or q.ndim != 2 or p.shape[1] != q.shape[1]:
        raise ValueError("point clouds must be 2-d arrays with matching dimension")
    n, m = p.shape[0], q.shape[0]
    if n != scores_p.n or m != scores_q.n:
        raise ValueError(
            f"cloud sizes ({n}, {m}) do not match score sample sizes "
            f"({scores_p.n}, {scores_q.n})"
        )
    if max(n, m) > _PUSHFORWARD_MAX_SIZE:
        raise ValueError(f"clouds larger than {_PUSHFORWARD_MAX_SIZE} points are not supported")
    if not (np.isfinite(epsilon) and epsilon >= 0.0):
        raise ValueError(f"epsilon must be a finite nonnegative real, got {epsilon!r}")
    if not (np.isfinite(k_lipschitz) and k_lipschitz > 0.0):
        raise ValueError(f"Lipschitz constant must be finite and positive, got {k_lipschitz!r}")
    dists = np.linalg.norm(p[:, None, :] - q[None, :, :], ord=norm_ord, axis=2)
    admissible = dists <= epsilon
    edges = [np.nonzero(admissible[i])[0].tolist() for i in range(n)]
    matched_data, _ = _solve_flow(n, m, edges)
    score_res = lp_distance(scores_p, scores_q, k_lipschitz * epsilon)
    unmatched_score = n * m - score_res.matched_units
    unmatched_data = n * m - matched_data
    return unmatched_score <= unmatched_data
