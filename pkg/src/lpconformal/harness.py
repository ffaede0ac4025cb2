"""File ingestion, split management, and end-to-end method evaluation.

A score matrix holds per-example, per-label nonconformity scores plus the
true label of each row. Evaluation repeatedly splits the rows into a
calibration set (whose true-label scores calibrate a threshold) and a test
set (optionally perturbed), then records coverage and mean prediction-set
size per split. Reports serialize to versioned JSON, byte-identical across
runs with the same configuration.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import ScoreSample, ThresholdResult
from .lp_metric import LPParams
from .robust import (
    _bound_at_level,
    adjusted_beta,
    tv_threshold,
    winf_threshold,
    worst_case_quantile,
)
from .baselines import (
    WeightedScores,
    chi2_threshold,
    fg_threshold,
    rscp_threshold,
    sc_threshold,
    weighted_threshold,
)
from .shiftlab import PerturbationSpec, PointMass, _clamp_displacement, _draw_law

__all__ = [
    "EvalReport",
    "FileFormatError",
    "MethodSpec",
    "REPORT_SCHEMA_VERSION",
    "ScoreMatrix",
    "SplitResult",
    "compare",
    "evaluate",
    "read_matrix",
    "read_scores",
    "read_weighted_scores",
    "split",
    "write_report_csv",
]

REPORT_SCHEMA_VERSION = 1

METHOD_NAMES = ("sc", "lp", "tv", "winf", "chi2", "weighted", "rscp", "fg")


class FileFormatError(Exception):
    """An input file could not be parsed."""


@dataclass(frozen=True)
class ScoreMatrix:
    """Rectangular matrix of nonconformity scores with per-row true labels."""

    scores: np.ndarray
    true_labels: np.ndarray

    def __init__(self, scores, true_labels) -> None:
        s = np.asarray(scores, dtype=float)
        t = np.asarray(true_labels, dtype=int)
        if s.ndim != 2 or s.shape[1] == 0:
            raise ValueError("score matrix must be 2-d with at least one label column")
        if not np.all(np.isfinite(s)):
            raise ValueError("score matrix entries must be finite")
        if t.shape != (s.shape[0],):
            raise ValueError("true labels must be one per matrix row")
        if np.any(t < 0) or np.any(t >= s.shape[1]):
            raise ValueError("true labels must index a matrix column")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "true_labels", t)

    @property
    def n_rows(self) -> int:
        return int(self.scores.shape[0])

    @property
    def n_labels(self) -> int:
        return int(self.scores.shape[1])


@dataclass(frozen=True)
class MethodSpec:
    """A named threshold method plus the parameters it needs.

    ``weights`` (optional) supplies per-row likelihood ratios for the
    weighted methods, aligned with the score matrix rows; uniform weights
    are used when omitted.
    """

    name: str
    epsilon: float = 0.0
    rho: float = 0.0
    rho_chi2: float = 0.0
    delta: float = 0.0
    sigma: float = 1.0
    test_weight: float = 1.0
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.name not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.name!r}; expected one of {METHOD_NAMES}")
        if self.weights is not None:
            object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    def threshold(
        self, calib: ScoreSample, alpha: float, row_weights: np.ndarray | None = None
    ) -> ThresholdResult:
        """Calibrate this method's threshold on a calibration sample."""
        if self.name == "sc":
            return sc_threshold(calib, alpha)
        if self.name == "lp":
            # Coverage-adjusted robust threshold: guarantees 1 - alpha.
            beta = adjusted_beta(calib.n, alpha, self.rho)
            result = worst_case_quantile(calib, 1.0 - beta, LPParams(self.epsilon, self.rho))
            if not result.is_unbounded:
                bound = _bound_at_level(calib.n, result.level_used, self.rho)
                result = replace(result, coverage_bound=bound)
            return result
        if self.name == "tv":
            return tv_threshold(calib, alpha, self.rho)
        if self.name == "winf":
            return winf_threshold(calib, alpha, self.epsilon)
        if self.name == "chi2":
            return chi2_threshold(calib, alpha, self.rho_chi2)
        if self.name == "rscp":
            return rscp_threshold(calib, alpha, self.delta, self.sigma)
        w = row_weights if row_weights is not None else np.ones(calib.n)
        ws = WeightedScores(calib.scores, w, self.test_weight)
        if self.name == "weighted":
            return weighted_threshold(ws, alpha)
        return fg_threshold(ws, alpha, self.rho_chi2)

    def params_dict(self) -> dict:
        out: dict = {"epsilon": self.epsilon, "rho": self.rho}
        if self.name in ("chi2", "fg"):
            out["rho_chi2"] = self.rho_chi2
        if self.name == "rscp":
            out.update(delta=self.delta, sigma=self.sigma)
        if self.name in ("weighted", "fg"):
            out["test_weight"] = self.test_weight
        return out


@dataclass(frozen=True)
class SplitResult:
    coverage: float
    mean_set_size: float


@dataclass(frozen=True)
class EvalReport:
    """Per-split and aggregate coverage/efficiency for one method."""

    method: str
    alpha: float
    n_splits: int
    n_calib: int
    k_test: int
    base_seed: int
    params: dict
    perturbation: dict | None
    per_split: tuple[SplitResult, ...]
    coverage_mean: float
    coverage_std: float
    set_size_mean: float
    set_size_std: float

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": {
                "method": self.method,
                "alpha": self.alpha,
                "splits": self.n_splits,
                "n_calib": self.n_calib,
                "k_test": self.k_test,
                "seed": self.base_seed,
                "params": self.params,
                "perturbation": self.perturbation,
            },
            "per_split": [
                {"coverage": r.coverage, "mean_set_size": r.mean_set_size}
                for r in self.per_split
            ],
            "aggregate": {
                "coverage_mean": self.coverage_mean,
                "coverage_std": self.coverage_std,
                "set_size_mean": self.set_size_mean,
                "set_size_std": self.set_size_std,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _law_dict(law) -> dict:
    if isinstance(law, PointMass):
        return {"kind": "point", "value": law.value}
    return {"kind": "uniform", "low": law.low, "high": law.high}


def perturbation_dict(spec: PerturbationSpec) -> dict:
    return {
        "epsilon": spec.epsilon,
        "rho": spec.rho,
        "local_law": _law_dict(spec.resolved_local_law()),
        "global_law": _law_dict(spec.global_law),
        "seed": int(spec.seed),
    }


def _split_indices(
    n_rows: int, n_calib: int, k_test: int, seed
) -> tuple[np.ndarray, np.ndarray]:
    if n_calib < 1 or k_test < 0:
        raise ValueError("need n_calib >= 1 and k_test >= 0")
    if n_calib + k_test > n_rows:
        raise ValueError(
            f"n_calib + k_test = {n_calib + k_test} exceeds the {n_rows} available rows"
        )
    perm = np.random.default_rng(seed).permutation(n_rows)
    return perm[:n_calib], perm[n_calib : n_calib + k_test]


def split(
    matrix: ScoreMatrix, n_calib: int, k_test: int, seed
) -> tuple[ScoreSample, ScoreMatrix]:
    """Uniform without-replacement split, deterministic per seed.

    Returns the calibration rows' true-label scores as a sample, and the
    test rows as a (sub)matrix.
    """
    calib_idx, test_idx = _split_indices(matrix.n_rows, n_calib, k_test, seed)
    calib = ScoreSample(matrix.scores[calib_idx, matrix.true_labels[calib_idx]])
    test = ScoreMatrix(matrix.scores[test_idx], matrix.true_labels[test_idx])
    return calib, test


def _perturb_rows(
    scores: np.ndarray,
    true_labels: np.ndarray,
    spec: PerturbationSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Score-space surrogate for test-time corruption.

    The local component displaces each row's true-label score within
    [-epsilon, epsilon]; the global component redraws the whole score
    profile of a ``rho`` fraction of rows from the global law. The induced
    true-label score distribution is a member of the nominal ball around the
    clean one.
    """
    n_rows, n_labels = scores.shape
    out = scores.copy()
    corrupt = rng.random(n_rows) < spec.rho
    noise = _draw_law(spec.resolved_local_law(), rng, n_rows)
    keep = np.nonzero(~corrupt)[0]
    cols = true_labels[keep]
    original = out[keep, cols]
    out[keep, cols] = _clamp_displacement(original + noise[keep], original, spec.epsilon)
    n_corrupt = int(corrupt.sum())
    if n_corrupt:
        out[corrupt] = _draw_law(spec.global_law, rng, (n_corrupt, n_labels))
    return out


def evaluate(
    matrix: ScoreMatrix,
    method: MethodSpec,
    alpha: float,
    n_splits: int,
    n_calib: int,
    k_test: int,
    base_seed: int,
    perturbation: PerturbationSpec | None = None,
    redraw_per_split: bool = True,
) -> EvalReport:
    """Coverage and efficiency of one method over repeated splits.

    Each split draws a calibration/test partition keyed by
    ``(base_seed, split index)``, so splits are reproducible independently
    of evaluation order, and shared across methods given the same seed.
    Perturbations apply to test rows only; by default they are redrawn per
    split, or drawn once for the whole matrix when ``redraw_per_split`` is
    false.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if n_splits < 1:
        raise ValueError(f"need at least one split, got {n_splits!r}")
    if k_test < 1:
        raise ValueError(f"need at least one test row, got {k_test!r}")
    fixed_perturbed: np.ndarray | None = None
    if perturbation is not None and not redraw_per_split:
        rng = np.random.default_rng([int(perturbation.seed), base_seed, 1])
        fixed_perturbed = _perturb_rows(
            matrix.scores, matrix.true_labels, perturbation, rng
        )
    results = []
    for j in range(n_splits):
        calib_idx, test_idx = _split_indices(
            matrix.n_rows, n_calib, k_test, [base_seed, j, 0]
        )
        calib = ScoreSample(matrix.scores[calib_idx, matrix.true_labels[calib_idx]])
        test_scores = matrix.scores[test_idx]
        test_labels = matrix.true_labels[test_idx]
        if perturbation is not None:
            if redraw_per_split:
                rng = np.random.default_rng([int(perturbation.seed), base_seed, j, 1])
                test_scores = _perturb_rows(test_scores, test_labels, perturbation, rng)
            else:
                test_scores = fixed_perturbed[test_idx]
        row_weights = method.weights[calib_idx] if method.weights is not None else None
        try:
            thr = method.threshold(calib, alpha, row_weights)
        except ValueError as exc:
            raise type(exc)(f"split {j}: {exc}") from exc
        cutoff = np.inf if thr.is_unbounded else thr.threshold
        member = test_scores <= cutoff
        covered = int(member[np.arange(test_labels.size), test_labels].sum())
        results.append(
            SplitResult(
                coverage=covered / k_test,
                mean_set_size=float(member.sum(axis=1).mean()),
            )
        )
    coverages = np.array([r.coverage for r in results])
    sizes = np.array([r.mean_set_size for r in results])
    ddof = 1 if n_splits > 1 else 0
    return EvalReport(
        method=method.name,
        alpha=alpha,
        n_splits=n_splits,
        n_calib=n_calib,
        k_test=k_test,
        base_seed=base_seed,
        params=method.params_dict(),
        perturbation=None if perturbation is None else perturbation_dict(perturbation),
        per_split=tuple(results),
        coverage_mean=float(coverages.mean()),
        coverage_std=float(coverages.std(ddof=ddof)),
        set_size_mean=float(sizes.mean()),
        set_size_std=float(sizes.std(ddof=ddof)),
    )


def compare(
    matrix: ScoreMatrix,
    methods: Sequence[MethodSpec],
    alpha: float,
    n_splits: int,
    n_calib: int,
    k_test: int,
    base_seed: int,
    perturbation: PerturbationSpec | None = None,
    redraw_per_split: bool = True,
) -> list[EvalReport]:
    """Evaluate several methods on identical splits (paired reports)."""
    return [
        evaluate(
            matrix, m, alpha, n_splits, n_calib, k_test, base_seed,
            perturbation=perturbation, redraw_per_split=redraw_per_split,
        )
        for m in methods
    ]


# ---------------------------------------------------------------------------
# File ingestion


def read_scores(path, has_header: bool = False) -> ScoreSample:
    """Parse a one-score-per-line CSV file into a sample."""
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if has_header and lineno == 1:
                continue
            try:
                values.append(float(row[0]))
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: not a score: {row[0]!r}") from exc
    try:
        return ScoreSample(values)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def read_weighted_scores(path, test_weight: float) -> WeightedScores:
    """Parse a CSV with header ``score,weight`` into weighted scores."""
    scores, weights = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["score", "weight"]:
            raise FileFormatError(f"{path}: expected header 'score,weight'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise FileFormatError(f"{path}:{lineno}: expected two columns")
            try:
                scores.append(float(row[0]))
                weights.append(float(row[1]))
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: bad number in {row!r}") from exc
    try:
        return WeightedScores(scores, weights, test_weight)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def read_matrix(path) -> ScoreMatrix:
    """Parse a score-matrix CSV with header ``true_label,s_0,...,s_{L-1}``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip().lower() != "true_label":
            raise FileFormatError(f"{path}: expected header starting with 'true_label'")
        n_labels = len(header) - 1
        if n_labels < 1:
            raise FileFormatError(f"{path}: header names no score columns")
        labels, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != n_labels + 1:
                raise FileFormatError(
                    f"{path}:{lineno}: expected {n_labels + 1} fields, got {len(row)}"
                )
            try:
                labels.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: bad number in {row!r}") from exc
    try:
        return ScoreMatrix(rows, labels)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_report_csv(reports: Sequence[EvalReport], path) -> None:
    """Plot-ready per-split table for one or more reports."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "split", "coverage", "mean_set_size"])
        for report in reports:
            for j, r in enumerate(report.per_split):
                writer.writerow([report.method, j, repr(r.coverage), repr(r.mean_set_size)])
