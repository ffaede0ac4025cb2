"""Tests for empirical quantiles, CDFs, and the conformal quantile."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lpconformal import ScoreSample, cdf, conformal_quantile, quantile


def quantile_scan_oracle(scores, beta):
    """Linear scan of the infimum definition: smallest s with cdf(s) >= beta."""
    ordered = sorted(scores)
    n = len(ordered)
    for k in range(1, n + 1):
        if k / n >= beta:
            return ordered[k - 1]
    return ordered[-1]


finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
small_samples = st.lists(finite_floats, min_size=1, max_size=20)


def _away_from_rank_boundaries(beta, n):
    # The implementation deliberately snaps levels within ~1e-12 of a rank
    # boundary; keep generated levels off those boundaries.
    return abs(beta * n - round(beta * n)) > 1e-6


class TestScoreSample:
    def test_sorts_and_keeps_duplicates(self):
        s = ScoreSample([3.0, 1.0, 2.0, 1.0])
        assert s.scores.tolist() == [1.0, 1.0, 2.0, 3.0]
        assert s.n == 4

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ScoreSample([])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ScoreSample([1.0, float("nan")])
        with pytest.raises(ValueError):
            ScoreSample([1.0, float("inf")])

    def test_scores_are_read_only(self):
        s = ScoreSample([1.0, 2.0])
        with pytest.raises(ValueError):
            s.scores[0] = 5.0


class TestQuantile:
    def test_midpoint_of_four(self):
        # Oracle: linear scan of the infimum definition over the 4 atoms.
        s = ScoreSample([1, 2, 3, 4])
        assert quantile_scan_oracle([1, 2, 3, 4], 0.5) == 2
        assert quantile(s, 0.5) == 2

    def test_level_one_is_maximum(self):
        assert quantile(ScoreSample([1, 2, 3, 4]), 1.0) == 4

    def test_ten_evenly_spaced(self):
        s = ScoreSample(np.arange(1, 11) / 10)
        assert quantile(s, 0.9) == pytest.approx(0.9)

    def test_rejects_out_of_range_levels(self):
        s = ScoreSample([1.0])
        with pytest.raises(ValueError):
            quantile(s, 0.0)
        with pytest.raises(ValueError):
            quantile(s, 1.5)

    @given(small_samples, st.floats(min_value=1e-6, max_value=1.0))
    def test_matches_scan_oracle(self, values, beta):
        assume(_away_from_rank_boundaries(beta, len(values)))
        assert quantile(ScoreSample(values), beta) == quantile_scan_oracle(values, beta)

    @given(small_samples, st.floats(min_value=1e-6, max_value=1.0),
           st.floats(min_value=-100, max_value=100))
    def test_translation_equivariance(self, values, beta, c):
        assume(_away_from_rank_boundaries(beta, len(values)))
        base = quantile(ScoreSample(values), beta)
        shifted = quantile(ScoreSample([v + c for v in values]), beta)
        assert shifted == pytest.approx(base + c, abs=1e-9)

    @given(small_samples, st.floats(min_value=1e-6, max_value=1.0),
           st.floats(min_value=1e-6, max_value=1.0))
    def test_monotone_in_level(self, values, b1, b2):
        lo, hi = min(b1, b2), max(b1, b2)
        s = ScoreSample(values)
        assert quantile(s, lo) <= quantile(s, hi)

    @given(small_samples, st.floats(min_value=1e-6, max_value=1.0))
    def test_galois_pair_with_cdf(self, values, beta):
        assume(_away_from_rank_boundaries(beta, len(values)))
        s = ScoreSample(values)
        q = quantile(s, beta)
        assert cdf(s, q) >= beta
        below = [v for v in values if v < q]
        if below:
            assert cdf(s, max(below)) < beta


class TestCdf:
    @pytest.mark.parametrize("q,expected", [(2.0, 0.5), (0.0, 0.0), (4.0, 1.0)])
    def test_counts_over_four_atoms(self, q, expected):
        assert cdf(ScoreSample([1, 2, 3, 4]), q) == expected

    def test_right_continuity_at_atoms(self):
        s = ScoreSample([1.0, 2.0])
        assert cdf(s, 1.0) == 0.5
        assert cdf(s, np.nextafter(1.0, 0.0)) == 0.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            cdf(ScoreSample([1.0]), float("nan"))

    @given(small_samples, st.floats(min_value=-1e6, max_value=1e6),
           st.floats(min_value=-1e6, max_value=1e6))
    def test_nondecreasing(self, values, q1, q2):
        lo, hi = min(q1, q2), max(q1, q2)
        s = ScoreSample(values)
        assert cdf(s, lo) <= cdf(s, hi)


class TestConformalQuantile:
    def test_n_99(self):
        # ceil(0.9 * 100) = 90 -> level 90/99 -> 90th order statistic.
        s = ScoreSample(np.arange(1.0, 100.0))
        res = conformal_quantile(s, 0.1)
        assert res.threshold == 90.0
        assert res.level_used == pytest.approx(90 / 99)

    def test_n_9_hits_maximum(self):
        # ceil(0.9 * 10) = 9 <= 9 -> level 1 -> max score.
        s = ScoreSample(np.arange(1.0, 10.0))
        res = conformal_quantile(s, 0.1)
        assert res.threshold == 9.0
        assert res.level_used == 1.0
        assert not res.is_unbounded

    def test_n_3_unbounded(self):
        # ceil(0.9 * 4) = 4 > 3 -> unbounded marker.
        res = conformal_quantile(ScoreSample([1.0, 2.0, 3.0]), 0.1)
        assert res.is_unbounded
        assert res.threshold is None

    def test_rejects_bad_alpha(self):
        s = ScoreSample([1.0, 2.0])
        for alpha in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(ValueError):
                conformal_quantile(s, alpha)

    @settings(max_examples=50)
    @given(st.integers(min_value=1, max_value=200), st.floats(min_value=0.01, max_value=0.5))
    def test_threshold_at_least_plain_quantile(self, n, alpha):
        rng = np.random.default_rng(n)
        s = ScoreSample(rng.normal(size=n))
        res = conformal_quantile(s, alpha)
        if not res.is_unbounded:
            assert res.threshold >= quantile(s, 1 - alpha)
