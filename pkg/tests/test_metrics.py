import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sacesim.metrics import (
    bounds_containment,
    compute_bias,
    compute_coverage,
    compute_mse,
    coverage_band,
    mean_estimate,
    summarize_analyzed,
    summarize_method,
)


class TestComputeBias:
    def test_unbiased_constant(self):
        assert compute_bias([5.0, 5.0, 5.0], 5.0) == (0.0, 0.0)

    def test_hand_example(self):
        bias, mc_se = compute_bias([4.0, 6.0], 5.0)
        assert bias == pytest.approx(0.0, abs=1e-12)
        assert mc_se == pytest.approx(1.0, abs=1e-12)

    def test_constant_shift(self):
        bias, mc_se = compute_bias([6.0, 6.0], 5.0)
        assert bias == pytest.approx(1.0, abs=1e-12)
        assert mc_se == 0.0

    def test_too_few(self):
        with pytest.raises(ValueError):
            compute_bias([1.0], 0.0)


class TestComputeMse:
    def test_zero(self):
        assert compute_mse([3.0, 3.0], 3.0) == (0.0, 0.0)

    def test_symmetric_errors(self):
        mse, mc_se = compute_mse([4.0, 6.0], 5.0)
        assert mse == pytest.approx(1.0, abs=1e-12)
        assert mc_se == pytest.approx(0.0, abs=1e-12)

    def test_asymmetric_errors(self):
        mse, mc_se = compute_mse([5.0, 7.0], 5.0)
        assert mse == pytest.approx(2.0, abs=1e-12)
        assert mc_se == pytest.approx(2.0, abs=1e-12)


class TestComputeCoverage:
    def test_all_contain(self):
        assert compute_coverage([(0.0, 2.0), (0.5, 1.5)], 1.0) == (1.0, 0.0)

    def test_half_of_hundred(self):
        intervals = [(0.0, 2.0)] * 50 + [(3.0, 4.0)] * 50
        coverage, mc_se = compute_coverage(intervals, 1.0)
        assert coverage == 0.5
        assert mc_se == pytest.approx(0.05, abs=1e-12)

    def test_none_contain(self):
        assert compute_coverage([(2.0, 3.0)] * 4, 1.0) == (0.0, 0.0)

    def test_closed_interval(self):
        coverage, _ = compute_coverage([(1.0, 2.0)], 1.0)
        assert coverage == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            compute_coverage([], 1.0)


class TestCoverageBand:
    def test_reference_values(self):
        lo, hi = coverage_band(0.95, 1300)
        assert round(lo, 3) == 0.938
        assert round(hi, 3) == 0.962

    def test_band_shrinks_with_n(self):
        w1 = np.diff(coverage_band(0.95, 100))[0]
        w2 = np.diff(coverage_band(0.95, 400))[0]
        assert w2 == pytest.approx(w1 / 2, rel=1e-9)

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.2])
    def test_domain(self, level):
        with pytest.raises(ValueError):
            coverage_band(level, 100)


class TestMeanEstimate:
    def test_constant(self):
        mean, (lo, hi) = mean_estimate([3.0, 3.0, 3.0])
        assert mean == 3.0
        assert (lo, hi) == (3.0, 3.0)

    def test_hand_example(self):
        mean, (lo, hi) = mean_estimate([4.0, 6.0])
        assert mean == 5.0
        assert lo == pytest.approx(5.0 - 1.9599639845400542, abs=1e-9)
        assert hi == pytest.approx(5.0 + 1.9599639845400542, abs=1e-9)

    def test_symmetry(self):
        mean, (lo, hi) = mean_estimate([1.0, 2.0, 4.0, 9.0])
        assert hi - mean == pytest.approx(mean - lo, abs=1e-12)


class TestBoundsContainment:
    def test_all_inside(self):
        assert bounds_containment([1.0, 2.0], [(0.0, 3.0), (1.5, 2.5)]) == 1.0

    def test_degenerate_bounds_count_as_contained(self):
        assert bounds_containment([2.0], [(2.0, 2.0)]) == 1.0

    def test_mixed(self):
        assert bounds_containment([1.0, 5.0], [(0.0, 2.0), (0.0, 2.0)]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            bounds_containment([1.0], [(0.0, 1.0), (0.0, 1.0)])


class TestMseIdentity:
    @given(st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=200),
           st.floats(min_value=-10, max_value=10))
    def test_mse_equals_bias_squared_plus_population_variance(self, values, estimand):
        bias, _ = compute_bias(values, estimand)
        mse, _ = compute_mse(values, estimand)
        arr = np.asarray(values)
        population_variance = float(((arr - arr.mean()) ** 2).mean())
        assert abs(mse - bias**2 - population_variance) < 1e-10


class TestPermutationInvariance:
    @given(st.lists(st.floats(min_value=-100, max_value=100), min_size=3, max_size=50),
           st.randoms())
    def test_bias_mse_invariant(self, values, rnd):
        shuffled = list(values)
        rnd.shuffle(shuffled)
        assert compute_bias(values, 1.0) == pytest.approx(compute_bias(shuffled, 1.0))
        assert compute_mse(values, 1.0) == pytest.approx(compute_mse(shuffled, 1.0))


class TestSummarizeMethod:
    def test_fields_consistent(self):
        estimates = [4.0, 5.0, 6.0, 5.5]
        intervals = [(e - 2, e + 2) for e in estimates]
        summary = summarize_method("E", "CCA", "ALL", estimates, intervals,
                                   [400.0] * 4, "THETA1", 5.0)
        assert summary.n_sim_used == 4
        assert summary.mean_estimate == pytest.approx(np.mean(estimates))
        assert summary.bias == pytest.approx(np.mean(estimates) - 5.0)
        assert summary.avg_n_analyzed == 400.0
        assert 0.0 <= summary.coverage <= 1.0
        assert summary.mse >= summary.bias ** 2 - 1e-12


class TestSummarizeAnalyzed:
    def test_table_shape(self):
        groups = {
            2.0: {"MI": [500.0, 500.0], "CCA": [430.0, 434.0], "SACE_ALL": [390.0, 388.0],
                  "SACE_NO_HC": [389.0, 389.0], "SACE_NO_GA": [382.0, 382.0]},
            1.0: {"MI": [500.0], "CCA": [418.0], "SACE_ALL": [370.0],
                  "SACE_NO_HC": [369.9], "SACE_NO_GA": [361.0]},
        }
        rows = summarize_analyzed(groups, 500)
        assert [row["survival_or"] for row in rows] == [2.0, 1.0]
        assert rows[0]["mi_n"] == 500.0
        assert rows[0]["survivors_pct"] == pytest.approx(100 * 432 / 500)
        assert rows[1]["as_pct_all"] == pytest.approx(100 * 370 / 500)
