import numpy as np
import pytest

from sacesim.config import default_dgm_params, scenario_grid
from sacesim.dgm import CovariateTable, TrialDataset, generate_trial
from sacesim.oracle import (
    EmptyStratumError,
    EstimandSet,
    StratumLabel,
    average_reference,
    classify_stratum,
    sace_reference,
    strata_census,
)


def make_trial(y1, y0, s1, s0, z=None):
    """Synthetic trial with dummy covariates for oracle-side tests."""
    n = len(y1)
    y1 = np.asarray(y1, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    s1 = np.asarray(s1, dtype=np.int8)
    s0 = np.asarray(s0, dtype=np.int8)
    z = np.zeros(n, dtype=np.int8) if z is None else np.asarray(z, dtype=np.int8)
    observed_survival = np.where(z == 1, s1, s0).astype(np.int8)
    observed_outcome = np.where(observed_survival == 1,
                                np.where(z == 1, y1, y0), np.nan)
    cov = CovariateTable(
        gestational_age=np.zeros(n), head_circumference=np.zeros(n),
        ses=np.full(n, 7, dtype=np.int64), apgar=np.full(n, 8, dtype=np.int64))
    return TrialDataset(scenario_id="T", sim_index=0, covariates=cov, y1=y1, y0=y0,
                        s1=s1, s0=s0, z=z, observed_survival=observed_survival,
                        observed_outcome=observed_outcome)


class TestClassifyStratum:
    @pytest.mark.parametrize("s1,s0,expected", [
        (1, 1, StratumLabel.ALWAYS_SURVIVOR),
        (1, 0, StratumLabel.TREATMENT_ONLY_SURVIVOR),
        (0, 1, StratumLabel.CONTROL_ONLY_SURVIVOR),
        (0, 0, StratumLabel.NEVER_SURVIVOR),
    ])
    def test_all_cases(self, s1, s0, expected):
        assert classify_stratum(s1, s0) is expected


class TestSaceReference:
    def test_constant_difference_all_survive(self):
        trial = make_trial([105.0] * 4, [100.0] * 4, [1] * 4, [1] * 4)
        assert sace_reference(trial) == pytest.approx(5.0, abs=1e-12)

    def test_non_survivors_excluded(self):
        # Always survivor with difference 4; treatment-only survivor with 100.
        trial = make_trial([104.0, 200.0], [100.0, 100.0], [1, 1], [1, 0])
        assert sace_reference(trial) == pytest.approx(4.0, abs=1e-12)

    def test_empty_stratum(self):
        trial = make_trial([1.0, 2.0], [0.0, 0.0], [1, 0], [0, 1])
        with pytest.raises(EmptyStratumError):
            sace_reference(trial)

    def test_matches_brute_force_on_random_micro_trials(self):
        rng = np.random.default_rng(20240811)
        for _ in range(1000):
            n = int(rng.integers(1, 11))
            y1 = rng.normal(100, 15, n)
            y0 = rng.normal(100, 15, n)
            s1 = rng.integers(0, 2, n)
            s0 = rng.integers(0, 2, n)
            trial = make_trial(y1, y0, s1, s0)
            always = (s1 == 1) & (s0 == 1)
            if not always.any():
                with pytest.raises(EmptyStratumError):
                    sace_reference(trial)
                continue
            brute = float(np.mean([y1[i] - y0[i] for i in range(n) if always[i]]))
            assert sace_reference(trial) == pytest.approx(brute, abs=1e-12)


class TestAverageReference:
    def test_constant(self):
        assert average_reference([5.0, 5.0, 5.0]) == 5.0

    def test_mean(self):
        assert average_reference([4.0, 6.0]) == 5.0

    def test_empty(self):
        with pytest.raises(ValueError):
            average_reference([])

    def test_null_scenario_is_near_zero(self):
        scenario = next(s for s in scenario_grid() if s.id == "E")
        params = default_dgm_params()
        theta2s = [sace_reference(generate_trial(scenario, params, 99, k))
                   for k in range(40)]
        theta2 = average_reference(theta2s)
        mc_se = np.std(theta2s, ddof=1) / np.sqrt(len(theta2s))
        assert abs(theta2) < 4 * mc_se


class TestStrataCensus:
    def test_counts_sum_to_n(self):
        trial = generate_trial(scenario_grid()[0], default_dgm_params(), 3, 0)
        census = strata_census(trial)
        assert sum(census.values()) == len(trial)

    def test_deterministic_survival_all_always(self):
        trial = make_trial([1.0] * 5, [0.0] * 5, [1] * 5, [1] * 5)
        census = strata_census(trial)
        assert census[StratumLabel.ALWAYS_SURVIVOR] == 5
        assert census[StratumLabel.NEVER_SURVIVOR] == 0

    def test_null_survival_effect_balances_defier_strata(self):
        rng = np.random.default_rng(7)
        n = 100_000
        p = rng.random(n) * 0.5 + 0.4
        s1 = (rng.random(n) < p).astype(int)
        s0 = (rng.random(n) < p).astype(int)
        trial = make_trial(np.zeros(n), np.zeros(n), s1, s0)
        census = strata_census(trial)
        to = census[StratumLabel.TREATMENT_ONLY_SURVIVOR]
        co = census[StratumLabel.CONTROL_ONLY_SURVIVOR]
        assert abs(to - co) < 5 * np.sqrt(to + co)

    def test_nonzero_survival_effect_keeps_control_only_occupied(self):
        scenario = scenario_grid()[0]  # OR = 2
        params = default_dgm_params()
        counts = [strata_census(generate_trial(scenario, params, 55, k))
                  [StratumLabel.CONTROL_ONLY_SURVIVOR] for k in range(20)]
        assert sum(c > 0 for c in counts) > 10


class TestEstimandSet:
    def test_theta2_is_mean(self):
        est = EstimandSet.from_sims(5.0, [4.0, 6.0, 5.0])
        assert est.theta1 == 5.0
        assert est.theta2 == 5.0
        assert len(est.theta2_per_sim) == 3

    def test_mc_se(self):
        est = EstimandSet.from_sims(0.0, [4.0, 6.0])
        assert est.theta2_mc_se == pytest.approx(1.0, abs=1e-12)
