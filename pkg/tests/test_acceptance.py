"""
Monte Carlo acceptance runs. Minutes each; select with `pytest -m slow`.
"""
import numpy as np
import pytest
from scipy import stats

from core.methods import STUDY_ROSTER
from core.simulator import family_power, get_scenario
from services.workers import run_study

pytestmark = pytest.mark.slow


# Reference rejection proportions at the 0.05 level, Exp(1.5) in both arms, n=50, 30% censoring
EXP15_N50_C30_SIZE = {
    "energy:alpha=1": 0.064,
    "energy:alpha=0.4": 0.048,
    "energy:alpha=0.8": 0.062,
    "energy:alpha=1.2": 0.064,
    "energy:alpha=1.6": 0.074,
    "gaussian:sigma=1": 0.064,
    "laplacian:sigma=1": 0.044,
    "ratquad:c=1,beta=1": 0.054,
    "ratquad:c=2,beta=2": 0.056,
    "logrank": 0.066,
    "gehan": 0.068,
    "tarone-ware": 0.066,
    "peto-peto": 0.068,
    "fleming-harrington:rho=1,gamma=1": 0.056,
}


class TestNullCalibration:

    def test_exp1_n20_light_censoring(self):
        """Exp(1) in both arms: p-values are close to Uniform(0, 1) for energy and log-rank."""
        config = get_scenario("null-exp1-n20-c10").with_overrides(
            methods=("energy:alpha=1", "logrank"), replications=500, permutations=1000, seed=2024,
        )
        result = run_study(config)
        rows = {row["method"]: row for row in result.summary()}

        energy = rows["energy:alpha=1"]
        assert 0.023 <= energy["rejection_rate"] <= 0.073
        assert energy["mean_p"] == pytest.approx(0.496, abs=0.04)
        assert energy["sd_p"] == pytest.approx(0.286, abs=0.03)

        assert 0.025 <= rows["logrank"]["rejection_rate"] <= 0.075

        for m in range(len(result.methods)):
            pvalues = result.pvalues[:, m]
            pvalues = pvalues[~np.isnan(pvalues)]
            assert stats.kstest(pvalues, "uniform").pvalue > 0.001

    def test_exp15_n50_heavy_censoring_whole_roster(self):
        """Every roster method stays within 0.03 of its reference size."""
        assert set(EXP15_N50_C30_SIZE) == set(STUDY_ROSTER)
        config = get_scenario("null-exp1.5-n50-c30").with_overrides(
            methods=STUDY_ROSTER, replications=2000, permutations=1000, seed=1505,
        )
        rates = run_study(config).rejection_rates()
        for method, expected in EXP15_N50_C30_SIZE.items():
            assert rates[method] == pytest.approx(expected, abs=0.03), method


class TestPowerOrdering:

    def test_logrank_competitive_under_proportional_hazards(self):
        config = get_scenario("ph-theta2-n100").with_overrides(
            methods=("energy:alpha=1", "logrank"), replications=200, permutations=500, seed=77,
        )
        rates = run_study(config).rejection_rates()
        assert rates["logrank"] >= rates["energy:alpha=1"] - 0.05

    def test_distance_methods_win_on_cure_plateau(self):
        config = get_scenario("cure", 100).with_overrides(replications=200, permutations=500, seed=5)
        power = family_power(run_study(config))
        assert (power["energy"] + power["kernel"]) / 2 > power["logrank"]

    def test_gaussian_kernel_dominates_on_delayed_effect(self):
        """Hazards that separate late leave the log-rank test close to its null rejection rate."""
        config = get_scenario("delayed", 100).with_overrides(
            methods=("gaussian:sigma=1", "logrank"), replications=200, permutations=500, seed=41,
        )
        rates = run_study(config).rejection_rates()
        assert rates["gaussian:sigma=1"] > rates["logrank"] + 0.10
        assert rates["logrank"] < 0.25
