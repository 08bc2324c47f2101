"""
Tests for lifetime and censoring models, calibration, scenario lookup and
study result summaries.
"""
import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from core.errors import InvalidParameterError, NoConvergenceError, UnknownScenarioError
from core.simulator import (
    Exponential, Gamma, LogNormal, PiecewiseHazard, HazardSegment, constant_then_zero,
    UniformCensoring, ExponentialCensoring, TargetRateCensoring,
    censor, apply_censoring, calibrate_censoring_rate, sample_lifetime, derive_seed,
    ScenarioConfig, StudyResult, generate_dataset, resolve_censoring, family_power, power_curve,
    builtin_scenarios, scenario_group, get_scenario, lifetime_curves,
    CURE_HAZARD, MULTIMODAL_HAZARD, DELAYED_HAZARD, NULL_MODELS,
)


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------

class TestDeriveSeed:

    def test_deterministic(self):
        assert derive_seed(1, 2) == derive_seed(1, 2)

    def test_keys_matter(self):
        seeds = {derive_seed(7, r) for r in range(100)} | {derive_seed(7, 0, m) for m in range(1, 15)}
        assert len(seeds) == 114


# ---------------------------------------------------------------------------
# Lifetime models
# ---------------------------------------------------------------------------

class TestPiecewiseHazard:

    def test_cure_closed_forms(self):
        """Lambda(5) = integral of 0.5 - 0.1 t over [0, 5] = 1.25."""
        assert CURE_HAZARD.cumulative_hazard(5.0) == pytest.approx(1.25)
        assert CURE_HAZARD.cumulative_hazard(50.0) == pytest.approx(1.25)
        assert CURE_HAZARD.cure_fraction() == pytest.approx(math.exp(-1.25))

    def test_delayed_closed_form(self):
        assert DELAYED_HAZARD.cumulative_hazard(5.0) == pytest.approx(1.75)
        assert DELAYED_HAZARD.hazard(7.0) == pytest.approx(0.1)

    def test_multimodal_closed_form(self):
        assert MULTIMODAL_HAZARD.cumulative_hazard(5.0) == pytest.approx(1.75)
        assert MULTIMODAL_HAZARD.hazard(1.5) == pytest.approx(0.5)

    def test_cure_fraction_empirical(self):
        draws = CURE_HAZARD.sample(np.random.default_rng(1), 100_000)
        assert np.mean(np.isinf(draws)) == pytest.approx(math.exp(-1.25), abs=0.01)

    def test_constant_hazard_matches_exponential(self):
        draws = constant_then_zero(2.0).sample(np.random.default_rng(2), 100_000)
        assert np.isfinite(draws).all()
        assert stats.kstest(draws, "expon", args=(0.0, 0.5)).statistic < 0.01

    @pytest.mark.parametrize("model", [CURE_HAZARD, MULTIMODAL_HAZARD, DELAYED_HAZARD])
    def test_inversion_reproduces_cumulative_hazard(self, model):
        """-log of the empirical survival follows Lambda at t = 1..5."""
        draws = model.sample(np.random.default_rng(3), 400_000)
        for t in range(1, 6):
            empirical = -math.log(np.mean(draws > t))
            assert empirical == pytest.approx(float(model.cumulative_hazard(t)), abs=0.02)

    def test_invert_round_trip(self):
        t = np.linspace(0.0, 4.9, 50)
        np.testing.assert_allclose(CURE_HAZARD.invert(CURE_HAZARD.cumulative_hazard(t)), t, atol=1e-9)

    @pytest.mark.parametrize("rows", [
        [],
        [(1.0, 2.0, 0.5, 0.0)],
        [(0.0, 1.0, 0.5, 0.0), (2.0, 3.0, 0.5, 0.0)],
        [(0.0, 5.0, 0.2, -0.1)],
    ])
    def test_invalid_segments(self, rows):
        with pytest.raises(InvalidParameterError):
            PiecewiseHazard.from_rows(rows)

    def test_segment_mass(self):
        assert HazardSegment(0.0, 2.0, 1.0, 0.5).mass == pytest.approx(3.0)


class TestParametricModels:

    def test_exponential_survival(self):
        assert Exponential(2.0).survival(1.0) == pytest.approx(math.exp(-2.0))

    def test_gamma_one_is_exponential(self):
        assert Gamma(1.0, 1.0).cumulative_hazard(2.0) == pytest.approx(2.0)

    def test_lognormal_laplace_transform(self):
        """quad integration agrees with a Monte Carlo estimate."""
        model = LogNormal(0.0, 0.5)
        draws = model.sample(np.random.default_rng(4), 200_000)
        assert model.laplace_transform(0.7) == pytest.approx(np.mean(np.exp(-0.7 * draws)), abs=3e-3)

    def test_piecewise_laplace_transform_includes_cure(self):
        """Cured subjects are never observed, so the transform at c -> 0 is 1 - cure fraction."""
        assert CURE_HAZARD.laplace_transform(1e-12) == pytest.approx(1 - math.exp(-1.25), abs=1e-6)

    @pytest.mark.parametrize("factory", [lambda: Exponential(0.0), lambda: Gamma(-1.0, 1.0), lambda: LogNormal(0.0, 0.0)])
    def test_invalid_parameters(self, factory):
        with pytest.raises(InvalidParameterError):
            factory()


# ---------------------------------------------------------------------------
# Censoring
# ---------------------------------------------------------------------------

class TestCensoring:

    def test_censor(self):
        x, d = censor([1.0, 5.0, np.inf], [2.0, 3.0, 4.0])
        assert x.tolist() == [1.0, 3.0, 4.0]
        assert d.tolist() == [1, 0, 0]

    def test_tie_is_an_event(self):
        assert censor([2.0], [2.0])[1].tolist() == [1]

    def test_apply_censoring_scalar(self):
        x, d = apply_censoring(1.0, UniformCensoring(1e-9), np.random.default_rng(0))
        assert d == 0 and x < 1.0

    def test_sample_lifetime_scalar(self):
        value = sample_lifetime(Exponential(1.0), np.random.default_rng(0))
        assert isinstance(value, float)
        assert sample_lifetime(Exponential(1.0), np.random.default_rng(0), size=5).shape == (5,)

    def test_target_rate_needs_resolution(self):
        with pytest.raises(InvalidParameterError):
            TargetRateCensoring(0.3).sample(np.random.default_rng(0), 3)

    @pytest.mark.parametrize("target", [0.0, 1.0, 1.5])
    def test_target_range(self, target):
        with pytest.raises(InvalidParameterError):
            calibrate_censoring_rate(Exponential(1.0), target)


class TestCalibration:

    @pytest.mark.parametrize("target, expected", [(0.1, 1 / 9), (0.3, 3 / 7), (0.5, 1.0)])
    def test_exponential_closed_form(self, target, expected):
        """P(C < T) = c / (1 + c) for T ~ Exp(1)."""
        assert calibrate_censoring_rate(Exponential(1.0), target).rate == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("label, model", NULL_MODELS)
    @pytest.mark.parametrize("target", [0.1, 0.3])
    def test_empirical_rate(self, label, model, target):
        rng = np.random.default_rng(derive_seed(5, int(target * 10)))
        censoring = calibrate_censoring_rate(model, target)
        t = model.sample(rng, 1_000_000)
        c = censoring.sample(rng, 1_000_000)
        assert np.mean(c < t) == pytest.approx(target, abs=0.01)

    def test_unreachable_target(self, monkeypatch):
        """No rate brackets a target the model can never reach."""
        monkeypatch.setattr(Exponential, "censoring_probability", lambda self, c: 0.0)
        with pytest.raises(NoConvergenceError):
            calibrate_censoring_rate(Exponential(1.0), 0.5)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

def _small_config(**changes):
    base = ScenarioConfig(
        name="tiny",
        lifetime0=Exponential(1.0), lifetime1=Exponential(1.5),
        censoring0=UniformCensoring(10.0), censoring1=UniformCensoring(10.0),
        n0=8, n1=6, methods=("energy:alpha=1", "logrank"),
        replications=3, permutations=19, seed=11,
    )
    return base.with_overrides(**changes)


class TestScenarios:

    def test_builtin_catalogue(self):
        scenarios = builtin_scenarios()
        assert len(scenario_group("null")) == 24
        assert len(scenario_group("ph-grid")) == 30
        assert {"cure-n20", "multimodal-n50", "delayed-n100"} <= set(scenarios)
        assert all(len(c.methods) == 14 for c in scenarios.values())

    def test_null_naming(self):
        config = get_scenario("null-exp1-n20-c10")
        assert config.n0 == config.n1 == 20
        assert config.censoring0 == TargetRateCensoring(0.1)
        assert config.lifetime0 == config.lifetime1 == Exponential(1.0)

    def test_ph_grid(self):
        config = get_scenario("ph-theta2-n50")
        assert config.lifetime1 == Exponential(2.0)
        assert config.censoring0 == UniformCensoring(10.0)

    def test_family_name_with_size(self):
        config = get_scenario("cure", 40)
        assert (config.name, config.n0) == ("cure-n40", 40)
        assert config.lifetime1 == CURE_HAZARD

    def test_size_override_renames(self):
        config = get_scenario("null-gamma1-n50-c30", 30)
        assert config.name == "null-gamma1-n50-c30@n30"
        assert config.n1 == 30

    def test_unknown(self):
        with pytest.raises(UnknownScenarioError):
            get_scenario("no-such-scenario")

    @pytest.mark.parametrize("changes", [{"n0": 1}, {"replications": 0}, {"alpha_level": 1.0}, {"methods": ()}])
    def test_invalid_config(self, changes):
        with pytest.raises(InvalidParameterError):
            _small_config(**changes)

    def test_with_overrides_skips_none(self):
        assert _small_config(seed=None).seed == 11

    def test_generate_dataset_reproducible(self):
        config = _small_config()
        a = generate_dataset(config, np.random.default_rng(1))
        b = generate_dataset(config, np.random.default_rng(1))
        np.testing.assert_array_equal(a.group0.times, b.group0.times)
        assert (a.n0, a.n1) == (8, 6)

    def test_generate_dataset_draw_order(self):
        """Lifetimes then censoring times for group 0, then the same for group 1."""
        config = _small_config()
        data = generate_dataset(config, np.random.default_rng(5))
        rng = np.random.default_rng(5)
        x0, d0 = apply_censoring(sample_lifetime(config.lifetime0, rng, 8), config.censoring0, rng)
        x1, d1 = apply_censoring(sample_lifetime(config.lifetime1, rng, 6), config.censoring1, rng)
        np.testing.assert_array_equal(data.group0.times, x0)
        np.testing.assert_array_equal(data.group0.events, d0)
        np.testing.assert_array_equal(data.group1.times, x1)
        np.testing.assert_array_equal(data.group1.events, d1)

    def test_resolve_target_censoring(self):
        config = get_scenario("null-exp1-n20-c30")
        c0, c1 = resolve_censoring(config)
        assert isinstance(c0, ExponentialCensoring)
        assert c0.rate == pytest.approx(3 / 7, rel=1e-8)

    def test_lifetime_curves(self):
        curves = lifetime_curves(get_scenario("cure"), np.array([0.0, 5.0, 20.0]))
        treated = curves[curves["group"] == 1]["survival"].to_numpy()
        np.testing.assert_allclose(treated, [1.0, math.exp(-1.25), math.exp(-1.25)])


# ---------------------------------------------------------------------------
# Study results
# ---------------------------------------------------------------------------

class TestStudyResult:

    def _result(self):
        pvalues = np.array([
            [0.04, 0.01, np.nan],
            [0.96, 0.20, np.nan],
        ])
        return StudyResult("demo", ["energy:alpha=1", "logrank", "gehan"], pvalues, alpha_level=0.05)

    def test_summary(self):
        rows = {r["method"]: r for r in self._result().summary()}
        assert rows["energy:alpha=1"]["mean_p"] == pytest.approx(0.5)
        assert rows["energy:alpha=1"]["sd_p"] == pytest.approx(0.6505382)
        assert rows["energy:alpha=1"]["rejection_rate"] == pytest.approx(0.5)
        assert rows["gehan"]["n_degenerate"] == 2
        assert math.isnan(rows["gehan"]["rejection_rate"])

    def test_frames(self):
        result = self._result()
        assert list(result.summary_frame().columns) == ["method", "rejection_rate", "mean_p", "sd_p", "n_degenerate"]
        long = result.pvalue_frame()
        assert len(long) == 6
        assert long.iloc[1].to_dict() == {"scenario": "demo", "replication": 0, "method": "logrank", "p_value": 0.01}

    def test_family_power_skips_nan(self):
        assert family_power(self._result()) == {"energy": pytest.approx(0.5), "logrank": pytest.approx(0.5)}

    def test_power_curve(self):
        frame = power_curve({2.0: self._result(), 1.0: self._result()})
        assert isinstance(frame, pd.DataFrame)
        assert frame["theta"].tolist()[:3] == [1.0, 1.0, 1.0]
        assert len(frame) == 6
