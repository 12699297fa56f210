"""
Tests for CF_B prediction, error metrics and the method comparison
"""

import math

import numpy as np
import pytest

from stochcap.error_handler import ArgumentError
from stochcap.models import CfbCurve, LevelCounts, ObservationSet, WeibullParams
from stochcap.simulate import DemandConfig, synth_observations
from stochcap.validate import (
    bias_profile,
    compare_methods,
    empirical_cfb,
    error_metrics,
    exposure_histogram,
    predicted_cfb,
)


def curve(cfb, kind="empirical", levels=None):
    levels = levels or tuple(range(60, 60 + len(cfb)))
    increments = np.diff(np.concatenate([[0.0], cfb]))
    return CfbCurve(
        levels=levels,
        exposure=(10,) * len(cfb),
        increments=tuple(increments),
        cfb=tuple(float(v) for v in cfb),
        kind=kind,
    )


def counts(levels, exposure):
    return LevelCounts(
        levels=np.asarray(levels),
        exposure=np.asarray(exposure),
        breakdowns=np.zeros(len(levels), dtype=np.int64),
    )


class TestExposure:
    """Records per level"""

    def test_counts_censored_and_uncensored(self):
        obs = ObservationSet.from_pairs([(50, False), (50, True), (60, False)])
        histogram = exposure_histogram(obs)
        assert histogram.exposure[0] == 2
        assert histogram.exposure[-1] == 1
        assert histogram.exposure.sum() == len(obs)

    def test_empty_levels_stay_in_domain(self):
        obs = ObservationSet.from_pairs([(50, False), (53, True)])
        histogram = exposure_histogram(obs)
        assert histogram.levels.tolist() == [50, 51, 52, 53]
        assert histogram.exposure.tolist() == [1, 0, 0, 1]

    def test_empty_set(self):
        with pytest.raises(ArgumentError):
            exposure_histogram(ObservationSet(()))


class TestPredictedCfb:
    """b̂_j = r_j·F(I_j), accumulated"""

    def test_product_and_sum(self):
        predicted = predicted_cfb(counts([1, 2], [10, 20]), lambda levels: np.array([0.1, 0.2]))
        assert predicted.increments == pytest.approx((1.0, 4.0))
        assert predicted.cfb == pytest.approx((1.0, 5.0))
        assert predicted.kind == "predicted"

    def test_single_level(self):
        predicted = predicted_cfb(counts([70], [100]), lambda levels: np.full(len(levels), 0.02))
        assert predicted.cfb[0] == pytest.approx(2.0)

    def test_zero_cdf(self):
        predicted = predicted_cfb(counts([60, 61, 62], [5, 0, 7]), lambda levels: np.zeros(len(levels)))
        assert predicted.cfb == (0.0, 0.0, 0.0)

    def test_accepts_weibull_params(self, params_without_vsl):
        exposure = counts([80, 90], [100, 50])
        predicted = predicted_cfb(exposure, params_without_vsl, method="mle")
        expected = 100 * params_without_vsl.cdf(80) + 50 * params_without_vsl.cdf(90)
        assert predicted.total == pytest.approx(expected)
        assert predicted.method == "mle"

    def test_monotone_for_monotone_cdf(self, params_with_vsl):
        exposure = counts(list(range(40, 120)), list(np.random.default_rng(1).integers(0, 50, 80)))
        values = np.asarray(predicted_cfb(exposure, params_with_vsl).cfb)
        assert np.all(np.diff(values) >= 0)


class TestEmpiricalCfb:
    """Observed breakdowns per level, accumulated"""

    def test_counting(self):
        obs = ObservationSet.from_pairs([(60, True), (60, True), (80, True), (70, False)])
        empirical = empirical_cfb(obs)
        assert empirical.cfb[0] == 2
        assert empirical.cfb[-1] == 3
        assert empirical.kind == "empirical"

    def test_no_breakdowns(self):
        empirical = empirical_cfb(ObservationSet.from_pairs([(60, False), (62, False)]))
        assert set(empirical.cfb) == {0.0}

    def test_total_equals_breakdowns(self, plm_table_observations):
        assert empirical_cfb(plm_table_observations).total == plm_table_observations.n_breakdowns


class TestErrorMetrics:
    """SSE, RMSE, ARE, AWRE"""

    def test_identical_curves(self):
        a = curve([1, 3, 4])
        report = error_metrics(a, curve([1, 3, 4], "predicted"))
        assert (report.sse, report.rmse, report.are, report.awre) == (0, 0, 0, 0)

    def test_two_level_example(self):
        """Empirical {2, 4} against predicted {1, 5}"""
        report = error_metrics(curve([2, 4]), curve([1, 5], "predicted"))
        assert report.sse == pytest.approx(2.0)
        assert report.rmse == pytest.approx(1.0)
        assert report.are == pytest.approx(37.5)
        assert report.awre == pytest.approx((1 * 0.5 + 4 * 0.25) / 5 * 100)
        assert report.n == 2

    def test_zero_empirical_levels_skipped_for_relative_errors(self):
        report = error_metrics(curve([0, 0, 2, 4]), curve([0.5, 1, 1, 5], "predicted"))
        assert report.n == 4
        assert report.n_relative == 2
        assert report.sse == pytest.approx(0.25 + 1 + 1 + 1)
        assert report.are == pytest.approx(37.5)

    def test_awre_within_relative_error_range(self):
        empirical = curve([1, 2, 4, 7, 9])
        predicted = curve([0.5, 2.5, 3.0, 8.0, 9.5], "predicted")
        report = error_metrics(empirical, predicted)
        relative = np.abs(np.array(empirical.cfb) - np.array(predicted.cfb)) / np.array(empirical.cfb) * 100
        assert relative.min() - 1e-12 <= report.awre <= relative.max() + 1e-12

    def test_awre_falls_back_to_are_without_weights(self):
        report = error_metrics(curve([1, 2]), curve([0, 0], "predicted"))
        assert report.awre == report.are == pytest.approx(100.0)

    def test_domain_mismatch(self):
        with pytest.raises(ArgumentError):
            error_metrics(curve([1, 2]), curve([1, 2], "predicted", levels=(61, 62)))


class TestBiasProfile:
    """Under/over prediction around the median breakdown level"""

    def test_signs(self):
        empirical = curve([2, 4, 5, 6])
        predicted = curve([0.5, 1.0, 3.5, 6.5], "predicted")
        profile = bias_profile(empirical, predicted)
        assert profile.median_level == pytest.approx(61.0)
        assert profile.low < 0
        assert profile.high > 0

    def test_requires_breakdowns(self):
        with pytest.raises(ArgumentError):
            bias_profile(curve([0, 0]), curve([0, 1], "predicted"))


@pytest.fixture(scope="module")
def comparison():
    truth = WeibullParams(scale=146.42, shape=6.75, window_minutes=3, eval_step_minutes=1)
    demand = DemandConfig(mean=68, reversion=0.05, volatility=3, lower=46, upper=115)
    obs, _ = synth_observations(truth, demand, 8_250, seed=11)
    return obs, compare_methods(obs)


class TestCompareMethods:
    """All estimators on the same data"""

    def test_all_methods_present(self, comparison):
        _, result = comparison
        assert set(result.methods) == {"plm", "plm-hazard", "mle-old", "mle-new"}
        assert len(result.table()) == 4

    def test_curves_share_domain(self, comparison):
        obs, result = comparison
        for method in result.methods.values():
            assert method.curve.levels == result.empirical.levels
            assert len(method.probabilities) == len(result.empirical.levels)
        assert result.empirical.total == obs.n_breakdowns

    def test_plm_cdf_total_close_to_observed(self, comparison):
        """PLM's CDF gets the total number of breakdowns roughly right"""
        obs, result = comparison
        total = result.methods["plm"].curve.total
        assert abs(total - obs.n_breakdowns) <= 3 * math.sqrt(obs.n_breakdowns) + 3

    def test_plm_hazard_predicts_too_few(self, comparison):
        _, result = comparison
        assert result.methods["plm-hazard"].curve.total < result.methods["plm"].curve.total

    def test_new_mle_total_within_binomial_band(self, comparison):
        obs, result = comparison
        expected = result.methods["mle-new"].curve.total
        assert abs(obs.n_breakdowns - expected) <= 3 * math.sqrt(expected)

    def test_params_only_for_parametric(self, comparison):
        _, result = comparison
        assert result.methods["mle-new"].params is not None
        assert result.methods["plm"].params is None
        assert result.methods["plm"].survival is not None


@pytest.fixture(scope="module")
def ensemble():
    truth = WeibullParams(scale=146.42, shape=6.75, window_minutes=3, eval_step_minutes=1)
    demand = DemandConfig(mean=68, reversion=0.05, volatility=3, lower=46, upper=115)
    results = []
    for seed in range(20):
        obs, _ = synth_observations(truth, demand, 8_250, seed=100 + seed)
        results.append(compare_methods(obs))
    return results


@pytest.mark.slow
class TestMethodRanking:
    """Across datasets sized like a single work-zone campaign"""

    def test_new_mle_has_lowest_awre(self, ensemble):
        wins = sum(
            r.methods["mle-new"].report.awre < r.methods["mle-old"].report.awre
            and r.methods["mle-new"].report.awre < r.methods["plm"].report.awre
            for r in ensemble
        )
        assert wins >= 18

    @pytest.mark.parametrize("method", ["plm", "mle-old"])
    def test_biased_methods_tilt(self, ensemble, method):
        """Too few breakdowns below the median breakdown level, too many above"""
        tilted = 0
        for r in ensemble:
            profile = bias_profile(r.empirical, r.methods[method].curve)
            tilted += profile.low < 0 and profile.high > 0
        assert tilted >= 15
