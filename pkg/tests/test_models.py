"""
Tests for the shared domain models
"""

from datetime import datetime

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import weibull_min

from stochcap.error_handler import ArgumentError
from stochcap.models import (
    AggregatedInterval,
    CfbCurve,
    ClassifierConfig,
    MinuteInterval,
    Observation,
    ObservationSet,
    StepSurvivalFunction,
    SurvivalStep,
    WeibullParams,
)


T0 = datetime(2024, 1, 1)


class TestRecords:
    """Frozen record types validate on construction"""

    def test_minute_pce_bounds(self):
        """PCE must lie between vehicle count and twice the count"""
        MinuteInterval(T0, 14, 10, 95.0)
        with pytest.raises(ArgumentError):
            MinuteInterval(T0, 21, 10, 95.0)
        with pytest.raises(ArgumentError):
            MinuteInterval(T0, 9, 10, 95.0)

    def test_minute_speed_iff_vehicles(self):
        """Speed is present exactly when vehicles were counted"""
        MinuteInterval(T0, 0, 0, None)
        with pytest.raises(ArgumentError):
            MinuteInterval(T0, 0, 0, 80.0)
        with pytest.raises(ArgumentError):
            MinuteInterval(T0, 3, 3, None)

    def test_window_width_positive(self):
        with pytest.raises(ArgumentError):
            AggregatedInterval(T0, 0, 10, 80.0, 0)

    def test_observation_intensity_positive(self):
        with pytest.raises(ArgumentError):
            Observation(0, False)

    def test_observation_flags(self):
        obs = Observation(60, True)
        assert obs.delta == 1
        assert not obs.censored


class TestObservationSet:
    """Level reduction used by every estimator"""

    def test_level_counts(self, small_observations):
        """Exposure and breakdowns per integer level, gaps included"""
        counts = small_observations.level_counts
        assert counts.levels.tolist() == [50, 51, 52, 53, 54]
        assert counts.exposure.tolist() == [2, 0, 1, 0, 2]
        assert counts.breakdowns.tolist() == [0, 0, 1, 0, 1]
        assert counts.at_risk.tolist() == [5, 3, 3, 2, 2]

    def test_summary_properties(self, small_observations):
        assert len(small_observations) == 5
        assert small_observations.n_breakdowns == 2
        assert small_observations.n_censored == 3
        assert small_observations.intensity_min == 50
        assert small_observations.intensity_max == 54

    def test_empty_set(self):
        """An empty set has no range and no level counts"""
        empty = ObservationSet(())
        assert empty.intensity_min is None
        with pytest.raises(ArgumentError):
            empty.level_counts

    def test_list_is_frozen_to_tuple(self):
        obs = ObservationSet([Observation(50, False)])
        assert isinstance(obs.observations, tuple)

    def test_provenance_defaults(self, small_observations):
        assert small_observations.window_minutes == 3
        assert small_observations.eval_step_minutes == 1


class TestWeibullParams:
    """Weibull capacity distribution"""

    def test_cdf_matches_scipy(self, params_without_vsl):
        """CDF agrees with an independent implementation"""
        grid = np.linspace(0, 250, 101)
        expected = weibull_min.cdf(grid, c=6.75, scale=146.42)
        np.testing.assert_allclose(params_without_vsl.cdf(grid), expected, rtol=1e-12, atol=1e-15)

    def test_pdf_matches_scipy(self, params_without_vsl):
        grid = np.linspace(1, 250, 50)
        expected = weibull_min.pdf(grid, c=6.75, scale=146.42)
        np.testing.assert_allclose(params_without_vsl.pdf(grid), expected, rtol=1e-10)

    def test_sf_complements_cdf(self, params_without_vsl):
        grid = np.linspace(0, 200, 41)
        np.testing.assert_allclose(params_without_vsl.cdf(grid) + params_without_vsl.sf(grid), 1.0, atol=1e-14)

    def test_cdf_at_scale(self):
        """F(λ) = 1 - 1/e for any shape"""
        params = WeibullParams(scale=100, shape=3.3)
        assert params.cdf(100.0) == pytest.approx(1 - np.exp(-1))

    @pytest.mark.parametrize("scale,shape", [(0, 5), (-1, 5), (100, 0)])
    def test_rejects_non_positive(self, scale, shape):
        with pytest.raises(ValidationError):
            WeibullParams(scale=scale, shape=shape)

    def test_json_round_trip_keeps_provenance(self, params_with_vsl):
        restored = WeibullParams.model_validate_json(params_with_vsl.model_dump_json())
        assert restored == params_with_vsl


class TestValidatedModels:
    """Invariants enforced by pydantic validators"""

    def test_classifier_speed_order(self):
        """breakdown < inconclusive < recovery"""
        with pytest.raises(ValidationError):
            ClassifierConfig(breakdown_speed=60, inconclusive_speed=50)

    def test_classifier_defaults(self):
        cfg = ClassifierConfig()
        assert (cfg.breakdown_speed, cfg.recovery_speed, cfg.recovery_window) == (40, 70, 5)
        assert (cfg.inconclusive_speed, cfg.min_intensity, cfg.window_minutes) == (50, 45, 3)

    def test_cfb_must_not_decrease(self):
        with pytest.raises(ValidationError):
            CfbCurve(levels=(1, 2), exposure=(1, 1), increments=(1, -1), cfb=(1, 0), kind="predicted")

    def test_cfb_columns_equal_length(self):
        with pytest.raises(ValidationError):
            CfbCurve(levels=(1, 2), exposure=(1,), increments=(1, 0), cfb=(1, 1), kind="empirical")

    def test_survival_must_not_increase(self):
        def step(low, survival):
            return SurvivalStep(
                level_low=low,
                level_high=low,
                breakdowns=1,
                at_risk=10,
                exposure=1,
                exposure_interval=1,
                partial_failure=0.1,
                partial_survival=0.9,
                survival=survival,
            )

        with pytest.raises(ValidationError):
            StepSurvivalFunction(steps=(step(50, 0.8), step(51, 0.9)))
