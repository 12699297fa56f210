"""
Transform - practical uses of a fitted capacity distribution.

- Breakdown/survival probability over a horizon of T minutes at constant intensity
- Mean and median time to breakdown
- Intensity at a given breakdown probability (inverse CDF)
- Two-scenario comparison (e.g. without vs with speed harmonisation)

Each evaluation step T_f is an independent Bernoulli trial with probability F_c(I),
so a horizon T holds T/T_f trials.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from stochcap.config import settings
from stochcap.error_handler import ArgumentError, ProvenanceError
from stochcap.models import CfbCurve, WeibullParams


logger = logging.getLogger(__name__)

DEFAULT_WINDOW_MINUTES = 3
DEFAULT_EVAL_STEP_MINUTES = 1


def _scalar_or_array(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def _trials(horizon: float, params: WeibullParams, eval_step: Optional[int], window: Optional[int]) -> float:
    """Number of evaluation steps in the horizon, after the provenance checks."""
    if window is not None and params.window_minutes is not None and window != params.window_minutes:
        raise ProvenanceError(
            f"Intensity aggregated over {window} min but params fitted with T_a={params.window_minutes} min"
        )
    step = eval_step or params.eval_step_minutes or DEFAULT_EVAL_STEP_MINUTES
    if step <= 0:
        raise ArgumentError(f"Evaluation step must be > 0, got {step}")
    if horizon <= 0:
        raise ArgumentError(f"Horizon must be > 0 minutes, got {horizon}")
    trials = horizon / step
    if not math.isclose(trials, round(trials), rel_tol=0, abs_tol=1e-9):
        raise ArgumentError(f"Horizon {horizon} min is not a multiple of the evaluation step {step} min")
    return float(round(trials))


def _hazard(intensity, params: WeibullParams) -> np.ndarray:
    values = np.asarray(intensity, dtype=float)
    if np.any(values < 0):
        raise ArgumentError(f"Intensity must be >= 0, got {intensity}")
    return params.cumulative_hazard(values)


def breakdown_prob_over(
    intensity,
    horizon: float,
    params: WeibullParams,
    eval_step: Optional[int] = None,
    window: Optional[int] = None,
):
    """
    P_B,T(I) = 1 - exp(-(T/T_f)·(I/λ)^γ)

    eval_step defaults to the params' T_f; passing the aggregation length of
    non-overlapping intervals gives the non-overlapping form. window, when given,
    must match the T_a the params were fitted with.
    """
    trials = _trials(horizon, params, eval_step, window)
    return _scalar_or_array(-np.expm1(-trials * _hazard(intensity, params)))


def survival_prob_over(
    intensity,
    horizon: float,
    params: WeibullParams,
    eval_step: Optional[int] = None,
    window: Optional[int] = None,
):
    """P_S,T(I) = [1 - F_c(I)]^(T/T_f)"""
    trials = _trials(horizon, params, eval_step, window)
    return _scalar_or_array(np.exp(-trials * _hazard(intensity, params)))


class TimeToBreakdown(BaseModel):
    """Expected and median free-flow duration at constant intensity, minutes"""
    model_config = ConfigDict(frozen=True)

    intensity: float
    probability: float
    mean: float
    median: float


def time_to_breakdown_stats(
    intensity: float,
    params: WeibullParams,
    eval_step: Optional[int] = None,
) -> TimeToBreakdown:
    """Mean T_f/F_c(I) and median T_f·ln2/F_c(I) of the time to breakdown."""
    step = eval_step or params.eval_step_minutes or DEFAULT_EVAL_STEP_MINUTES
    probability = float(-np.expm1(-_hazard(intensity, params)))
    if probability <= 0:
        raise ArgumentError(f"F_c({intensity}) = 0: no finite expected time to breakdown")
    return TimeToBreakdown(
        intensity=float(intensity),
        probability=probability,
        mean=step / probability,
        median=step * math.log(2) / probability,
    )


def capacity_at_probability(params: WeibullParams, p):
    """Intensity with breakdown probability p: λ·(-ln(1-p))^(1/γ)."""
    values = np.asarray(p, dtype=float)
    if np.any((values <= 0) | (values >= 1)) or np.any(np.isnan(values)):
        raise ArgumentError(f"Probability must lie in (0, 1), got {p}")
    return _scalar_or_array(params.scale * np.power(-np.log1p(-values), 1.0 / params.shape))


def median_capacity(params: WeibullParams) -> float:
    """λ·(ln 2)^(1/γ)"""
    return params.scale * math.log(2) ** (1.0 / params.shape)


# ============================================
# SCENARIO COMPARISON
# ============================================

class ScenarioRow(BaseModel):
    """Capacity shift at one breakdown probability"""
    model_config = ConfigDict(frozen=True)

    probability: float
    intensity_a: float
    intensity_b: float
    absolute_increase: float
    relative_increase_pct: float


class ScenarioComparison(BaseModel):
    """Capacity table of two scenarios, a = reference, b = measure"""
    model_config = ConfigDict(frozen=True)

    rows: tuple[ScenarioRow, ...]
    median_a: float
    median_b: float
    average_relative_increase_pct: float
    average_absolute_increase: float
    average_absolute_increase_per_hour: float


def _check_same_window(params_a: WeibullParams, params_b: WeibullParams) -> None:
    if (
        params_a.window_minutes is not None
        and params_b.window_minutes is not None
        and params_a.window_minutes != params_b.window_minutes
    ):
        raise ProvenanceError(
            f"Scenarios fitted with different T_a ({params_a.window_minutes} vs {params_b.window_minutes} min)"
        )


def compare_scenarios(
    params_a: WeibullParams,
    params_b: WeibullParams,
    levels: Optional[Sequence[float]] = None,
) -> ScenarioComparison:
    """
    Intensities of both scenarios at each probability level, with absolute and
    relative increase of b over a, computed from unrounded intensities.
    """
    levels = tuple(settings.default_probability_levels if levels is None else levels)
    if not levels:
        raise ArgumentError("At least one probability level is required")
    _check_same_window(params_a, params_b)

    intensity_a = np.atleast_1d(capacity_at_probability(params_a, levels))
    intensity_b = np.atleast_1d(capacity_at_probability(params_b, levels))
    absolute = intensity_b - intensity_a
    relative = absolute / intensity_a * 100

    rows = tuple(
        ScenarioRow(
            probability=float(p),
            intensity_a=float(a),
            intensity_b=float(b),
            absolute_increase=float(d),
            relative_increase_pct=float(r),
        )
        for p, a, b, d, r in zip(levels, intensity_a, intensity_b, absolute, relative)
    )
    window = params_a.window_minutes or params_b.window_minutes or DEFAULT_WINDOW_MINUTES
    comparison = ScenarioComparison(
        rows=rows,
        median_a=median_capacity(params_a),
        median_b=median_capacity(params_b),
        average_relative_increase_pct=float(relative.mean()),
        average_absolute_increase=float(absolute.mean()),
        average_absolute_increase_per_hour=float(absolute.mean() * 60 / window),
    )
    logger.info(
        f"[TRANSFORM] Median {comparison.median_a:.1f} -> {comparison.median_b:.1f}, "
        f"average increase {comparison.average_relative_increase_pct:.2f}%"
    )
    return comparison


class ProbabilityReduction(BaseModel):
    """Breakdown probability of both scenarios over a range of intensities"""
    model_config = ConfigDict(frozen=True)

    intensities: tuple[float, ...]
    probability_a: tuple[float, ...]
    probability_b: tuple[float, ...]
    relative_reduction: tuple[float, ...]  # (F_a - F_b) / F_a, NaN where F_a = 0


def probability_reduction_curve(
    params_a: WeibullParams,
    params_b: WeibullParams,
    intensities: Sequence[float],
) -> ProbabilityReduction:
    _check_same_window(params_a, params_b)
    values = np.asarray(intensities, dtype=float)
    if np.any(values < 0):
        raise ArgumentError("Intensities must be >= 0")
    fa = params_a.cdf(values)
    fb = params_b.cdf(values)
    with np.errstate(divide="ignore", invalid="ignore"):
        reduction = np.where(fa > 0, (fa - fb) / fa, np.nan)
    return ProbabilityReduction(
        intensities=tuple(values.tolist()),
        probability_a=tuple(fa.tolist()),
        probability_b=tuple(fb.tolist()),
        relative_reduction=tuple(reduction.tolist()),
    )


def cfb_reduction_curve(curve_a: CfbCurve, curve_b: CfbCurve) -> tuple[np.ndarray, np.ndarray]:
    """Relative decrease (CF_a - CF_b)/CF_a of predicted breakdowns per shared level."""
    if curve_a.levels != curve_b.levels:
        raise ArgumentError("Curves must share the same intensity levels")
    a = np.asarray(curve_a.cfb, dtype=float)
    b = np.asarray(curve_b.cfb, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        reduction = np.where(a > 0, (a - b) / a, np.nan)
    return np.asarray(curve_a.levels), reduction
