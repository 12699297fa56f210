"""
Validate - compare predicted and empirical cumulative frequencies of breakdowns.

A capacity CDF applied to the observed exposure r_{I_j} predicts b̂_j = r_{I_j}·F_c(I_j)
breakdowns per level; accumulating them gives CF_B, which is compared against the
observed curve with SSE, RMSE, ARE and AWRE.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from stochcap.error_handler import ArgumentError
from stochcap.estimate import fit_mle, plm_estimate, survival_to_cdf
from stochcap.models import (
    CfbCurve,
    ErrorReport,
    LevelCounts,
    LikelihoodKind,
    ObservationSet,
    OptimizerConfig,
    StepCdf,
    StepSurvivalFunction,
    WeibullParams,
)


logger = logging.getLogger(__name__)

CdfLike = Union[WeibullParams, StepCdf, Callable[[np.ndarray], np.ndarray]]


def exposure_histogram(obs: ObservationSet) -> LevelCounts:
    """r_{I_j}: censored and uncensored records per integer level, I_min..I_max."""
    if not len(obs):
        raise ArgumentError("Exposure needs at least one observation")
    return obs.level_counts


def _as_callable(cdf: CdfLike) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(cdf, WeibullParams):
        return cdf.cdf
    return cdf


def predicted_cfb(exposure: LevelCounts, cdf: CdfLike, method: Optional[str] = None) -> CfbCurve:
    """b̂_j = r_{I_j}·F_c(I_j), accumulated over levels."""
    probabilities = np.asarray(_as_callable(cdf)(exposure.levels), dtype=float)
    increments = exposure.exposure * probabilities
    return CfbCurve(
        levels=tuple(int(v) for v in exposure.levels),
        exposure=tuple(int(v) for v in exposure.exposure),
        increments=tuple(float(v) for v in increments),
        cfb=tuple(float(v) for v in np.cumsum(increments)),
        kind="predicted",
        method=method,
    )


def empirical_cfb(obs: ObservationSet) -> CfbCurve:
    """Observed breakdowns per level, accumulated; ends at the total breakdown count."""
    counts = exposure_histogram(obs)
    return CfbCurve(
        levels=tuple(int(v) for v in counts.levels),
        exposure=tuple(int(v) for v in counts.exposure),
        increments=tuple(float(v) for v in counts.breakdowns),
        cfb=tuple(float(v) for v in np.cumsum(counts.breakdowns)),
        kind="empirical",
    )


def error_metrics(empirical: CfbCurve, predicted: CfbCurve) -> ErrorReport:
    """
    SSE and RMSE over all levels; ARE and AWRE (percent) over levels where the
    empirical CF_B is positive, AWRE weighted by the predicted breakdowns per level.
    """
    if empirical.levels != predicted.levels:
        raise ArgumentError("Curves must share the same intensity levels")

    observed = np.asarray(empirical.cfb, dtype=float)
    expected = np.asarray(predicted.cfb, dtype=float)
    n = len(observed)

    sse = float(np.sum((observed - expected) ** 2))
    rmse = math.sqrt(sse / n) if n else 0.0

    included = observed > 0
    relative = np.abs(observed[included] - expected[included]) / observed[included]
    weights = np.asarray(predicted.increments, dtype=float)[included]

    are = float(relative.mean() * 100) if relative.size else 0.0
    if weights.sum() > 0:
        awre = float(np.sum(weights * relative) / weights.sum() * 100)
    else:
        awre = are

    return ErrorReport(
        sse=sse,
        rmse=rmse,
        are=are,
        awre=awre,
        n=n,
        n_relative=int(included.sum()),
        method=predicted.method,
    )


# ============================================
# METHOD COMPARISON
# ============================================

@dataclass
class MethodResult:
    """One estimator's view of the same data"""
    name: str
    curve: CfbCurve
    probabilities: np.ndarray  # breakdown probability per level
    report: ErrorReport
    params: Optional[WeibullParams] = None
    survival: Optional[StepSurvivalFunction] = None


@dataclass
class MethodComparison:
    """Empirical benchmark plus every method's prediction"""
    empirical: CfbCurve
    methods: dict[str, MethodResult] = field(default_factory=dict)

    def table(self) -> list[ErrorReport]:
        return [m.report for m in self.methods.values()]


@dataclass(frozen=True)
class BiasProfile:
    """Predicted minus observed breakdowns below/above the median breakdown level"""
    median_level: float
    low: float
    high: float


def bias_profile(empirical: CfbCurve, predicted: CfbCurve) -> BiasProfile:
    if empirical.levels != predicted.levels:
        raise ArgumentError("Curves must share the same intensity levels")
    levels = np.asarray(empirical.levels)
    observed = np.asarray(empirical.increments)
    if observed.sum() <= 0:
        raise ArgumentError("No breakdowns in the empirical curve")
    median = float(np.median(np.repeat(levels, observed.astype(np.int64))))
    diff = np.asarray(predicted.increments) - observed
    return BiasProfile(
        median_level=median,
        low=float(diff[levels < median].sum()),
        high=float(diff[levels > median].sum()),
    )


def compare_methods(obs: ObservationSet, opt: Optional[OptimizerConfig] = None) -> MethodComparison:
    """Fit PLM, old MLE and new MLE on one data set and score each against the observed CF_B."""
    exposure = exposure_histogram(obs)
    empirical = empirical_cfb(obs)
    comparison = MethodComparison(empirical=empirical)

    def add(name, cdf, **extra):
        curve = predicted_cfb(exposure, cdf, method=name)
        probabilities = np.asarray(_as_callable(cdf)(exposure.levels), dtype=float)
        comparison.methods[name] = MethodResult(
            name=name,
            curve=curve,
            probabilities=probabilities,
            report=error_metrics(empirical, curve),
            **extra,
        )

    survival = plm_estimate(obs)
    add("plm", survival_to_cdf(survival), survival=survival)
    add("plm-hazard", survival.hazard_at, survival=survival)
    for kind in (LikelihoodKind.OLD, LikelihoodKind.NEW):
        params, _ = fit_mle(obs, kind, opt)
        add(f"mle-{kind.value}", params, params=params)

    for result in comparison.methods.values():
        r = result.report
        logger.info(
            f"[VALIDATE] {result.name}: SSE={r.sse:.1f} RMSE={r.rmse:.2f} ARE={r.are:.2f}% AWRE={r.awre:.2f}%"
        )
    return comparison
