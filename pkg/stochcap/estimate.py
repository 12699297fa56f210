"""
Estimate - capacity distribution estimators.

- PLM: product-limit (Kaplan-Meier) survival estimate over intensity levels
- MLE "old": breakdown term uses the Weibull density f_c
- MLE "new": breakdown term uses the Weibull CDF F_c

Likelihoods are evaluated on per-level counts (exposure r_j, breakdowns b_j),
which equals the per-observation sum and is independent of record order.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize

from stochcap.config import settings
from stochcap.error_handler import ArgumentError, ErrorType, EstimationError
from stochcap.models import (
    FitDiagnostics,
    LikelihoodKind,
    ObservationSet,
    OptimizerConfig,
    StepCdf,
    StepSurvivalFunction,
    SurvivalStep,
    WeibullParams,
)


logger = logging.getLogger(__name__)


def weibull_cdf(params: WeibullParams, intensity):
    """F_c(I) = 1 - exp(-(I/λ)^γ); scalar in, float out."""
    values = np.asarray(intensity, dtype=float)
    if np.any(values < 0):
        raise ArgumentError(f"Intensity must be >= 0, got {intensity}")
    result = params.cdf(values)
    return float(result) if result.ndim == 0 else result


# ============================================
# PRODUCT-LIMIT METHOD
# ============================================

def plm_estimate(obs: ObservationSet) -> StepSurvivalFunction:
    """
    Product-limit survival function over integer intensity levels.

    n_j counts records with intensity >= I_j; levels without breakdowns are
    grouped into the step of the preceding breakdown level.
    """
    if not len(obs):
        raise ArgumentError("PLM needs at least one observation")

    counts = obs.level_counts
    levels, exposure, breakdowns, at_risk = counts.levels, counts.exposure, counts.breakdowns, counts.at_risk
    starts = list(np.flatnonzero(breakdowns > 0))
    if not starts or starts[0] != 0:
        starts.insert(0, 0)
    bounds = starts + [len(levels)]

    steps = []
    survival = 1.0
    for lo, hi in zip(bounds, bounds[1:]):
        b, n = int(breakdowns[lo]), int(at_risk[lo])
        partial_failure = b / n if n else 0.0
        survival *= 1.0 - partial_failure
        steps.append(
            SurvivalStep(
                level_low=int(levels[lo]),
                level_high=int(levels[hi - 1]),
                breakdowns=b,
                at_risk=n,
                exposure=int(exposure[lo]),
                exposure_interval=int(exposure[lo:hi].sum()),
                partial_failure=partial_failure,
                partial_survival=1.0 - partial_failure,
                survival=max(survival, 0.0),
            )
        )

    logger.info(f"[PLM] {len(steps)} steps over {levels[0]}-{levels[-1]}, Ŝ(I_max)={steps[-1].survival:.5f}")
    return StepSurvivalFunction(steps=tuple(steps), window_minutes=obs.window_minutes)


def survival_to_cdf(s: StepSurvivalFunction) -> StepCdf:
    """F(I_j) = 1 - Ŝ(I_j) at every step."""
    return StepCdf(
        level_low=tuple(step.level_low for step in s.steps),
        level_high=tuple(step.level_high for step in s.steps),
        cdf=tuple(1.0 - step.survival for step in s.steps),
    )


# ============================================
# LIKELIHOOD
# ============================================

def _level_arrays(obs: ObservationSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    counts = obs.level_counts
    present = counts.exposure > 0
    return (
        counts.levels[present].astype(float),
        counts.exposure[present].astype(float),
        counts.breakdowns[present].astype(float),
    )


def _loglik(scale, shape, levels, exposure, breakdowns, kind: LikelihoodKind):
    """Broadcasting log-likelihood: scale/shape may be arrays of matching shape."""
    scale = np.asarray(scale, dtype=float)[..., None]
    shape = np.asarray(shape, dtype=float)[..., None]
    floor = settings.likelihood_floor
    log_floor = math.log(floor)

    ratio = levels / scale
    z = np.power(ratio, shape)
    log_survival = np.maximum(-z, log_floor)
    if kind is LikelihoodKind.NEW:
        log_event = np.log(np.clip(-np.expm1(-z), floor, 1.0))
    else:
        with np.errstate(divide="ignore"):
            log_density = np.log(shape / scale) + (shape - 1.0) * np.log(ratio) - z
        log_event = np.maximum(log_density, log_floor)

    return np.sum(breakdowns * log_event + (exposure - breakdowns) * log_survival, axis=-1)


def log_likelihood(
    params: WeibullParams,
    obs: ObservationSet,
    kind: Union[LikelihoodKind, str] = LikelihoodKind.NEW,
) -> float:
    """
    kind=new: Σ δ ln F_c(I) + (1-δ) ln(1 - F_c(I))
    kind=old: Σ δ ln f_c(I) + (1-δ) ln(1 - F_c(I))
    """
    kind = LikelihoodKind(kind)
    if not len(obs):
        return 0.0
    levels, exposure, breakdowns = _level_arrays(obs)
    return float(_loglik(params.scale, params.shape, levels, exposure, breakdowns, kind))


def log_likelihood_gradient(params: WeibullParams, obs: ObservationSet) -> tuple[float, float]:
    """Closed-form (∂ℓ/∂λ, ∂ℓ/∂γ) of the new likelihood."""
    levels, exposure, breakdowns = _level_arrays(obs)
    lam, gam = params.scale, params.shape
    ratio = levels / lam
    z = np.power(ratio, gam)
    failure = -np.expm1(-z)
    weight = breakdowns * np.exp(-z) / failure - (exposure - breakdowns)
    d_scale = np.sum(weight * (-gam * z / lam))
    d_shape = np.sum(weight * z * np.log(ratio))
    return float(d_scale), float(d_shape)


# ============================================
# MAXIMUM LIKELIHOOD FIT
# ============================================

def _grid_start(levels, exposure, breakdowns, kind, opt: OptimizerConfig) -> tuple[float, float]:
    i_max = levels.max()
    scales = np.linspace(opt.scale_range[0] * i_max, opt.scale_range[1] * i_max, opt.grid_size)
    shapes = np.linspace(opt.shape_range[0], opt.shape_range[1], opt.grid_size)
    grid_scale, grid_shape = np.meshgrid(scales, shapes, indexing="ij")
    values = _loglik(grid_scale, grid_shape, levels, exposure, breakdowns, kind)
    i, j = np.unravel_index(np.nanargmax(values), values.shape)
    return float(grid_scale[i, j]), float(grid_shape[i, j])


def fit_mle(
    obs: ObservationSet,
    kind: Union[LikelihoodKind, str] = LikelihoodKind.NEW,
    opt: Optional[OptimizerConfig] = None,
) -> tuple[WeibullParams, FitDiagnostics]:
    """
    Weibull parameters maximizing the chosen likelihood.

    Nelder-Mead over (ln λ, ln γ), started from the best point of a coarse grid.
    """
    kind = LikelihoodKind(kind)
    opt = opt or OptimizerConfig()

    if obs.n_breakdowns == 0:
        raise EstimationError(
            "degenerate: likelihood maximized at λ→∞ (no uncensored observations)",
            error_type=ErrorType.DEGENERATE_DATA,
        )
    if obs.n_censored == 0:
        raise EstimationError(
            "degenerate: likelihood maximized at λ→0 (no censored observations)",
            error_type=ErrorType.DEGENERATE_DATA,
        )

    levels, exposure, breakdowns = _level_arrays(obs)
    start = _grid_start(levels, exposure, breakdowns, kind, opt)
    logger.debug(f"[FIT] {kind.value} grid start λ={start[0]:.3f} γ={start[1]:.3f}")

    def objective(theta: np.ndarray) -> float:
        scale, shape = np.exp(theta)
        return -float(_loglik(scale, shape, levels, exposure, breakdowns, kind))

    x0 = np.log(start)
    f0 = objective(x0)
    simplex = np.array([x0, x0 + [0.05, 0.0], x0 + [0.0, 0.05]])
    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": opt.simplex_tolerance,
            "fatol": 1e-10 * max(1.0, abs(f0)),
            "maxiter": opt.max_iterations,
            "maxfev": 4 * opt.max_iterations,
            "initial_simplex": simplex,
        },
    )

    scale, shape = (float(v) for v in np.exp(result.x))
    params = WeibullParams(
        scale=scale,
        shape=shape,
        window_minutes=obs.window_minutes,
        eval_step_minutes=obs.eval_step_minutes,
    )
    gradient_norm = None
    if kind is LikelihoodKind.NEW:
        d_scale, d_shape = log_likelihood_gradient(params, obs)
        gradient_norm = float(math.hypot(d_scale * scale, d_shape * shape))

    diagnostics = FitDiagnostics(
        kind=kind,
        loglik=-float(result.fun),
        iterations=int(result.nit),
        evaluations=int(result.nfev),
        converged=bool(result.success),
        start=start,
        gradient_norm=gradient_norm,
        n_obs=len(obs),
        n_breakdowns=obs.n_breakdowns,
    )

    if not result.success:
        raise EstimationError(
            f"Nelder-Mead did not converge after {result.nit} iterations: {result.message}",
            best_params=params,
            diagnostics=diagnostics,
        )

    logger.info(
        f"[FIT] {kind.value} MLE λ={scale:.4f} γ={shape:.4f} ℓ={diagnostics.loglik:.4f} "
        f"({diagnostics.iterations} iterations)"
    )
    return params, diagnostics
