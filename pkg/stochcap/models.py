"""
Domain models shared by every stage of the capacity pipeline.

Bulk records (vehicles, minutes, windows, observations) are frozen dataclasses;
parameter sets, configs and reports are pydantic models so they validate on
construction and serialize to JSON.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from functools import cached_property
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stochcap.config import settings
from stochcap.error_handler import ArgumentError


class LikelihoodKind(str, Enum):
    """Likelihood formulations for the parametric estimator"""
    NEW = "new"  # breakdown term uses the CDF
    OLD = "old"  # breakdown term uses the density


# ============================================
# DETECTOR DATA
# ============================================

@dataclass(frozen=True, slots=True)
class VehicleRecord:
    """One detector event"""
    timestamp: datetime
    lane: int
    speed: float  # km/h
    length: float  # m
    valid: bool = True

    @property
    def key(self) -> tuple:
        return (self.timestamp, self.lane, self.speed, self.length)


@dataclass(frozen=True, slots=True)
class MinuteInterval:
    """One calendar minute of aggregated traffic"""
    start: datetime
    pce: int
    vehicle_count: int
    harmonic_mean_speed: Optional[float] = None

    def __post_init__(self):
        if self.vehicle_count < 0 or self.pce < self.vehicle_count or self.pce > 2 * self.vehicle_count:
            raise ArgumentError(
                f"Minute {self.start}: pce={self.pce} inconsistent with vehicle_count={self.vehicle_count}"
            )
        if (self.harmonic_mean_speed is None) != (self.vehicle_count == 0):
            raise ArgumentError(f"Minute {self.start}: speed must be absent iff no vehicles")


@dataclass(frozen=True, slots=True)
class AggregatedInterval:
    """A rolling multi-minute window labelled by its first minute"""
    start: datetime
    width: int
    pce: int
    mean_speed: Optional[float]
    populated: int  # member minutes with a speed

    def __post_init__(self):
        if self.width < 1:
            raise ArgumentError(f"Window width must be >= 1, got {self.width}")

    @property
    def fully_populated(self) -> bool:
        return self.populated == self.width


# ============================================
# OBSERVATIONS
# ============================================

@dataclass(frozen=True, slots=True)
class Observation:
    """A single intensity record: breakdown (uncensored) or survived (censored)"""
    intensity: int  # PCE per aggregation window
    breakdown: bool  # indicator δ_i
    timestamp: Optional[datetime] = None

    def __post_init__(self):
        if self.intensity <= 0:
            raise ArgumentError(f"Observation intensity must be > 0, got {self.intensity}")

    @property
    def censored(self) -> bool:
        return not self.breakdown

    @property
    def delta(self) -> int:
        return int(self.breakdown)


@dataclass(frozen=True)
class LevelCounts:
    """Observations reduced to integer intensity levels I_min..I_max"""
    levels: np.ndarray
    exposure: np.ndarray  # r_{I_j}: all records at the level
    breakdowns: np.ndarray  # b_j: uncensored records at the level

    @property
    def at_risk(self) -> np.ndarray:
        """n_j: records with intensity >= I_j"""
        return np.cumsum(self.exposure[::-1])[::-1]


@dataclass(frozen=True)
class ObservationSet:
    """Censored/uncensored intensity records feeding every estimator"""
    observations: tuple[Observation, ...]
    window_minutes: int = 3  # T_a
    eval_step_minutes: int = 1  # T_f

    def __post_init__(self):
        if self.window_minutes < 1 or self.eval_step_minutes < 1:
            raise ArgumentError("window_minutes and eval_step_minutes must be >= 1")
        if not isinstance(self.observations, tuple):
            object.__setattr__(self, "observations", tuple(self.observations))

    @classmethod
    def from_pairs(
        cls,
        pairs: Sequence[tuple[int, bool]],
        window_minutes: int = 3,
        eval_step_minutes: int = 1,
    ) -> "ObservationSet":
        """Build from (intensity, breakdown) pairs, without timestamps."""
        return cls(
            tuple(Observation(int(i), bool(b)) for i, b in pairs),
            window_minutes=window_minutes,
            eval_step_minutes=eval_step_minutes,
        )

    def __len__(self) -> int:
        return len(self.observations)

    @cached_property
    def intensities(self) -> np.ndarray:
        return np.fromiter((o.intensity for o in self.observations), dtype=np.int64, count=len(self))

    @cached_property
    def deltas(self) -> np.ndarray:
        return np.fromiter((o.breakdown for o in self.observations), dtype=np.int64, count=len(self))

    @property
    def n_breakdowns(self) -> int:
        return int(self.deltas.sum())

    @property
    def n_censored(self) -> int:
        return len(self) - self.n_breakdowns

    @property
    def intensity_min(self) -> Optional[int]:
        return int(self.intensities.min()) if len(self) else None

    @property
    def intensity_max(self) -> Optional[int]:
        return int(self.intensities.max()) if len(self) else None

    @cached_property
    def level_counts(self) -> LevelCounts:
        if not len(self):
            raise ArgumentError("ObservationSet is empty")
        lo, hi = self.intensity_min, self.intensity_max
        offsets = self.intensities - lo
        exposure = np.bincount(offsets, minlength=hi - lo + 1)
        breakdowns = np.bincount(offsets, weights=self.deltas, minlength=hi - lo + 1).astype(np.int64)
        return LevelCounts(levels=np.arange(lo, hi + 1), exposure=exposure, breakdowns=breakdowns)


# ============================================
# CAPACITY DISTRIBUTION
# ============================================

class WeibullParams(BaseModel):
    """Weibull capacity distribution W(λ, γ) with fitting provenance"""
    model_config = ConfigDict(frozen=True)

    scale: float = Field(..., gt=0, description="λ, PCE per aggregation window")
    shape: float = Field(..., gt=0, description="γ, dimensionless")
    window_minutes: Optional[int] = Field(default=None, ge=1, description="T_a the params were fitted with")
    eval_step_minutes: Optional[int] = Field(default=None, ge=1, description="T_f the params were fitted with")

    def cumulative_hazard(self, intensity) -> np.ndarray:
        """(I/λ)^γ"""
        return np.power(np.asarray(intensity, dtype=float) / self.scale, self.shape)

    def cdf(self, intensity) -> np.ndarray:
        """F_c(I) = 1 - exp(-(I/λ)^γ)"""
        return -np.expm1(-self.cumulative_hazard(intensity))

    def sf(self, intensity) -> np.ndarray:
        """1 - F_c(I)"""
        return np.exp(-self.cumulative_hazard(intensity))

    def pdf(self, intensity) -> np.ndarray:
        """f_c(I) = (γ/λ)(I/λ)^(γ-1) exp(-(I/λ)^γ)"""
        x = np.asarray(intensity, dtype=float) / self.scale
        return (self.shape / self.scale) * np.power(x, self.shape - 1.0) * np.exp(-np.power(x, self.shape))


class SurvivalStep(BaseModel):
    """One row of the product-limit calculation table"""
    model_config = ConfigDict(frozen=True)

    level_low: int
    level_high: int
    breakdowns: int = Field(..., ge=0)  # b_j
    at_risk: int = Field(..., ge=0)  # n_j
    exposure: int = Field(..., ge=0)  # r_{I_j} at level_low
    exposure_interval: int = Field(..., ge=0)  # r over [level_low, level_high]
    partial_failure: float = Field(..., ge=0, le=1)
    partial_survival: float = Field(..., ge=0, le=1)
    survival: float = Field(..., ge=0, le=1)


class StepSurvivalFunction(BaseModel):
    """Product-limit survival estimate Ŝ(I) as grouped intensity steps"""
    model_config = ConfigDict(frozen=True)

    steps: tuple[SurvivalStep, ...]
    window_minutes: Optional[int] = None

    @field_validator("steps")
    @classmethod
    def _non_increasing(cls, steps: tuple[SurvivalStep, ...]) -> tuple[SurvivalStep, ...]:
        for prev, cur in zip(steps, steps[1:]):
            if cur.survival > prev.survival + 1e-12:
                raise ValueError("survival values must be non-increasing")
            if cur.level_low <= prev.level_high:
                raise ValueError("steps must be ordered and non-overlapping")
        return steps

    def _step_index(self, levels) -> np.ndarray:
        lows = np.array([s.level_low for s in self.steps])
        return np.searchsorted(lows, np.asarray(levels), side="right") - 1

    def survival_at(self, levels) -> np.ndarray:
        """Ŝ evaluated at arbitrary levels (1 below the first step)."""
        idx = self._step_index(levels)
        values = np.array([s.survival for s in self.steps])
        return np.where(idx >= 0, values[np.clip(idx, 0, None)], 1.0)

    def hazard_at(self, levels) -> np.ndarray:
        """Partial failure probability b_j/n_j at breakdown levels, 0 elsewhere."""
        levels = np.asarray(levels)
        out = np.zeros(levels.shape, dtype=float)
        for step in self.steps:
            if step.breakdowns:
                out[levels == step.level_low] = step.partial_failure
        return out


class StepCdf(BaseModel):
    """Stepwise CDF F(I_j) = 1 - Ŝ(I_j)"""
    model_config = ConfigDict(frozen=True)

    level_low: tuple[int, ...]
    level_high: tuple[int, ...]
    cdf: tuple[float, ...]

    def __call__(self, levels) -> np.ndarray:
        lows = np.asarray(self.level_low)
        idx = np.searchsorted(lows, np.asarray(levels), side="right") - 1
        values = np.asarray(self.cdf, dtype=float)
        return np.where(idx >= 0, values[np.clip(idx, 0, None)], 0.0)


# ============================================
# VALIDATION
# ============================================

class CfbCurve(BaseModel):
    """Cumulative frequency of breakdowns per intensity level"""
    model_config = ConfigDict(frozen=True)

    levels: tuple[int, ...]
    exposure: tuple[int, ...]  # r_{I_j}
    increments: tuple[float, ...]  # b_j (observed) or b̂_j (expected)
    cfb: tuple[float, ...]
    kind: Literal["empirical", "predicted"]
    method: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "CfbCurve":
        n = len(self.levels)
        if not (len(self.exposure) == len(self.increments) == len(self.cfb) == n):
            raise ValueError("curve columns must have equal length")
        if any(b < a - 1e-9 for a, b in zip(self.cfb, self.cfb[1:])):
            raise ValueError("CF_B must be non-decreasing")
        return self

    @property
    def total(self) -> float:
        return self.cfb[-1] if self.cfb else 0.0


class ErrorReport(BaseModel):
    """Goodness of fit of a predicted CF_B curve against the empirical one"""
    sse: float = Field(..., ge=0)
    rmse: float = Field(..., ge=0)
    are: float = Field(..., ge=0, description="average relative error, percent")
    awre: float = Field(..., ge=0, description="average weighted relative error, percent")
    n: int = Field(..., ge=0, description="intensity levels compared")
    n_relative: int = Field(default=0, ge=0, description="levels entering the relative errors")
    method: Optional[str] = None


# ============================================
# OPERATION CONFIGS
# ============================================

class ClassifierConfig(BaseModel):
    """Thresholds of the breakdown identification procedure"""
    model_config = ConfigDict(frozen=True)

    breakdown_speed: float = Field(default=40.0, gt=0)
    recovery_speed: float = Field(default=70.0, gt=0)
    recovery_window: int = Field(default=5, ge=1)
    inconclusive_speed: float = Field(default=50.0, gt=0)
    min_intensity: int = Field(default=45, gt=0)
    window_minutes: int = Field(default=3, ge=1)
    eval_step_minutes: int = Field(default=1, ge=1)
    queue_onset_shift: bool = True

    @model_validator(mode="after")
    def _ordered_speeds(self) -> "ClassifierConfig":
        if not self.breakdown_speed < self.inconclusive_speed < self.recovery_speed:
            raise ValueError("require breakdown_speed < inconclusive_speed < recovery_speed")
        return self


class FilterConfig(BaseModel):
    """Plausibility caps for detector records"""
    model_config = ConfigDict(frozen=True)

    max_speed_kmh: float = Field(default_factory=lambda: settings.max_speed_kmh, gt=0)
    max_length_m: float = Field(default_factory=lambda: settings.max_length_m, gt=0)


class OptimizerConfig(BaseModel):
    """Nelder-Mead settings for the likelihood maximizer"""
    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(default_factory=lambda: settings.optimizer_max_iterations, ge=1)
    simplex_tolerance: float = Field(default_factory=lambda: settings.optimizer_simplex_tolerance, gt=0)
    grid_size: int = Field(default_factory=lambda: settings.optimizer_grid_size, ge=2)
    scale_range: tuple[float, float] = (1.0, 3.0)  # multiples of I_max
    shape_range: tuple[float, float] = (1.0, 20.0)


class FitDiagnostics(BaseModel):
    """Outcome of one likelihood maximization"""
    kind: LikelihoodKind
    loglik: float
    iterations: int
    evaluations: int
    converged: bool
    start: tuple[float, float]
    gradient_norm: Optional[float] = None
    n_obs: int
    n_breakdowns: int
