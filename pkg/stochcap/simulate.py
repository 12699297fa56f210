"""
Simulate - synthetic ground truth and Monte Carlo breakdown times.

synth_observations draws per-minute demand and, every evaluation step, a Bernoulli
breakdown with probability F_c(I) of the trailing window intensity, which is exactly
the model the estimators assume. simulate_time_to_breakdown uses the exponential
construction over a piecewise-constant intensity plan instead.

All randomness comes from numpy's Philox generator seeded explicitly per call.
"""

from __future__ import annotations

import logging
import math
from datetime import datetime, timedelta
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stochcap.config import settings
from stochcap.error_handler import ArgumentError
from stochcap.models import Observation, ObservationSet, WeibullParams


logger = logging.getLogger(__name__)

SYNTH_ORIGIN = datetime(2024, 1, 1)

SeedLike = Union[int, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Independent generator per seed; a Generator passes through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


class DemandConfig(BaseModel):
    """
    Mean-reverting demand, stated in PCE per T_a window and run minute by minute.

    rate <- rate + reversion·(mean(m) - rate) + volatility·ε each minute, clipped to
    [lower, upper], where mean(m) optionally oscillates with the given amplitude and
    period. Each minute carries rate / T_a vehicles, rounded on the running total so
    a constant integer rate gives that exact window intensity.
    """
    model_config = ConfigDict(frozen=True)

    mean: float = Field(default=110.0, gt=0)
    reversion: float = Field(default=0.05, ge=0, le=1)
    volatility: float = Field(default=3.0, ge=0)
    lower: float = Field(default=46.0, gt=0)
    upper: float = Field(default=160.0, gt=0)
    amplitude: float = Field(default=0.0, ge=0)
    period_minutes: float = Field(default=1440.0, gt=0)
    initial: Optional[float] = None  # defaults to mean

    @model_validator(mode="after")
    def _mean_within_bounds(self) -> "DemandConfig":
        if self.lower > self.upper:
            raise ValueError(f"demand bounds must satisfy lower <= upper, got [{self.lower}, {self.upper}]")
        if not self.lower <= self.mean <= self.upper:
            raise ValueError(f"demand mean {self.mean} outside bounds [{self.lower}, {self.upper}]")
        return self

    def rates(self, n_minutes: int, rng: np.random.Generator) -> np.ndarray:
        """Demand in PCE per window for each of n_minutes minutes."""
        shocks = rng.standard_normal(n_minutes)
        minutes = np.arange(n_minutes)
        target = self.mean + self.amplitude * np.sin(2 * np.pi * minutes / self.period_minutes)

        x = float(self.mean if self.initial is None else np.clip(self.initial, self.lower, self.upper))
        rates = np.empty(n_minutes)
        for m in range(n_minutes):
            rates[m] = x
            x += self.reversion * (target[m] - x) + self.volatility * shocks[m]
            x = min(max(x, self.lower), self.upper)
        return rates

    def minute_counts(self, n_minutes: int, window: int, rng: np.random.Generator) -> np.ndarray:
        """Non-negative integer PCE per minute."""
        running = np.rint(np.cumsum(self.rates(n_minutes, rng) / window))
        return np.diff(running, prepend=0.0).astype(np.int64)


def synth_observations(
    true_params: WeibullParams,
    demand: DemandConfig,
    duration_minutes: int,
    seed: SeedLike,
    eval_step: Optional[int] = None,
    congestion_minutes: Optional[int] = None,
    min_intensity: int = 0,
    origin: datetime = SYNTH_ORIGIN,
) -> tuple[ObservationSet, list[dict]]:
    """
    Synthetic ObservationSet with known truth, plus one event-log entry per breakdown.

    Intensities are trailing T_a sums of the per-minute demand, evaluated every T_f
    minutes; with T_f < T_a consecutive windows share T_a - T_f minutes. Steps inside
    the congestion span after a breakdown and windows below min_intensity (or empty)
    produce no observation.
    """
    window = true_params.window_minutes or 3
    step = eval_step or true_params.eval_step_minutes or 1
    if duration_minutes < window:
        raise ArgumentError(f"Duration {duration_minutes} min shorter than the {window}-min window")
    congestion = settings.congestion_skip_minutes if congestion_minutes is None else congestion_minutes
    if congestion < 0:
        raise ArgumentError(f"Congestion duration must be >= 0, got {congestion}")

    rng = make_rng(seed)
    counts = demand.minute_counts(duration_minutes, window, rng)
    intensities = sliding_window_view(counts, window).sum(axis=1)[::step]
    n_steps = len(intensities)
    probabilities = true_params.cdf(intensities)
    draws = rng.random(n_steps)
    skip_steps = math.ceil(congestion / step)
    floor = max(min_intensity, 1)

    observations: list[Observation] = []
    events: list[dict] = []
    resume = 0
    for t in range(n_steps):
        if t < resume or intensities[t] < floor:
            continue
        minute = window + t * step
        intensity = int(intensities[t])
        breakdown = bool(draws[t] < probabilities[t])
        observations.append(Observation(intensity, breakdown, origin + timedelta(minutes=minute)))
        if breakdown:
            events.append({"minute": minute, "intensity": intensity, "probability": float(probabilities[t])})
            resume = t + 1 + skip_steps

    obs = ObservationSet(tuple(observations), window_minutes=window, eval_step_minutes=step)
    logger.info(
        f"[SYNTH] {len(obs)} observations, {obs.n_breakdowns} breakdowns over {duration_minutes} min "
        f"(truth λ={true_params.scale:.2f} γ={true_params.shape:.2f})"
    )
    return obs, events


# ============================================
# TIME TO BREAKDOWN
# ============================================

def _check_plan(plan: Sequence[tuple[float, float]]) -> None:
    if not plan:
        raise ArgumentError("Intensity plan is empty")
    for intensity, duration in plan:
        if intensity < 0:
            raise ArgumentError(f"Plan intensity must be >= 0, got {intensity}")
        if not duration > 0:
            raise ArgumentError(f"Plan duration must be > 0, got {duration}")


def _draw(plan, probabilities, step: int, rng: np.random.Generator) -> Optional[float]:
    elapsed = 0.0
    for (_, duration), probability in zip(plan, probabilities):
        if probability > 0:
            t = rng.exponential(step / probability)
            if t < duration:
                return elapsed + t
        elapsed += duration
    return None


def simulate_time_to_breakdown(
    plan: Sequence[tuple[float, float]],
    params: WeibullParams,
    eval_step: Optional[int] = None,
    seed: SeedLike = 0,
) -> Optional[float]:
    """
    Minutes until breakdown over a piecewise-constant plan, or None if every segment survives.

    A fresh exponential time with rate F_c(I)/T_f is drawn at the start of each segment.
    """
    _check_plan(plan)
    step = eval_step or params.eval_step_minutes or 1
    probabilities = params.cdf([intensity for intensity, _ in plan])
    return _draw(plan, np.atleast_1d(probabilities), step, make_rng(seed))


def sample_breakdown_times(
    plan: Sequence[tuple[float, float]],
    params: WeibullParams,
    n: int,
    seed: SeedLike = 0,
    eval_step: Optional[int] = None,
) -> np.ndarray:
    """n breakdown times from one seeded stream; NaN marks a survived plan."""
    if n < 1:
        raise ArgumentError(f"Sample count must be >= 1, got {n}")
    _check_plan(plan)
    step = eval_step or params.eval_step_minutes or 1
    probabilities = np.atleast_1d(params.cdf([intensity for intensity, _ in plan]))
    rng = make_rng(seed)

    samples = np.empty(n)
    for i in range(n):
        t = _draw(plan, probabilities, step, rng)
        samples[i] = np.nan if t is None else t

    survived = int(np.isnan(samples).sum())
    logger.info(f"[SIMULATE] {n} samples over {len(plan)} segments, {survived} survived")
    return samples
