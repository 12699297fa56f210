"""
Classify - turn aggregated traffic into censored/uncensored capacity observations.

Scanning forward through the short (T_a) windows:
1. A window with mean speed below the breakdown speed marks a breakdown.
2. The breakdown onset is the first sub-breakdown minute of that run; the breakdown
   flow is the window ending just before it (one minute earlier when the minute before
   the onset is already below the inconclusive speed).
3. One uncensored observation per event; the free-flow windows before it are censored.
4. Congestion lasts until a recovery-window mean exceeds the recovery speed.
5. Windows whose mean speed lies between the breakdown and inconclusive speeds are
   discarded, as are windows below the minimum intensity or with missing minutes.
6. Free-flow windows after the last event are censored.
7. Censored windows are kept every T_f minutes; breakdown windows always.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Optional

import numpy as np

from stochcap.error_handler import ArgumentError
from stochcap.models import (
    AggregatedInterval,
    ClassifierConfig,
    MinuteInterval,
    Observation,
    ObservationSet,
)


logger = logging.getLogger(__name__)


class Fate(str, Enum):
    """What happened to each short window"""
    CENSORED = "censored"
    BREAKDOWN = "breakdown"
    CONGESTION = "congestion"
    INCONCLUSIVE = "inconclusive"
    LOW_INTENSITY = "low_intensity"
    GAP = "gap"
    OFF_STEP = "off_step"  # censored window between evaluation steps


@dataclass(frozen=True)
class BreakdownEvent:
    """One identified breakdown"""
    onset: datetime
    intensity: Optional[int]  # breakdown flow, None when rejected
    flow_window_start: Optional[datetime]
    shifted: bool
    recovery: Optional[datetime]  # None when data ended or a gap interrupted congestion
    accepted: bool
    reason: Optional[str] = None


@dataclass
class ClassificationReport:
    """Observations plus the trail that produced them"""
    observations: ObservationSet
    events: list[BreakdownEvent] = field(default_factory=list)
    discards: dict[str, int] = field(default_factory=dict)

    @property
    def accepted_events(self) -> list[BreakdownEvent]:
        return [e for e in self.events if e.accepted]


def _check_alignment(minutes, windows, width, label):
    expected = max(len(minutes) - width + 1, 0)
    if len(windows) != expected:
        raise ArgumentError(f"{label} windows: expected {expected} for {len(minutes)} minutes, got {len(windows)}")
    for k, w in enumerate(windows):
        if w.width != width:
            raise ArgumentError(f"{label} window {k} has width {w.width}, expected {width}")
        if w.start != minutes[k].start:
            raise ArgumentError(f"{label} window {k} starts at {w.start}, expected {minutes[k].start}")


class _Scanner:
    """Single forward pass over the window grid"""

    def __init__(self, minutes, short, long, config: ClassifierConfig):
        self.config = config
        self.minutes = minutes
        self.short = short
        self.long = long
        self.ta = config.window_minutes
        self.tf = config.eval_step_minutes
        self.speed = np.array(
            [np.nan if m.harmonic_mean_speed is None else m.harmonic_mean_speed for m in minutes],
            dtype=float,
        )
        self.fate: list[Optional[Fate]] = [None] * len(short)
        self.censored: list[int] = []
        self.uncensored: list[int] = []
        self.events: list[BreakdownEvent] = []

    def _slow(self, m: int, threshold: float) -> bool:
        return not np.isnan(self.speed[m]) and self.speed[m] < threshold

    def _inconclusive(self, window: AggregatedInterval) -> bool:
        return self.config.breakdown_speed <= window.mean_speed < self.config.inconclusive_speed

    def _commit(self, pending: list[int], before: int) -> None:
        for k in pending:
            if k >= before:
                self.fate[k] = Fate.CONGESTION
            elif k % self.tf:
                self.fate[k] = Fate.OFF_STEP
            else:
                self.fate[k] = Fate.CENSORED
                self.censored.append(k)

    def _find_recovery(self, onset: int) -> tuple[Optional[int], bool]:
        """
        Index of the first recovering long window at/after onset, and whether a gap
        stopped the search. A short window with a missing minute counts as a gap.
        """
        for j in range(onset, len(self.long)):
            mean = self.long[j].mean_speed
            if mean is None or (j < len(self.short) and not self.short[j].fully_populated):
                return j, True
            if mean > self.config.recovery_speed:
                return j, False
        return None, False

    def run(self) -> None:
        cfg = self.config
        n_short = len(self.short)
        seg_start = 0
        pending: list[int] = []
        k = 0

        while k < n_short:
            window = self.short[k]
            if not window.fully_populated:
                self.fate[k] = Fate.GAP
                self._commit(pending, before=n_short)
                pending = []
                seg_start = k + 1
                k += 1
                continue

            if window.mean_speed < cfg.breakdown_speed:
                k = self._handle_breakdown(k, seg_start, pending)
                seg_start = k
                pending = []
                continue

            if self._inconclusive(window):
                self.fate[k] = Fate.INCONCLUSIVE
            elif window.pce < cfg.min_intensity:
                self.fate[k] = Fate.LOW_INTENSITY
            else:
                pending.append(k)
            k += 1

        self._commit(pending, before=n_short)

    def _handle_breakdown(self, k: int, seg_start: int, pending: list[int]) -> int:
        """Record the event starting in window k; return the next window index to scan."""
        cfg = self.config
        onset = next(m for m in range(k, k + self.ta) if self._slow(m, cfg.breakdown_speed))
        while onset - 1 >= seg_start and self._slow(onset - 1, cfg.breakdown_speed):
            onset -= 1

        flow = onset - self.ta
        shifted = False
        if cfg.queue_onset_shift and onset >= 1 and self._slow(onset - 1, cfg.inconclusive_speed):
            flow -= 1
            shifted = True

        reason = None
        if flow < seg_start:
            reason = "breakdown-flow window outside the free-flow segment"
        elif self.short[flow].pce < cfg.min_intensity:
            reason = f"breakdown flow {self.short[flow].pce} below minimum intensity"

        self._commit(pending, before=max(flow, 0))
        accepted = reason is None
        if accepted:
            self.fate[flow] = Fate.BREAKDOWN
            self.uncensored.append(flow)

        recovery_idx, gap = self._find_recovery(onset)
        if recovery_idx is None:
            resume = len(self.short)
            recovery = None
        elif gap:
            resume = recovery_idx
            recovery = None
            logger.warning(f"[CLASSIFY] Data gap during congestion from {self.minutes[onset].start}; event abandoned")
        else:
            resume = recovery_idx + cfg.recovery_window
            recovery = self.minutes[recovery_idx].start + timedelta(minutes=cfg.recovery_window)

        resume = max(resume, k + 1)
        for idx in range(max(flow + 1, seg_start), min(resume, len(self.short))):
            if self.fate[idx] is None:
                self.fate[idx] = Fate.CONGESTION

        event = BreakdownEvent(
            onset=self.minutes[onset].start,
            intensity=self.short[flow].pce if accepted else None,
            flow_window_start=self.short[flow].start if accepted else None,
            shifted=shifted,
            recovery=recovery,
            accepted=accepted,
            reason=reason,
        )
        self.events.append(event)
        if accepted:
            logger.debug(f"[CLASSIFY] Breakdown at {event.onset}: flow {event.intensity} PCE (shifted={shifted})")
        else:
            logger.warning(f"[CLASSIFY] Breakdown at {event.onset} rejected: {reason}")
        return resume


def classify_detailed(
    minutes: list[MinuteInterval],
    short_windows: list[AggregatedInterval],
    long_windows: list[AggregatedInterval],
    config: Optional[ClassifierConfig] = None,
) -> ClassificationReport:
    """Run the breakdown identification procedure and keep the event trail."""
    config = config or ClassifierConfig()
    _check_alignment(minutes, short_windows, config.window_minutes, "short")
    _check_alignment(minutes, long_windows, config.recovery_window, "recovery")

    scanner = _Scanner(minutes, short_windows, long_windows, config)
    scanner.run()

    step = timedelta(minutes=config.window_minutes)
    observations = [
        Observation(short_windows[k].pce, False, short_windows[k].start + step) for k in scanner.censored
    ] + [
        Observation(short_windows[k].pce, True, short_windows[k].start + step) for k in scanner.uncensored
    ]
    observations.sort(key=lambda o: o.timestamp)

    obs_set = ObservationSet(
        tuple(observations),
        window_minutes=config.window_minutes,
        eval_step_minutes=config.eval_step_minutes,
    )
    discards = dict(Counter(f.value for f in scanner.fate if f not in (Fate.CENSORED, Fate.BREAKDOWN)))
    report = ClassificationReport(observations=obs_set, events=scanner.events, discards=discards)
    logger.info(
        f"[CLASSIFY] {len(obs_set)} observations, {obs_set.n_breakdowns} breakdowns, "
        f"{len(report.events) - len(report.accepted_events)} rejected events, discarded {discards}"
    )
    return report


def classify(
    minutes: list[MinuteInterval],
    short_windows: list[AggregatedInterval],
    long_windows: list[AggregatedInterval],
    config: Optional[ClassifierConfig] = None,
) -> ObservationSet:
    """Censored/uncensored observations from minutes and their rolling windows."""
    return classify_detailed(minutes, short_windows, long_windows, config).observations
