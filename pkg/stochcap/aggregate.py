"""
Aggregate - one-minute intervals and overlapping rolling windows.

Minute speed is the harmonic mean of vehicle speeds (space mean speed);
window speed is the arithmetic mean of the member minutes' harmonic means
(space-time mean speed), skipping minutes without vehicles.
"""

from __future__ import annotations

import logging
from datetime import timedelta

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from stochcap.error_handler import ArgumentError
from stochcap.ingest import pce_of
from stochcap.models import AggregatedInterval, MinuteInterval, VehicleRecord


logger = logging.getLogger(__name__)

ONE_MINUTE = timedelta(minutes=1)


def aggregate_minutes(records: list[VehicleRecord]) -> list[MinuteInterval]:
    """One MinuteInterval per calendar minute from the first to the last record."""
    if not records:
        return []

    df = pd.DataFrame(
        {
            "minute": pd.to_datetime([r.timestamp for r in records]).floor("min"),
            "pce": [pce_of(r) for r in records],
            "inverse_speed": [1.0 / r.speed for r in records],
        }
    )
    grouped = df.groupby("minute").agg(
        pce=("pce", "sum"),
        vehicle_count=("pce", "size"),
        inverse_speed=("inverse_speed", "sum"),
    )
    full_range = pd.date_range(grouped.index.min(), grouped.index.max(), freq="min")
    grouped = grouped.reindex(full_range, fill_value=0)

    minutes = []
    for start, pce, count, inverse_speed in zip(
        grouped.index, grouped["pce"], grouped["vehicle_count"], grouped["inverse_speed"]
    ):
        speed = float(count / inverse_speed) if count > 0 else None
        minutes.append(
            MinuteInterval(
                start=start.to_pydatetime(),
                pce=int(pce),
                vehicle_count=int(count),
                harmonic_mean_speed=speed,
            )
        )

    logger.info(f"[AGGREGATE] {len(records)} records -> {len(minutes)} minutes")
    return minutes


def check_contiguous(minutes: list[MinuteInterval]) -> None:
    """Raise ArgumentError unless minutes are ordered with a one-minute step."""
    for prev, cur in zip(minutes, minutes[1:]):
        if cur.start - prev.start != ONE_MINUTE:
            raise ArgumentError(f"Minutes not contiguous between {prev.start} and {cur.start}")


def rolling_intervals(minutes: list[MinuteInterval], width_minutes: int) -> list[AggregatedInterval]:
    """
    Overlapping windows [m, m + width) for every start minute m, step one minute.

    Windows running past the last minute are not emitted.
    """
    if width_minutes < 1:
        raise ArgumentError(f"Window width must be >= 1, got {width_minutes}")
    check_contiguous(minutes)
    if len(minutes) < width_minutes:
        return []

    pce = np.array([m.pce for m in minutes], dtype=np.int64)
    speed = np.array(
        [np.nan if m.harmonic_mean_speed is None else m.harmonic_mean_speed for m in minutes],
        dtype=float,
    )

    pce_windows = sliding_window_view(pce, width_minutes).sum(axis=1)
    speed_windows = sliding_window_view(speed, width_minutes)
    populated = np.count_nonzero(~np.isnan(speed_windows), axis=1)
    speed_sums = np.nansum(speed_windows, axis=1)

    windows = []
    for k in range(len(pce_windows)):
        mean_speed = float(speed_sums[k] / populated[k]) if populated[k] else None
        windows.append(
            AggregatedInterval(
                start=minutes[k].start,
                width=width_minutes,
                pce=int(pce_windows[k]),
                mean_speed=mean_speed,
                populated=int(populated[k]),
            )
        )
    return windows
