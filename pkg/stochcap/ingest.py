"""
Ingest - parse raw event-based detector exports and clean them.

Pipeline stage 1:
1. parse_events: CSV rows -> VehicleRecord (malformed rows counted, never silently dropped)
2. filter_events: drop records flagged invalid by the detector, duplicates, obvious errors
3. pce_of: passenger car equivalent of a single vehicle
"""

from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from stochcap.config import settings
from stochcap.error_handler import ErrorType, InputError, SchemaError
from stochcap.models import FilterConfig, VehicleRecord


logger = logging.getLogger(__name__)


class EventFormat(BaseModel):
    """Column layout of a raw event CSV"""
    model_config = ConfigDict(frozen=True)

    timestamp: str = "timestamp"
    lane: str = "lane"
    speed: str = "speed_kmh"
    length: str = "length_m"
    valid: str = "valid"
    delimiter: str = ","
    encoding: str = "utf-8"

    @property
    def columns(self) -> list[str]:
        return [self.timestamp, self.lane, self.speed, self.length, self.valid]


class ParseResult(BaseModel):
    """Records parsed from one stream"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: list[VehicleRecord]
    malformed: int = 0
    malformed_lines: list[int] = Field(default_factory=list)  # 1-based file lines, header is line 1


class RejectionSummary(BaseModel):
    """Per-reason counts of filter_events"""
    total: int = 0
    kept: int = 0
    invalid: int = 0
    non_positive: int = 0
    implausible_speed: int = 0
    implausible_length: int = 0
    duplicate: int = 0

    @property
    def rejected(self) -> int:
        return self.invalid + self.non_positive + self.implausible_speed + self.implausible_length + self.duplicate


MAX_REPORTED_LINES = 50


def _read_frame(source: Union[BinaryIO, bytes, str, Path], fmt: EventFormat) -> pd.DataFrame:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        return pd.read_csv(
            source,
            sep=fmt.delimiter,
            dtype=str,
            keep_default_na=False,
            encoding=fmt.encoding,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as e:
        raise SchemaError("Event file has no header row") from e
    except UnicodeDecodeError as e:
        raise InputError(f"Event stream is not {fmt.encoding}: {e}", error_type=ErrorType.IO) from e
    except pd.errors.ParserError as e:
        raise InputError(f"Event stream could not be tokenized: {e}") from e


def parse_events(
    source: Union[BinaryIO, bytes, str, Path],
    fmt: Optional[EventFormat] = None,
) -> ParseResult:
    """
    Parse a raw event CSV into VehicleRecords in file order.

    A row is malformed when a field does not parse or is not finite, `valid` is not
    0/1, the lane is not an integer, or a record flagged valid has a non-positive
    speed or length.
    """
    fmt = fmt or EventFormat()
    df = _read_frame(source, fmt)

    header = [c.strip() for c in df.columns]
    df.columns = header
    for column in fmt.columns:
        if column not in header:
            raise SchemaError(f"Missing column '{column}' (header: {', '.join(header)})", column=column)

    ts = pd.to_datetime(df[fmt.timestamp].str.strip(), format="ISO8601", errors="coerce")
    lane = pd.to_numeric(df[fmt.lane], errors="coerce")
    speed = pd.to_numeric(df[fmt.speed], errors="coerce")
    length = pd.to_numeric(df[fmt.length], errors="coerce")
    valid_raw = df[fmt.valid].str.strip()
    valid = valid_raw == "1"

    bad = ts.isna() | lane.isna() | speed.isna() | length.isna()
    bad |= ~valid_raw.isin(["0", "1"])
    bad |= ~np.isfinite(lane) | ~np.isfinite(speed) | ~np.isfinite(length)
    bad |= lane.notna() & (lane != np.floor(lane))
    bad |= valid & ((speed <= 0) | (length <= 0))

    bad_positions = np.flatnonzero(bad.to_numpy())
    malformed_lines = [int(p) + 2 for p in bad_positions[:MAX_REPORTED_LINES]]
    if len(bad_positions):
        logger.warning(f"[INGEST] {len(bad_positions)} malformed rows (first lines: {malformed_lines[:10]})")

    good = ~bad
    records = [
        VehicleRecord(
            timestamp=t.to_pydatetime(),
            lane=int(ln),
            speed=float(v),
            length=float(le),
            valid=bool(ok),
        )
        for t, ln, v, le, ok in zip(ts[good], lane[good], speed[good], length[good], valid[good])
    ]
    logger.info(f"[INGEST] Parsed {len(records)} records, {len(bad_positions)} malformed")
    return ParseResult(records=records, malformed=len(bad_positions), malformed_lines=malformed_lines)


def filter_events(
    records: list[VehicleRecord],
    config: Optional[FilterConfig] = None,
) -> tuple[list[VehicleRecord], RejectionSummary]:
    """
    Remove invalid, erroneous and duplicate records; output sorted by timestamp.

    Each rejected record is counted under exactly one reason, checked in order:
    invalid flag, non-positive speed/length, speed cap, length cap, duplicate.
    """
    config = config or FilterConfig()
    summary = RejectionSummary(total=len(records))
    kept: list[VehicleRecord] = []
    seen: set[tuple] = set()

    for record in sorted(records, key=lambda r: r.timestamp):
        if not record.valid:
            summary.invalid += 1
        elif record.speed <= 0 or record.length <= 0:
            summary.non_positive += 1
        elif record.speed > config.max_speed_kmh:
            summary.implausible_speed += 1
        elif record.length > config.max_length_m:
            summary.implausible_length += 1
        elif record.key in seen:
            summary.duplicate += 1
        else:
            seen.add(record.key)
            kept.append(record)

    summary.kept = len(kept)
    logger.info(
        f"[FILTER] kept {summary.kept}/{summary.total} "
        f"(invalid={summary.invalid}, duplicate={summary.duplicate}, "
        f"implausible={summary.implausible_speed + summary.implausible_length}, "
        f"non_positive={summary.non_positive})"
    )
    return kept, summary


def pce_of(record: VehicleRecord) -> int:
    """Vehicles longer than the heavy-vehicle threshold count as two passenger cars."""
    return 2 if record.length > settings.heavy_vehicle_length_m else 1
