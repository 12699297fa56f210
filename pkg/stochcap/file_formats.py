"""
File formats - CSV/JSON readers and writers used by the command line.

Readers validate the header before touching any row and raise SchemaError on a
mismatch. Writers go through atomic_write, so a failing command never leaves a
partial output file behind.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional, Sequence, TextIO, Union

import numpy as np
import pandas as pd

from stochcap.config import settings
from stochcap.error_handler import InputError, SchemaError
from stochcap.estimate import survival_to_cdf
from stochcap.models import (
    CfbCurve,
    ErrorReport,
    FitDiagnostics,
    LikelihoodKind,
    MinuteInterval,
    Observation,
    ObservationSet,
    StepSurvivalFunction,
    SurvivalStep,
    WeibullParams,
)
from stochcap.transform import ScenarioComparison


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MINUTE_COLUMNS = ["start", "pce", "vehicle_count", "harmonic_mean_speed"]
OBSERVATION_COLUMNS = ["timestamp", "intensity_pce_window", "breakdown"]
STEP_COLUMNS = [
    "level_low",
    "level_high",
    "breakdowns",
    "at_risk",
    "exposure",
    "exposure_interval",
    "partial_failure",
    "partial_survival",
    "survival",
    "cdf",
]
CFB_COLUMNS = ["intensity", "exposure", "cfb_empirical", "cfb_predicted"]
PLAN_COLUMNS = ["intensity", "duration_minutes"]
SAMPLE_COLUMNS = ["sample", "breakdown_minute", "survived"]


def float_format() -> str:
    return f"%.{settings.significant_digits}g"


def format_number(value: float) -> str:
    """Significant-digit rendering used for every human-facing number."""
    return f"{value:.{settings.significant_digits}g}"


@contextmanager
def atomic_write(path: PathLike) -> Iterator[TextIO]:
    """Write to a sibling temp file and move it over path only on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _write_frame(path: PathLike, df: pd.DataFrame) -> None:
    with atomic_write(path) as handle:
        df.to_csv(handle, index=False, float_format=float_format(), na_rep="")
    logger.debug(f"[FILES] Wrote {len(df)} rows to {path}")


def write_json(path: PathLike, data: Any) -> None:
    with atomic_write(path) as handle:
        json.dump(data, handle, indent=2, default=str)
        handle.write("\n")


def _read_frame(path: PathLike, columns: Sequence[str], label: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise SchemaError(f"{label} file {path} is empty") from e
    except pd.errors.ParserError as e:
        raise InputError(f"{label} file {path} could not be tokenized: {e}") from e
    df.columns = [c.strip() for c in df.columns]
    for column in columns:
        if column not in df.columns:
            raise SchemaError(
                f"{label} file {path}: missing column '{column}' (expected {','.join(columns)})",
                column=column,
            )
    return df


def _numeric(df: pd.DataFrame, column: str, label: str, allow_empty: bool = False) -> pd.Series:
    raw = df[column].str.strip()
    values = pd.to_numeric(raw.replace("", np.nan), errors="coerce")
    bad = values.isna()
    if allow_empty:
        bad &= raw != ""
    if bad.any():
        line = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise InputError(f"{label}: non-numeric '{column}' on line {line}")
    return values


# ============================================
# MINUTES
# ============================================

def write_minutes(path: PathLike, minutes: Sequence[MinuteInterval]) -> None:
    df = pd.DataFrame(
        {
            "start": [m.start.isoformat() for m in minutes],
            "pce": [m.pce for m in minutes],
            "vehicle_count": [m.vehicle_count for m in minutes],
            "harmonic_mean_speed": [np.nan if m.harmonic_mean_speed is None else m.harmonic_mean_speed for m in minutes],
        },
        columns=MINUTE_COLUMNS,
    )
    _write_frame(path, df)


def read_minutes(path: PathLike) -> list[MinuteInterval]:
    df = _read_frame(path, MINUTE_COLUMNS, "Minutes")
    starts = pd.to_datetime(df["start"].str.strip(), format="ISO8601", errors="coerce")
    if starts.isna().any():
        line = int(np.flatnonzero(starts.isna().to_numpy())[0]) + 2
        raise InputError(f"Minutes: bad start timestamp on line {line}")
    pce = _numeric(df, "pce", "Minutes")
    counts = _numeric(df, "vehicle_count", "Minutes")
    speeds = _numeric(df, "harmonic_mean_speed", "Minutes", allow_empty=True)
    return [
        MinuteInterval(
            start=s.to_pydatetime(),
            pce=int(p),
            vehicle_count=int(c),
            harmonic_mean_speed=None if pd.isna(v) else float(v),
        )
        for s, p, c, v in zip(starts, pce, counts, speeds)
    ]


# ============================================
# OBSERVATIONS
# ============================================

def write_observations(path: PathLike, obs: ObservationSet) -> None:
    df = pd.DataFrame(
        {
            "timestamp": ["" if o.timestamp is None else o.timestamp.isoformat() for o in obs.observations],
            "intensity_pce_window": [o.intensity for o in obs.observations],
            "breakdown": [o.delta for o in obs.observations],
        },
        columns=OBSERVATION_COLUMNS,
    )
    _write_frame(path, df)


def read_observations(path: PathLike, window_minutes: int = 3, eval_step_minutes: int = 1) -> ObservationSet:
    """Observations CSV; breakdown must be 0 or 1, intensity a positive integer."""
    df = _read_frame(path, OBSERVATION_COLUMNS, "Observations")
    intensity = _numeric(df, "intensity_pce_window", "Observations")
    bad = (intensity <= 0) | (intensity != np.floor(intensity))
    flags = df["breakdown"].str.strip()
    bad |= ~flags.isin(["0", "1"])
    if bad.any():
        line = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise InputError(f"Observations: invalid intensity or breakdown flag on line {line}")

    raw_ts = df["timestamp"].str.strip()
    stamps = pd.to_datetime(raw_ts.where(raw_ts != ""), format="ISO8601", errors="coerce")
    if (stamps.isna() & (raw_ts != "")).any():
        line = int(np.flatnonzero((stamps.isna() & (raw_ts != "")).to_numpy())[0]) + 2
        raise InputError(f"Observations: bad timestamp on line {line}")

    observations = tuple(
        Observation(int(i), f == "1", None if pd.isna(t) else t.to_pydatetime())
        for i, f, t in zip(intensity, flags, stamps)
    )
    return ObservationSet(observations, window_minutes=window_minutes, eval_step_minutes=eval_step_minutes)


# ============================================
# PARAMETERS
# ============================================

def params_document(
    params: WeibullParams,
    kind: Optional[LikelihoodKind] = None,
    diagnostics: Optional[FitDiagnostics] = None,
) -> dict:
    doc = {
        "scale": params.scale,
        "shape": params.shape,
        "window_minutes": params.window_minutes,
        "eval_step_minutes": params.eval_step_minutes,
        "likelihood": kind.value if kind is not None else None,
        "n_obs": diagnostics.n_obs if diagnostics else None,
        "n_breakdowns": diagnostics.n_breakdowns if diagnostics else None,
        "loglik": diagnostics.loglik if diagnostics else None,
    }
    return doc


def write_params(
    path: PathLike,
    params: WeibullParams,
    kind: Optional[LikelihoodKind] = None,
    diagnostics: Optional[FitDiagnostics] = None,
) -> None:
    write_json(path, params_document(params, kind, diagnostics))


def read_params(path: PathLike) -> WeibullParams:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Params file {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError(f"Params file {path} must hold a JSON object")
    for key in ("scale", "shape"):
        if key not in doc:
            raise SchemaError(f"Params file {path}: missing '{key}'", column=key)
    try:
        return WeibullParams(
            scale=doc["scale"],
            shape=doc["shape"],
            window_minutes=doc.get("window_minutes"),
            eval_step_minutes=doc.get("eval_step_minutes"),
        )
    except ValueError as e:
        raise InputError(f"Params file {path}: {e}") from e


# ============================================
# STEP FUNCTION
# ============================================

def write_step_function(path: PathLike, survival: StepSurvivalFunction) -> None:
    cdf = survival_to_cdf(survival)
    df = pd.DataFrame([step.model_dump() for step in survival.steps], columns=STEP_COLUMNS[:-1])
    df["cdf"] = list(cdf.cdf)
    _write_frame(path, df)


def read_step_function(path: PathLike, window_minutes: Optional[int] = None) -> StepSurvivalFunction:
    df = _read_frame(path, STEP_COLUMNS[:-1], "Step function")
    values = {column: _numeric(df, column, "Step function") for column in STEP_COLUMNS[:-1]}
    try:
        steps = tuple(
            SurvivalStep(**{column: values[column].iloc[k] for column in values}) for k in range(len(df))
        )
        return StepSurvivalFunction(steps=steps, window_minutes=window_minutes)
    except ValueError as e:
        raise InputError(f"Step function file {path}: {e}") from e


# ============================================
# VALIDATION OUTPUTS
# ============================================

def write_cfb_curves(path: PathLike, empirical: CfbCurve, predicted: CfbCurve) -> None:
    df = pd.DataFrame(
        {
            "intensity": list(empirical.levels),
            "exposure": list(empirical.exposure),
            "cfb_empirical": list(empirical.cfb),
            "cfb_predicted": list(predicted.cfb),
        },
        columns=CFB_COLUMNS,
    )
    _write_frame(path, df)


def write_error_report(path: PathLike, report: ErrorReport) -> None:
    write_json(path, report.model_dump())


def comparison_frame(comparison: ScenarioComparison) -> pd.DataFrame:
    """Quantity rows by probability-level columns, then the summary rows."""
    labels = [format_number(row.probability) for row in comparison.rows]
    quantities = {
        "breakdown_probability": [row.probability for row in comparison.rows],
        "intensity_a": [row.intensity_a for row in comparison.rows],
        "intensity_b": [row.intensity_b for row in comparison.rows],
        "absolute_increase": [row.absolute_increase for row in comparison.rows],
        "relative_increase_pct": [row.relative_increase_pct for row in comparison.rows],
    }
    body = pd.DataFrame.from_dict(quantities, orient="index", columns=labels)
    summary = {
        "median_a": comparison.median_a,
        "median_b": comparison.median_b,
        "average_relative_increase_pct": comparison.average_relative_increase_pct,
        "average_absolute_increase": comparison.average_absolute_increase,
        "average_absolute_increase_per_hour": comparison.average_absolute_increase_per_hour,
    }
    tail = pd.DataFrame({labels[0]: list(summary.values())}, index=list(summary.keys()))
    frame = pd.concat([body, tail.reindex(columns=labels)])
    frame.index.name = "quantity"
    return frame.reset_index()


def write_comparison(path: PathLike, comparison: ScenarioComparison) -> None:
    _write_frame(path, comparison_frame(comparison))


# ============================================
# SIMULATION
# ============================================

def read_plan(path: PathLike) -> list[tuple[float, float]]:
    """Plan CSV; duration may be 'inf'."""
    df = _read_frame(path, PLAN_COLUMNS, "Plan")
    intensity = _numeric(df, "intensity", "Plan")
    duration = _numeric(df, "duration_minutes", "Plan")
    return [(float(i), float(d)) for i, d in zip(intensity, duration)]


def write_samples(path: PathLike, samples: np.ndarray) -> None:
    samples = np.asarray(samples, dtype=float)
    survived = np.isnan(samples)
    df = pd.DataFrame(
        {
            "sample": np.arange(len(samples)),
            "breakdown_minute": samples,
            "survived": survived.astype(int),
        },
        columns=SAMPLE_COLUMNS,
    )
    _write_frame(path, df)


def write_event_log(path: PathLike, events: Sequence[dict]) -> None:
    with atomic_write(path) as handle:
        for event in events:
            handle.write(json.dumps(event) + "\n")
