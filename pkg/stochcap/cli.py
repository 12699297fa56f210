"""
Command line - stochastic capacity toolkit.

Subcommands:
    ingest     raw events CSV -> minutes CSV
    pipeline   raw events CSV -> observations CSV (+ processing summary JSON)
    classify   minutes CSV -> observations CSV
    fit        observations CSV -> params JSON
    plm        observations CSV -> step-function CSV
    validate   observations + params JSON / step-function CSV -> CF_B curves + error report
    compare    two params JSON -> capacity comparison CSV
    transform  params JSON -> horizon probabilities, time to breakdown, capacities
    synth      truth params JSON -> synthetic observations CSV
    simulate   plan CSV + params JSON -> breakdown-time samples CSV

Exit status: 0 success, 1 input/validation error, 2 estimation failure.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import click

from stochcap import __version__
from stochcap.aggregate import rolling_intervals
from stochcap.classify import classify_detailed
from stochcap.config import settings
from stochcap.error_handler import EXIT_INPUT, EXIT_OK, ArgumentError, ErrorClassifier, ProvenanceError
from stochcap.estimate import fit_mle, plm_estimate, survival_to_cdf
from stochcap.file_formats import (
    comparison_frame,
    float_format,
    format_number,
    read_minutes,
    read_observations,
    read_params,
    read_plan,
    read_step_function,
    write_cfb_curves,
    write_comparison,
    write_error_report,
    write_event_log,
    write_json,
    write_minutes,
    write_observations,
    write_params,
    write_samples,
    write_step_function,
)
from stochcap.models import ClassifierConfig, FilterConfig, LikelihoodKind, OptimizerConfig
from stochcap.pipeline import ProcessingChain
from stochcap.simulate import DemandConfig, sample_breakdown_times, synth_observations
from stochcap.transform import (
    breakdown_prob_over,
    capacity_at_probability,
    compare_scenarios,
    survival_prob_over,
    time_to_breakdown_stats,
)
from stochcap.validate import empirical_cfb, error_metrics, exposure_histogram, predicted_cfb


logger = logging.getLogger(__name__)

InputFile = click.Path(exists=True, dir_okay=False, path_type=Path)
OutputFile = click.Path(dir_okay=False, writable=True, path_type=Path)


# ============================================
# SHARED OPTIONS
# ============================================

def _stack(*decorators):
    def apply(func):
        for decorator in reversed(decorators):
            func = decorator(func)
        return func
    return apply


provenance_options = _stack(
    click.option("--window", "window_minutes", type=int, default=3, show_default=True,
                 help="Aggregation window T_a in minutes."),
    click.option("--step", "eval_step_minutes", type=int, default=1, show_default=True,
                 help="Evaluation step T_f in minutes."),
)

classifier_options = _stack(
    click.option("--breakdown-speed", type=float, default=40.0, show_default=True),
    click.option("--recovery-speed", type=float, default=70.0, show_default=True),
    click.option("--recovery-window", type=int, default=5, show_default=True),
    click.option("--inconclusive-speed", type=float, default=50.0, show_default=True),
    click.option("--min-intensity", type=int, default=45, show_default=True),
    click.option("--queue-onset-shift/--no-queue-onset-shift", default=True, show_default=True),
    provenance_options,
)

filter_options = _stack(
    click.option("--max-speed", type=float, default=None, help="Speed cap in km/h."),
    click.option("--max-length", type=float, default=None, help="Length cap in m."),
)


def _classifier_config(kwargs: dict) -> ClassifierConfig:
    return ClassifierConfig(
        breakdown_speed=kwargs.pop("breakdown_speed"),
        recovery_speed=kwargs.pop("recovery_speed"),
        recovery_window=kwargs.pop("recovery_window"),
        inconclusive_speed=kwargs.pop("inconclusive_speed"),
        min_intensity=kwargs.pop("min_intensity"),
        window_minutes=kwargs.pop("window_minutes"),
        eval_step_minutes=kwargs.pop("eval_step_minutes"),
        queue_onset_shift=kwargs.pop("queue_onset_shift"),
    )


def _filter_config(max_speed: Optional[float], max_length: Optional[float]) -> FilterConfig:
    overrides = {}
    if max_speed is not None:
        overrides["max_speed_kmh"] = max_speed
    if max_length is not None:
        overrides["max_length_m"] = max_length
    return FilterConfig(**overrides)


def _parse_levels(ctx, param, value: Optional[str]):
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated probabilities, got '{value}'")


def _check_provenance(params, window_minutes: int) -> None:
    if params.window_minutes is not None and params.window_minutes != window_minutes:
        raise ProvenanceError(
            f"Params fitted with T_a={params.window_minutes} min, observations aggregated over {window_minutes} min"
        )


# ============================================
# COMMANDS
# ============================================

@click.group()
@click.version_option(__version__, prog_name="stochcap")
@click.option("--log-level", default=None, help="Logging level (default from STOCHCAP_LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """Stochastic highway capacity estimation toolkit."""
    level = (log_level or settings.log_level).upper()
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


@cli.command()
@click.argument("events", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Minutes CSV.")
@filter_options
def ingest(events: Path, output: Path, max_speed, max_length):
    """Parse and clean raw detector events, aggregate to one-minute intervals."""
    chain = ProcessingChain(filter_config=_filter_config(max_speed, max_length))
    result = chain.to_minutes(events)
    write_minutes(output, result.minutes)
    click.echo(
        f"{len(result.minutes)} minutes from {result.rejections.kept} records "
        f"({result.parsed.malformed} malformed, {result.rejections.rejected} rejected)",
        err=True,
    )


@cli.command()
@click.argument("events", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Observations CSV.")
@click.option("--summary", type=OutputFile, default=None, help="Processing summary JSON.")
@filter_options
@classifier_options
def pipeline(events: Path, output: Path, summary: Optional[Path], max_speed, max_length, **kwargs):
    """Raw events to observations in one pass."""
    chain = ProcessingChain(
        filter_config=_filter_config(max_speed, max_length),
        classifier_config=_classifier_config(kwargs),
    )
    result = chain.run(events)
    write_observations(output, result.report.observations)
    if summary is not None:
        write_json(summary, result.summary())
    obs = result.report.observations
    click.echo(f"{len(obs)} observations, {obs.n_breakdowns} breakdowns", err=True)


@cli.command()
@click.argument("minutes", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Observations CSV.")
@click.option("--events", "events_path", type=OutputFile, default=None, help="Breakdown event trail JSON.")
@classifier_options
def classify(minutes: Path, output: Path, events_path: Optional[Path], **kwargs):
    """Identify breakdowns and emit censored/uncensored observations."""
    config = _classifier_config(kwargs)
    rows = read_minutes(minutes)
    report = classify_detailed(
        rows,
        rolling_intervals(rows, config.window_minutes),
        rolling_intervals(rows, config.recovery_window),
        config,
    )
    write_observations(output, report.observations)
    if events_path is not None:
        write_json(events_path, {
            "events": [asdict(e) for e in report.events],
            "discards": report.discards,
        })
    click.echo(f"{len(report.observations)} observations, {report.observations.n_breakdowns} breakdowns", err=True)


@cli.command()
@click.argument("observations", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Params JSON.")
@click.option("--likelihood", type=click.Choice([k.value for k in LikelihoodKind]), default="new", show_default=True)
@click.option("--max-iterations", type=int, default=None)
@click.option("--tolerance", type=float, default=None, help="Simplex size tolerance.")
@click.option("--grid-size", type=int, default=None, help="Start-point grid per axis.")
@provenance_options
def fit(observations: Path, output: Path, likelihood: str, max_iterations, tolerance, grid_size,
        window_minutes: int, eval_step_minutes: int):
    """Maximum-likelihood Weibull capacity distribution."""
    overrides = {
        key: value
        for key, value in (
            ("max_iterations", max_iterations),
            ("simplex_tolerance", tolerance),
            ("grid_size", grid_size),
        )
        if value is not None
    }
    obs = read_observations(observations, window_minutes, eval_step_minutes)
    kind = LikelihoodKind(likelihood)
    params, diagnostics = fit_mle(obs, kind, OptimizerConfig(**overrides))
    write_params(output, params, kind, diagnostics)
    click.echo(f"scale={format_number(params.scale)} shape={format_number(params.shape)}", err=True)


@cli.command()
@click.argument("observations", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Step-function CSV.")
@provenance_options
def plm(observations: Path, output: Path, window_minutes: int, eval_step_minutes: int):
    """Product-limit survival estimate."""
    obs = read_observations(observations, window_minutes, eval_step_minutes)
    write_step_function(output, plm_estimate(obs))


@cli.command()
@click.argument("observations", type=InputFile)
@click.argument("model", type=InputFile)
@click.option("--curves", type=OutputFile, required=True, help="CF_B curves CSV.")
@click.option("--report", type=OutputFile, required=True, help="Error report JSON.")
@click.option("--hazard", is_flag=True, help="Predict a step function from partial failure probabilities.")
@provenance_options
def validate(observations: Path, model: Path, curves: Path, report: Path, hazard: bool,
             window_minutes: int, eval_step_minutes: int):
    """Compare predicted and empirical cumulative frequency of breakdowns.

    MODEL is a params JSON or a step-function CSV.
    """
    obs = read_observations(observations, window_minutes, eval_step_minutes)
    exposure = exposure_histogram(obs)
    if model.suffix.lower() == ".json":
        params = read_params(model)
        _check_provenance(params, window_minutes)
        predicted = predicted_cfb(exposure, params, method="mle")
    else:
        survival = read_step_function(model, window_minutes)
        if hazard:
            predicted = predicted_cfb(exposure, survival.hazard_at, method="plm-hazard")
        else:
            predicted = predicted_cfb(exposure, survival_to_cdf(survival), method="plm")

    empirical = empirical_cfb(obs)
    metrics = error_metrics(empirical, predicted)
    write_cfb_curves(curves, empirical, predicted)
    write_error_report(report, metrics)
    click.echo(
        f"SSE={format_number(metrics.sse)} RMSE={format_number(metrics.rmse)} "
        f"ARE={format_number(metrics.are)}% AWRE={format_number(metrics.awre)}%",
        err=True,
    )


@cli.command()
@click.argument("params_a", type=InputFile)
@click.argument("params_b", type=InputFile)
@click.option("--levels", callback=_parse_levels, default=None,
              help="Comma-separated breakdown probabilities, e.g. 0.001,0.005,0.01,0.02,0.05,0.1.")
@click.option("-o", "--output", type=OutputFile, default=None, help="Comparison CSV (default: stdout).")
def compare(params_a: Path, params_b: Path, levels, output: Optional[Path]):
    """Capacity of scenario B against reference scenario A at given breakdown probabilities."""
    comparison = compare_scenarios(read_params(params_a), read_params(params_b), levels)
    if output is not None:
        write_comparison(output, comparison)
    else:
        click.echo(comparison_frame(comparison).to_csv(index=False, float_format=float_format(), na_rep=""), nl=False)


@cli.command()
@click.argument("params_path", metavar="PARAMS", type=InputFile)
@click.option("--intensity", "intensities", type=float, multiple=True, help="Window intensity (repeatable).")
@click.option("--horizon", type=float, default=None, help="Horizon T in minutes.")
@click.option("--probability", "probabilities", type=float, multiple=True,
              help="Breakdown probability to invert (repeatable).")
@click.option("--step", "eval_step_minutes", type=int, default=None, help="Evaluation step T_f (default: params).")
@click.option("--window", "window_minutes", type=int, default=None, help="T_a of the given intensities.")
@click.option("-o", "--output", type=OutputFile, default=None, help="Result JSON (default: stdout).")
def transform(params_path: Path, intensities, horizon, probabilities, eval_step_minutes, window_minutes, output):
    """Horizon breakdown probabilities, time to breakdown and capacity levels."""
    params = read_params(params_path)
    if not intensities and not probabilities:
        raise ArgumentError("Give at least one --intensity or --probability")
    if any(i < 0 for i in intensities):
        raise ArgumentError(f"Intensities must be >= 0, got {list(intensities)}")

    rows = []
    for intensity in intensities:
        row = {"intensity": intensity}
        if horizon is not None:
            row["horizon_minutes"] = horizon
            row["breakdown_probability"] = breakdown_prob_over(
                intensity, horizon, params, eval_step_minutes, window_minutes
            )
            row["survival_probability"] = survival_prob_over(
                intensity, horizon, params, eval_step_minutes, window_minutes
            )
        if params.cdf(intensity) > 0:
            stats = time_to_breakdown_stats(intensity, params, eval_step_minutes)
            row["mean_minutes_to_breakdown"] = stats.mean
            row["median_minutes_to_breakdown"] = stats.median
        else:
            row["mean_minutes_to_breakdown"] = None
            row["median_minutes_to_breakdown"] = None
        rows.append(row)

    doc = {
        "intensities": rows,
        "capacities": [
            {"probability": p, "intensity": capacity_at_probability(params, p)} for p in probabilities
        ],
    }
    if output is not None:
        write_json(output, doc)
    else:
        click.echo(_render_transform(doc))


def _render_transform(doc: dict) -> str:
    lines = []
    for row in doc["intensities"]:
        parts = [
            f"{key}={'none' if value is None else format_number(value)}" for key, value in row.items()
        ]
        lines.append(" ".join(parts))
    for row in doc["capacities"]:
        lines.append(f"probability={format_number(row['probability'])} intensity={format_number(row['intensity'])}")
    return "\n".join(lines)


DEMAND_DEFAULTS = DemandConfig()


@cli.command()
@click.argument("truth", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Synthetic observations CSV.")
@click.option("--events", "events_path", type=OutputFile, default=None, help="Breakdown event log (JSON lines).")
@click.option("--duration", type=int, default=10_080, show_default=True, help="Minutes to simulate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mean", type=float, default=DEMAND_DEFAULTS.mean, show_default=True)
@click.option("--reversion", type=float, default=DEMAND_DEFAULTS.reversion, show_default=True)
@click.option("--volatility", type=float, default=DEMAND_DEFAULTS.volatility, show_default=True)
@click.option("--lower", type=float, default=DEMAND_DEFAULTS.lower, show_default=True)
@click.option("--upper", type=float, default=DEMAND_DEFAULTS.upper, show_default=True)
@click.option("--amplitude", type=float, default=DEMAND_DEFAULTS.amplitude, show_default=True)
@click.option("--period", type=float, default=DEMAND_DEFAULTS.period_minutes, show_default=True)
@click.option("--congestion", type=int, default=None, help="Minutes skipped after a breakdown.")
@click.option("--min-intensity", type=int, default=0, show_default=True)
@click.option("--step", "eval_step_minutes", type=int, default=None, help="Evaluation step T_f (default: truth).")
def synth(truth: Path, output: Path, events_path, duration, seed, mean, reversion, volatility, lower, upper,
          amplitude, period, congestion, min_intensity, eval_step_minutes):
    """Synthetic observations from a known capacity distribution."""
    demand = DemandConfig(
        mean=mean,
        reversion=reversion,
        volatility=volatility,
        lower=lower,
        upper=upper,
        amplitude=amplitude,
        period_minutes=period,
    )
    obs, events = synth_observations(
        read_params(truth),
        demand,
        duration,
        seed,
        eval_step=eval_step_minutes,
        congestion_minutes=congestion,
        min_intensity=min_intensity,
    )
    write_observations(output, obs)
    if events_path is not None:
        write_event_log(events_path, events)
    click.echo(f"{len(obs)} observations, {obs.n_breakdowns} breakdowns", err=True)


@cli.command()
@click.argument("plan", type=InputFile)
@click.argument("params_path", metavar="PARAMS", type=InputFile)
@click.option("-o", "--output", type=OutputFile, required=True, help="Samples CSV.")
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step", "eval_step_minutes", type=int, default=None, help="Evaluation step T_f (default: params).")
def simulate(plan: Path, params_path: Path, output: Path, samples: int, seed: int, eval_step_minutes):
    """Monte Carlo time to breakdown over a piecewise-constant intensity plan."""
    draws = sample_breakdown_times(read_plan(plan), read_params(params_path), samples, seed, eval_step_minutes)
    write_samples(output, draws)


# ============================================
# ENTRY POINT
# ============================================

def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return the exit status instead of exiting."""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="stochcap", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_INPUT
    except click.Abort:
        click.echo("Aborted", err=True)
        return EXIT_INPUT
    except Exception as e:
        classification = ErrorClassifier.classify(e)
        logger.debug(f"[CLI] {classification.error_type.value}: {classification.system_message}")
        click.echo(f"Error: {classification.user_message}: {classification.system_message}", err=True)
        return classification.exit_code
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    sys.exit(run())
