"""Main application file for the dynamic pricing engine that contains the command-line harness wrapped up in a create_app
function, so that tests can build their own instance of the app (with quieter logging) and drive it with click's test runner.

The two commands are thin wrappers around cmd_simulate and cmd_report, which do the work and return the exit code:
0 on success, 1 on a runtime failure, 2 on a configuration error."""

import logging
import os
from dataclasses import replace
from pathlib import Path

import click
from dotenv import load_dotenv

from forms.experiment_forms import load_spec, parse_ks, render_spec
from helpers.evaluation_helpers import compare_policies, daily_revenue_stats, report_from_records
from helpers.simulation_helpers import run_experiment
from io_helpers import (
    read_records_jsonl,
    write_activity_csv,
    write_figure_csv,
    write_records_jsonl,
    write_report,
    write_revenue_csv,
    write_summary_json,
)
from models.errors import FieldProblem, InvalidInputError, PricingError, SpecError
from models.experiment import DEFAULT_REPORT_KS
from models.market import PASSIVE, TS

logger = logging.getLogger(__name__)

SEED_ENV = "PRICING_SEED"
WORKERS_ENV = "PRICING_WORKERS"
LOG_LEVEL_ENV = "PRICING_LOG_LEVEL"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _echo_problems(exc):
    problems = exc.problems if isinstance(exc, SpecError) else [exc]
    for problem in problems:
        click.echo(f"config error: {problem}", err=True)


def _summary(spec, results):
    """What summary.json holds: the run's identity, each policy's mean total revenue and, when both policies ran, the paired
    comparison over the comparison window."""

    window = spec.comparison_window()
    totals = {}
    for result in results:
        totals.setdefault(result.policy, []).append(float(result.revenue_series.sum()))
    summary = {
        "seed": spec.seed,
        "trials": spec.trials,
        "policies": list(spec.policies),
        "window": list(window),
        "mean_total_revenue": {tag: sum(values) / len(values) for tag, values in totals.items()},
        "comparison": None,
    }
    if TS in spec.policies and PASSIVE in spec.policies:
        summary["comparison"] = compare_policies(results, window, treatment=TS, control=PASSIVE).to_dict()
    return summary


def cmd_simulate(spec_path, out=None, workers=None, seed=None):
    """Runs the experiment described by the spec file and writes revenue.csv, records.jsonl, figure.csv, activity.csv,
    summary.json and the resolved spec.ini into the output directory. workers and seed override the spec file."""

    try:
        spec = load_spec(spec_path)
        overrides = {key: value for key, value in (("workers", workers), ("seed", seed)) if value is not None}
        if out is not None:
            overrides["output_dir"] = str(out)
        spec = replace(spec, **overrides)
    except SpecError as exc:
        _echo_problems(exc)
        return EXIT_CONFIG
    except InvalidInputError as exc:
        _echo_problems(SpecError([FieldProblem("experiment", "", str(exc))]))
        return EXIT_CONFIG
    except OSError as exc:
        click.echo(f"config error: cannot read {spec_path}: {exc}", err=True)
        return EXIT_CONFIG

    logger.info("simulating %d trial(s) of %s with seed %d", spec.trials, ", ".join(spec.policies), spec.seed)
    try:
        results = run_experiment(spec)
        out_dir = Path(spec.output_dir)
        write_revenue_csv(results, out_dir / "revenue.csv")
        write_records_jsonl(results, out_dir / "records.jsonl")
        write_figure_csv(daily_revenue_stats(results), out_dir / "figure.csv")
        write_activity_csv(results, out_dir / "activity.csv")
        write_summary_json(_summary(spec, results), out_dir / "summary.json")
        (out_dir / "spec.ini").write_text(render_spec(spec), encoding="utf-8")
    except (PricingError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(records_path, ks=DEFAULT_REPORT_KS, baseline_days=30, treatment_start=None, policy=TS, out=None):
    """Builds the per-k Wald table (both delta variants) from a records.jsonl file and writes report.json and report.csv next
    to it, or into out."""

    try:
        ks = parse_ks(ks) if isinstance(ks, str) else tuple(ks)
    except ValueError as exc:
        click.echo(f"config error: --ks: {exc}", err=True)
        return EXIT_CONFIG

    try:
        records = read_records_jsonl(records_path)
        rows = report_from_records(records, ks, baseline_days, treatment_start, policy)
        out_dir = Path(out) if out is not None else Path(records_path).parent
        write_report(rows, out_dir / "report.json", out_dir / "report.csv")
    except (PricingError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME

    for row in rows:
        if row.p_value is None:
            click.echo(f"{row.variant:>12}  k={row.k:<3} items={row.items:<5} {row.status}")
        else:
            click.echo(
                f"{row.variant:>12}  k={row.k:<3} items={row.items:<5} mean delta={row.mean_delta:.4g}  p={row.p_value:.3g}"
            )
    return EXIT_OK


def create_app(testing=False):
    """Create an instance of the command-line app. Environment variables (and a .env file) are read here; testing only changes
    the default log level."""

    load_dotenv()
    level_name = os.environ.get(LOG_LEVEL_ENV, "WARNING" if testing else "INFO").upper()
    level = getattr(logging, level_name, None)
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    @click.group()
    def app():
        """Dynamic pricing engine: simulate Max-Rev-Passive and Max-Rev-TS on a synthetic market and evaluate the results."""

    @app.command("simulate")
    @click.option("--spec", "spec_path", required=True, type=click.Path(dir_okay=False), help="Experiment spec file.")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory (overrides output_dir).")
    @click.option("--workers", type=click.IntRange(min=1), envvar=WORKERS_ENV, default=None, help="Parallel trial workers.")
    @click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), envvar=SEED_ENV, default=None, help="Master seed.")
    @click.pass_context
    def simulate(ctx, spec_path, out, workers, seed):
        """Run every policy on every trial of the synthetic market."""

        ctx.exit(cmd_simulate(spec_path, out, workers, seed))

    @app.command("report")
    @click.option("--records", "records_path", required=True, type=click.Path(dir_okay=False), help="records.jsonl to evaluate.")
    @click.option("--ks", default=",".join(str(k) for k in DEFAULT_REPORT_KS), show_default=True, help="Eligibility thresholds.")
    @click.option("--baseline-days", type=click.IntRange(min=1), default=30, show_default=True)
    @click.option("--treatment-start", type=click.IntRange(min=1), default=None, help="First treatment day (default: first TS day).")
    @click.option("--policy", type=click.Choice([TS, PASSIVE]), default=TS, show_default=True)
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory (default: next to the records).")
    @click.pass_context
    def report(ctx, records_path, ks, baseline_days, treatment_start, policy, out):
        """Per-k Wald tables of the per-item revenue deltas."""

        ctx.exit(cmd_report(records_path, ks, baseline_days, treatment_start, policy, out))

    return app
