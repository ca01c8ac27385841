"""This file contains the evaluation functions: Wald's test on a sample of per-item revenue deltas, the delta tables over a
baseline and a treatment window, the per-k report built from saved observation records, and the paired comparison of two
policies across simulated trials."""

import logging
import math

import numpy as np
from scipy.stats import norm

from models.errors import DegenerateSampleError, EmptyEligibleSetError, InsufficientDataError, InvalidInputError
from models.evaluation import (
    DEGENERATE,
    DELTA_VARIANTS,
    EMPTY_SET,
    INSUFFICIENT,
    NO_BASELINE,
    OK,
    TS_DAYS,
    DeltaSample,
    PolicyComparison,
    WaldResult,
    WaldRow,
)
from models.market import PASSIVE, TS

logger = logging.getLogger(__name__)


def wald_test(deltas):
    """Two-sided test of E[delta] = 0: W = mean / (sd / sqrt(n)) with the n - 1 standard deviation, p = 2 (1 - Phi(|W|))."""

    deltas = np.asarray(deltas, dtype=float)
    n = deltas.shape[0]
    if n < 2:
        raise InsufficientDataError(f"a Wald test needs at least 2 samples, got {n}")
    sd = float(np.std(deltas, ddof=1))
    mean = float(np.mean(deltas))
    if sd == 0.0:
        raise DegenerateSampleError(f"all {n} samples equal {mean}")

    statistic = mean / (sd / math.sqrt(n))
    p_value = min(1.0, 2.0 * float(norm.sf(abs(statistic))))
    return WaldResult(n=n, statistic=statistic, p_value=p_value, mean_delta=mean)


def _check_windows(baseline, treatment, eligibility):
    baseline = np.asarray(baseline, dtype=float)
    treatment = np.asarray(treatment, dtype=float)
    eligibility = np.asarray(eligibility, dtype=bool)
    if baseline.ndim != 2 or treatment.ndim != 2:
        raise InvalidInputError("revenue windows must be (days x items) tables")
    if baseline.shape[0] == 0 or treatment.shape[0] == 0:
        raise InvalidInputError("revenue windows must not be empty")
    if baseline.shape[1] != treatment.shape[1] or eligibility.shape != treatment.shape:
        raise InvalidInputError("baseline, treatment and eligibility must cover the same items")
    return baseline, treatment, eligibility


def item_deltas(baseline, treatment, eligibility, variant=TS_DAYS, item_ids=None):
    """A DeltaSample for every item that was on treatment at least once.

    baseline and treatment are (days x items) per-item revenue tables, eligibility flags the treatment days each item was on
    Thompson sampling. With variant "ts_days" the treatment mean is taken over the item's eligible days only; with
    "whole_period" it is taken over the whole treatment window."""

    if variant not in DELTA_VARIANTS:
        raise InvalidInputError(f"variant must be one of {', '.join(DELTA_VARIANTS)}, got {variant!r}")
    baseline, treatment, eligibility = _check_windows(baseline, treatment, eligibility)
    item_ids = range(treatment.shape[1]) if item_ids is None else item_ids

    counts = eligibility.sum(axis=0)
    baseline_means = baseline.mean(axis=0)
    samples = []
    for column, item_id in enumerate(item_ids):
        days = int(counts[column])
        if days == 0:
            continue
        if variant == TS_DAYS:
            treated = treatment[eligibility[:, column], column].mean()
        else:
            treated = treatment[:, column].mean()
        samples.append(DeltaSample(item_id, float(treated - baseline_means[column]), days))
    return samples


def delta_table(baseline, treatment, eligibility, min_days, variant=TS_DAYS, item_ids=None):
    """The deltas of S_k, the items on treatment at least min_days times."""

    if min_days < 1:
        raise InvalidInputError(f"min_days must be at least 1, got {min_days}")
    kept = [
        sample for sample in item_deltas(baseline, treatment, eligibility, variant, item_ids)
        if sample.days_on_treatment >= min_days
    ]
    if not kept:
        raise EmptyEligibleSetError(f"no item was on treatment at least {min_days} times")
    return kept


def wald_row(samples, k, variant):
    """Filters samples to S_k and tests them. Never raises on an empty, too small or constant S_k; the row's status says so."""

    kept = [sample.delta for sample in samples if sample.days_on_treatment >= k]
    if not kept:
        return WaldRow(k, variant, 0, EMPTY_SET)
    try:
        result = wald_test(kept)
    except InsufficientDataError:
        return WaldRow(k, variant, len(kept), INSUFFICIENT, mean_delta=float(np.mean(kept)))
    except DegenerateSampleError:
        return WaldRow(k, variant, len(kept), DEGENERATE, mean_delta=float(np.mean(kept)))
    return WaldRow(k, variant, result.n, OK, result.statistic, result.p_value, result.mean_delta)


def wald_table(samples_by_variant, ks):
    """Rows for every (variant, k), variants in the order given and k ascending within each."""

    return [wald_row(samples, k, variant) for variant, samples in samples_by_variant.items() for k in ks]


def _first_ts_day(records):
    days = [record.day for record in records if record.ts_mask is not None and record.ts_mask.any()]
    if not days:
        raise InvalidInputError("no record has an item on Thompson sampling; pass a treatment start day")
    return min(days)


def _baseline_rows(trial, own, control, start, baseline_days):
    """Per-item revenue rows a trial's deltas are measured against. Normally the run's own baseline_days days before start;
    when the run was on treatment from its first day, the control run of the same trial over its first baseline_days days
    from start stands in for the missing pre-period."""

    rows = [r.item_revenue for r in own if start - baseline_days <= r.day < start]
    if rows:
        return rows
    rows = [r.item_revenue for r in control if start <= r.day < start + baseline_days]
    if rows:
        logger.info("trial %d: no days before day %d, baseline taken from the %s run", trial, start, control[0].policy)
    return rows


def report_from_records(records, ks, baseline_days=30, treatment_start=None, policy=TS, control=PASSIVE):
    """Per-k Wald table over saved ObservationRecords, for both delta variants.

    The treatment window of the given policy runs from treatment_start (by default the first day any item was on Thompson
    sampling) to the last recorded day. The baseline is the baseline_days days before it or, for trials with no such days,
    the control policy's records of the same trial. Trials with neither are left out; if that leaves nothing, every row
    has status "no baseline". Items of different trials are distinct items, so their deltas are pooled."""

    if baseline_days < 1:
        raise InvalidInputError("baseline_days must be at least 1")

    runs = {}
    for record in records:
        runs.setdefault(record.policy, {}).setdefault(record.trial, []).append(record)
    if policy not in runs:
        raise InvalidInputError(f"no records for policy {policy!r}")
    control_runs = runs.get(control, {}) if control != policy else {}
    start = treatment_start
    if start is None:
        start = _first_ts_day([record for trial_records in runs[policy].values() for record in trial_records])

    samples_by_variant = {variant: [] for variant in DELTA_VARIANTS}
    treated_trials = measured_trials = 0
    for trial, trial_records in sorted(runs[policy].items()):
        trial_records.sort(key=lambda record: record.day)
        treated = [r for r in trial_records if r.day >= start]
        if not treated:
            continue
        treated_trials += 1
        baseline = _baseline_rows(trial, trial_records, control_runs.get(trial, []), start, baseline_days)
        if not baseline:
            logger.warning("trial %d: nothing to measure day %d onwards against, left out of the report", trial, start)
            continue
        measured_trials += 1

        revenue = [r.item_revenue for r in treated]
        eligibility = [
            r.ts_mask if r.ts_mask is not None else np.zeros(r.prices.shape[0], dtype=bool) for r in treated
        ]
        item_ids = [f"{trial}:{index}" for index in range(treated[0].prices.shape[0])]
        for variant in DELTA_VARIANTS:
            samples_by_variant[variant].extend(item_deltas(baseline, revenue, eligibility, variant, item_ids))

    if not treated_trials:
        raise InsufficientDataError(f"no {policy} records from day {start} onwards")
    if not measured_trials:
        return [WaldRow(k, variant, 0, NO_BASELINE) for variant in DELTA_VARIANTS for k in ks]

    logger.info("report over %d trial(s), treatment from day %d", measured_trials, start)
    return wald_table(samples_by_variant, ks)


def daily_revenue_stats(results):
    """Per-day mean and standard deviation of basket revenue across trials, per policy: {policy: (mean, std)}."""

    series = {}
    for result in results:
        series.setdefault(result.policy, []).append(result.revenue_series)
    stats = {}
    for tag, rows in series.items():
        table = np.vstack(rows)
        std = table.std(axis=0, ddof=1) if table.shape[0] > 1 else np.zeros(table.shape[1])
        stats[tag] = (table.mean(axis=0), std)
    return stats


def compare_policies(results, window, treatment=TS, control=PASSIVE):
    """Paired comparison of two policies over the inclusive day window (first, last). Both policies must have run on the same
    trials; each trial contributes the difference of the two window-mean revenues."""

    first, last = window
    if not 1 <= first <= last:
        raise InvalidInputError(f"invalid comparison window {window}")

    by_policy = {}
    for result in results:
        by_policy.setdefault(result.policy, {})[result.trial_id] = result
    for tag in (treatment, control):
        if tag not in by_policy:
            raise InvalidInputError(f"no results for policy {tag!r}")
    if set(by_policy[treatment]) != set(by_policy[control]):
        raise InvalidInputError(f"{treatment} and {control} were not run on the same trials")

    trials = sorted(by_policy[treatment])
    window_means = {}
    for tag in (treatment, control):
        means = []
        for trial in trials:
            series = by_policy[tag][trial].revenue_series
            if series.shape[0] < last:
                raise InvalidInputError(f"trial {trial} of {tag} has only {series.shape[0]} days, window ends on {last}")
            means.append(series[first - 1 : last].mean())
        window_means[tag] = np.array(means)
    differences = window_means[treatment] - window_means[control]

    daily = daily_revenue_stats([result for result in results if result.policy in (treatment, control)])
    comparison = PolicyComparison(
        window=(first, last),
        treatment=treatment,
        control=control,
        daily_mean={tag: stats[0] for tag, stats in daily.items()},
        daily_std={tag: stats[1] for tag, stats in daily.items()},
        window_means=window_means,
        differences=differences,
    )

    mean = float(differences.mean())
    try:
        comparison.wald = wald_test(differences)
    except InsufficientDataError:
        comparison.status = INSUFFICIENT
    except DegenerateSampleError:
        # Every trial moved by the same amount: no difference at all, or a certain one.
        if mean == 0.0:
            comparison.wald = WaldResult(len(trials), 0.0, 1.0, 0.0)
        else:
            comparison.wald = WaldResult(len(trials), math.copysign(math.inf, mean), 0.0, mean)
        comparison.status = DEGENERATE
    return comparison
