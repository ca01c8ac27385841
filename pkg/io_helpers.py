"""This file contains the functions that move data in and out of the pricing engine: the CSV, JSONL and JSON artifacts written
by the CLI, the reader for saved observation records, and posterior checkpoints.

WARNING: these functions touch the file system and may raise OSError. They do no error handling of their own; the CLI
commands in app.py catch the errors and turn them into exit codes. Anyone calling them from their own code should do the
same."""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from models.errors import InvalidInputError
from models.market import ObservationRecord
from models.posterior import ElasticityPosterior

logger = logging.getLogger(__name__)

# 17 significant digits re-parse to the same double.
FLOAT_FORMAT = "%.17g"

REVENUE_COLUMNS = ["trial", "policy", "day", "basket_revenue"]
FIGURE_COLUMNS = ["policy", "day", "mean_revenue", "std_revenue"]
ACTIVITY_COLUMNS = ["trial", "policy", "day", "ts_items", "price_changes"]
REPORT_COLUMNS = ["variant", "k", "items", "statistic", "p_value", "mean_delta", "status"]


def _write_csv(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def _write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def write_revenue_csv(results, path):
    """One row per (trial, policy, day) with that day's basket revenue."""

    rows = [
        (result.trial_id, result.policy, day, revenue)
        for result in results
        for day, revenue in enumerate(result.revenue_series.tolist(), start=1)
    ]
    return _write_csv(pd.DataFrame(rows, columns=REVENUE_COLUMNS), path)


def write_records_jsonl(results, path):
    """Every ObservationRecord of every result, one JSON object per line."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for result in results:
            for record in result.records:
                handle.write(json.dumps(record.to_dict()) + "\n")
    logger.info("wrote %s", path)
    return path


def read_records_jsonl(path):
    """Reads records written by write_records_jsonl. Raises InvalidInputError naming the first bad line."""

    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(ObservationRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise InvalidInputError(f"{path}, line {number}: malformed record: {exc}") from exc
    return records


def write_figure_csv(daily_stats, path):
    """Per-day cross-trial mean and standard deviation of basket revenue for each policy; daily_stats comes from
    daily_revenue_stats."""

    rows = [
        (tag, day, mean, std)
        for tag, (means, stds) in daily_stats.items()
        for day, (mean, std) in enumerate(zip(means.tolist(), stds.tolist()), start=1)
    ]
    return _write_csv(pd.DataFrame(rows, columns=FIGURE_COLUMNS), path)


def write_activity_csv(results, path):
    """Per day: how many items were priced by Thompson sampling and how many of their prices moved from the day before. For
    records without a ts_mask (the passive policy) every item counts."""

    rows = []
    for result in results:
        prev_prices = None
        for record in result.records:
            counted = np.ones(record.prices.shape[0], dtype=bool) if record.ts_mask is None else record.ts_mask
            ts_items = 0 if record.ts_mask is None else int(record.ts_mask.sum())
            changes = 0 if prev_prices is None else int(np.count_nonzero((record.prices != prev_prices) & counted))
            rows.append((result.trial_id, result.policy, record.day, ts_items, changes))
            prev_prices = record.prices
    return _write_csv(pd.DataFrame(rows, columns=ACTIVITY_COLUMNS), path)


def write_summary_json(summary, path):
    return _write_json(summary, path)


def write_report(rows, json_path, csv_path):
    """Writes a per-k Wald table both as JSON (a list of row objects) and as CSV."""

    data = [row.to_dict() for row in rows]
    _write_json({"rows": data}, json_path)
    return _write_csv(pd.DataFrame(data, columns=REPORT_COLUMNS), csv_path)


def save_posterior(posterior, path):
    return _write_json(posterior.to_dict(), path)


def load_posterior(path):
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not a posterior checkpoint: {exc}") from exc
    return ElasticityPosterior.from_dict(record)
