"""This file contains the functions that record realized demand and produce day-ahead forecasts with the exponential-decay
forecaster. Forecast noise is not added here; the simulator does that."""

from models.errors import DuplicateDayError, InvalidInputError, MissingHistoryError
from models.forecast import DemandHistory


def forecast(model, item_id, t):
    """Forecast for item_id on day t, at yesterday's price. Needs every day from the item's first recorded day up to t - 1.
    The day right after the last recorded one is answered from the running sum; earlier days are recomputed."""

    if t < 1:
        raise InvalidInputError(f"forecast day must be >= 1, got {t}")

    history = model.history.get(item_id)
    if history is None or t <= history.first_day:
        raise MissingHistoryError(f"item {item_id}: no demand recorded before day {t}")
    if t > history.last_day + 1:
        raise MissingHistoryError(f"item {item_id}: demand for day {history.last_day + 1} is missing")

    if t == history.last_day + 1:
        return model.base + history.running_sum
    return model.base + _decayed_sum(history.demands[: t - history.first_day], history.first_day, t, model.decay)


def forecast_from_scratch(model, item_id, t):
    """Same value as forecast but always re-summed from the stored history."""

    forecast(model, item_id, t)  # validates the request
    history = model.history[item_id]
    return model.base + _decayed_sum(history.demands[: t - history.first_day], history.first_day, t, model.decay)


def _decayed_sum(demands, first_day, t, decay):
    return sum(decay ** (t - (first_day + offset)) * demand for offset, demand in enumerate(demands))


def record_demand(model, item_id, t, demand):
    """Append the realized demand of item_id on day t and advance its running sum, S <- decay * (S + d). Days must be
    recorded in order."""

    if not demand >= 0:
        raise InvalidInputError(f"item {item_id}: demand must be nonnegative, got {demand}")

    history = model.history.get(item_id)
    if history is None:
        history = model.history[item_id] = DemandHistory(first_day=t)
    elif t <= history.last_day:
        raise DuplicateDayError(f"item {item_id}: demand for day {t} already recorded")
    elif t > history.last_day + 1:
        raise MissingHistoryError(f"item {item_id}: cannot record day {t} before day {history.last_day + 1}")

    history.demands.append(float(demand))
    history.running_sum = model.decay * (history.running_sum + demand)
    return model
