"""This file contains the constant-elasticity demand model, its linear approximation around yesterday's price, and the revenue
functions the solver and the Thompson sampling update are built on. Everything here is a pure function."""

import numpy as np

from models.errors import InvalidInputError
from models.item import LikelihoodFeatures


def _check_price(price):
    if not price > 0:
        raise InvalidInputError(f"price must be positive, got {price}")


def _elasticity_of(item, elasticity):
    gamma = item.elasticity if elasticity is None else elasticity
    if gamma is None:
        raise InvalidInputError(f"item {item.item_id} has no elasticity")
    return gamma


def demand_exponential(item, price, elasticity=None):
    """Demand at price under the constant-elasticity model, f * (price / prev_price) ** gamma. Uses the item's own elasticity
    unless one is passed in."""

    _check_price(price)
    gamma = _elasticity_of(item, elasticity)
    return item.forecast * (price / item.prev_price) ** gamma


def demand_linear(item, price, elasticity=None):
    """First-order approximation of demand_exponential around prev_price. Not clamped: it goes negative for large price
    increases and callers decide what to do with that."""

    _check_price(price)
    gamma = _elasticity_of(item, elasticity)
    return item.forecast + (price - item.prev_price) * item.forecast * gamma / item.prev_price


def revenue_item(item, price, elasticity=None):
    """price * demand_linear. A concave quadratic in price whenever gamma < 0."""

    return price * demand_linear(item, price, elasticity)


def revenue_coefficients(prev_prices, forecasts, elasticities):
    """Coefficients (a, b) of the basket revenue sum_i a_i p_i^2 + b_i p_i, with a_i = f_i gamma_i / prev_i and
    b_i = f_i (1 - gamma_i)."""

    prev_prices = np.asarray(prev_prices, dtype=float)
    forecasts = np.asarray(forecasts, dtype=float)
    elasticities = np.asarray(elasticities, dtype=float)
    return forecasts * elasticities / prev_prices, forecasts * (1.0 - elasticities)


def basket_revenue(prices, prev_prices, forecasts, elasticities):
    """Linearized revenue of a whole basket at a price vector."""

    a, b = revenue_coefficients(prev_prices, forecasts, elasticities)
    prices = np.asarray(prices, dtype=float)
    return float(np.sum(a * prices ** 2 + b * prices))


def likelihood_features(basket, prices):
    """theta_i = p_i^2 f_i / prev_i - p_i f_i and baseline = sum_i p_i f_i, so that the linearized basket revenue is
    gamma . theta + baseline for every gamma."""

    prices = np.asarray(prices, dtype=float)
    if prices.shape != (len(basket),):
        raise InvalidInputError(f"expected {len(basket)} prices, got {prices.shape[0] if prices.ndim else 0}")
    if np.any(~(prices > 0)):
        raise InvalidInputError("prices must be positive")

    prev_prices = np.array([item.prev_price for item in basket], dtype=float)
    forecasts = np.array([item.forecast for item in basket], dtype=float)
    theta = prices ** 2 * forecasts / prev_prices - prices * forecasts
    return LikelihoodFeatures(theta, float(np.sum(prices * forecasts)))
