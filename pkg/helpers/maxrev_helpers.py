"""This file contains the Max-Rev solver: maximize the linearized basket revenue sum_i a_i p_i^2 + b_i p_i over the feasible
price region. The objective is a diagonal concave quadratic, so without a basket-wide constraint the problem separates and is
solved in closed form; with one, projected gradient ascent is used."""

import logging

import numpy as np
from scipy.optimize import brentq

from helpers.demand_helpers import basket_revenue, revenue_coefficients
from models.constraints import MaxRevSolution
from models.errors import InvalidInputError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 10_000
STEP_TOL = 1e-12


def unconstrained_optimum(item):
    """The maximizer of revenue_item, prev_price * (gamma - 1) / (2 gamma)."""

    gamma = item.elasticity
    if gamma is None or not gamma < 0:
        raise InvalidInputError(f"item {item.item_id}: elasticity must be negative, got {gamma}")
    if not item.forecast > 0:
        raise InvalidInputError(f"item {item.item_id}: forecast must be positive, got {item.forecast}")
    return item.prev_price * (gamma - 1.0) / (2.0 * gamma)


def project(point, constraints, prev_prices=None):
    """Euclidean projection of point onto the constraint set. With only boxes this is clipping. With the basket inequality
    w . p >= m the projection is clip(point + nu w) for the smallest nu >= 0 that satisfies it, found by a bracketed root
    search on the (monotone) function nu -> w . clip(point + nu w)."""

    lo, hi = constraints.check_feasible(prev_prices)
    point = np.asarray(point, dtype=float)
    clipped = np.clip(point, lo, hi)
    linear = constraints.basket_linear
    if linear is None:
        return clipped

    w, bound = linear.weights, linear.bound
    if np.dot(w, clipped) >= bound:
        return clipped

    def shortfall(nu):
        return float(np.dot(w, np.clip(point + nu * w, lo, hi))) - bound

    # Past this multiplier every coordinate with a nonzero weight sits at the bound it is pushed towards.
    active = w != 0
    targets = np.where(w > 0, hi, lo)
    nu_max = max(float(np.max((targets[active] - point[active]) / w[active])), 0.0)
    if shortfall(nu_max) < 0:
        return np.clip(point + nu_max * w, lo, hi)
    nu = brentq(shortfall, 0.0, nu_max, xtol=1e-15, rtol=1e-15)
    return np.clip(point + nu * w, lo, hi)


def _basket_arrays(basket):
    if not basket:
        raise InvalidInputError("cannot price an empty basket")
    prev = np.array([item.prev_price for item in basket], dtype=float)
    forecasts = np.array([item.forecast for item in basket], dtype=float)
    gammas = np.array([item.elasticity if item.elasticity is not None else np.nan for item in basket], dtype=float)
    if np.any(~(gammas < 0)):
        raise InvalidInputError("every item needs a negative elasticity")
    if np.any(~(forecasts > 0)):
        raise InvalidInputError("every item needs a positive forecast; leave low-forecast items out of the basket")
    return prev, forecasts, gammas


def kkt_residual(prices, basket, constraints):
    """Largest entry of the projected gradient at prices, L * |p - proj(p + grad / L)|. Zero exactly at the optimum."""

    prev, forecasts, gammas = _basket_arrays(basket)
    a, b = revenue_coefficients(prev, forecasts, gammas)
    lipschitz = float(np.max(np.abs(2.0 * a)))
    prices = np.asarray(prices, dtype=float)
    moved = project(prices + (2.0 * a * prices + b) / lipschitz, constraints, prev)
    return float(np.max(np.abs(moved - prices)) * lipschitz)


def solve(basket, constraints, max_iter=MAX_ITERATIONS, tol=STEP_TOL, record_trace=False):
    """Prices maximizing the linearized basket revenue over the constraint set. Items must carry negative elasticities and
    positive forecasts."""

    prev, forecasts, gammas = _basket_arrays(basket)
    if len(constraints) != len(basket):
        raise InvalidInputError(f"constraint set covers {len(constraints)} items, basket has {len(basket)}")

    a, b = revenue_coefficients(prev, forecasts, gammas)

    def objective(p):
        return basket_revenue(p, prev, forecasts, gammas)

    lo, hi = constraints.check_feasible(prev)
    prices = np.clip(prev * (gammas - 1.0) / (2.0 * gammas), lo, hi)
    if constraints.basket_linear is None:
        value = objective(prices)
        return MaxRevSolution(prices, value, 0, True, [value] if record_trace else [])

    lipschitz = float(np.max(np.abs(2.0 * a)))
    prices = project(prices, constraints, prev)
    trace = [objective(prices)] if record_trace else []
    converged = False
    iterations = 0

    while iterations < max_iter:
        iterations += 1
        stepped = project(prices + (2.0 * a * prices + b) / lipschitz, constraints, prev)
        displacement = float(np.linalg.norm(stepped - prices))
        prices = stepped
        if record_trace:
            trace.append(objective(prices))
        if displacement <= tol * (1.0 + float(np.linalg.norm(prices))):
            converged = True
            break

    if not converged:
        logger.warning("projected gradient ascent hit %d iterations without settling", max_iter)
    return MaxRevSolution(prices, objective(prices), iterations, converged, trace)
