"""This file contains the passive elasticity estimators. Both regress (demand - forecast) on forecast * (price - prev_price) /
prev_price through the origin, since the linearized demand model fixes the intercept at the forecast."""

import logging
import warnings

import numpy as np
from scipy.stats import median_abs_deviation

from models.errors import InestimableElasticityError, InsufficientDataError

logger = logging.getLogger(__name__)

ELASTICITY_BOUNDS = (-10.0, -0.1)
HUBER_TUNING = 1.345
MIN_HUBER_DELTA = 1e-10


class RobustFitWarning(RuntimeWarning):
    """Iteratively reweighted least squares stopped at its iteration cap before the slope settled."""


def _regression_data(data):
    if len(data) < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {len(data)}")
    if data.distinct_prices() < 2:
        raise InestimableElasticityError("all prices in the window are identical")

    x, y = data.design()
    if not np.dot(x, x) > 0:
        raise InestimableElasticityError("the price changes in the window carry no information")
    return x, y


def _weighted_slope(x, y, weights):
    return float(np.dot(weights * x, y) / np.dot(weights * x, x))


def clamp_elasticity(gamma, bounds=ELASTICITY_BOUNDS):
    """Clip into the admissible interval, which keeps the downstream revenue problem concave and bounded."""
    low, high = bounds
    return float(min(max(gamma, low), high))


def estimate_ols(data, bounds=ELASTICITY_BOUNDS):
    """Least squares slope, clamped to bounds."""

    x, y = _regression_data(data)
    return clamp_elasticity(_weighted_slope(x, y, np.ones_like(x)), bounds)


def huber_delta_for(residuals):
    """1.345 times the normal-consistent median absolute deviation of the residuals."""
    scale = median_abs_deviation(residuals, scale="normal")
    return max(HUBER_TUNING * float(scale), MIN_HUBER_DELTA)


def estimate_rls(data, huber_delta=None, bounds=ELASTICITY_BOUNDS, tol=1e-8, max_iter=100):
    """Huber-loss slope via iteratively reweighted least squares, started from the least squares fit. When huber_delta is not
    given it is set from the least squares residuals. Emits a RobustFitWarning and returns the last iterate if the slope
    has not settled after max_iter rounds."""

    x, y = _regression_data(data)
    slope = _weighted_slope(x, y, np.ones_like(x))
    delta = huber_delta_for(y - slope * x) if huber_delta is None else float(huber_delta)

    for _ in range(max_iter):
        residuals = np.abs(y - slope * x)
        weights = np.where(residuals <= delta, 1.0, delta / np.maximum(residuals, delta))
        new_slope = _weighted_slope(x, y, weights)
        if abs(new_slope - slope) < tol:
            return clamp_elasticity(new_slope, bounds)
        slope = new_slope

    warnings.warn(f"robust elasticity fit did not converge in {max_iter} iterations", RobustFitWarning, stacklevel=2)
    logger.warning("robust elasticity fit stopped at slope %.6g after %d iterations", slope, max_iter)
    return clamp_elasticity(slope, bounds)


def estimate(data, estimator="ols", huber_delta=None):
    """Dispatches to estimate_ols or estimate_rls by name."""

    if estimator == "rls":
        return estimate_rls(data, huber_delta)
    return estimate_ols(data)
