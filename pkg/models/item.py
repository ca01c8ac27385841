"""This file contains all the models that have to do with the items being priced: the catalogue-level Item, the per-day ItemState
the demand model works on, and the LikelihoodFeatures that summarize a day of prices for the Thompson sampling update."""

from dataclasses import dataclass, replace
import math

import numpy as np

from models.errors import InvalidInputError


@dataclass(frozen=True)
class Item:
    """An item in a basket. Holds what the merchant controls: the price it sold at yesterday, the price bounds it may take, and
    whether business rules have fixed its price (promotions, high-visibility consumables and so on)."""

    item_id: object
    prev_price: float
    lower: float
    upper: float
    fixed_price: bool = False
    forecast: float = 0.0

    def __post_init__(self):
        if not self.prev_price > 0:
            raise InvalidInputError(f"item {self.item_id}: previous price must be positive, got {self.prev_price}")
        if not 0 < self.lower <= self.upper:
            raise InvalidInputError(f"item {self.item_id}: price bounds must satisfy 0 < lower <= upper")
        if self.forecast < 0:
            raise InvalidInputError(f"item {self.item_id}: forecast must be nonnegative, got {self.forecast}")


@dataclass(frozen=True)
class ItemState:
    """One item on one day: the price it had yesterday (p_{i,t-1}), today's demand forecast at that price (f_{i,t}) and, when the
    caller has one, a point estimate of its elasticity."""

    item_id: object
    prev_price: float
    forecast: float
    elasticity: float = None

    def __post_init__(self):
        if not self.prev_price > 0:
            raise InvalidInputError(f"item {self.item_id}: previous price must be positive, got {self.prev_price}")
        if not self.forecast >= 0:
            raise InvalidInputError(f"item {self.item_id}: forecast must be nonnegative, got {self.forecast}")
        if self.elasticity is not None and not self.elasticity < 0:
            raise InvalidInputError(f"item {self.item_id}: elasticity must be negative, got {self.elasticity}")

    @classmethod
    def create_basket(cls, prev_prices, forecasts, elasticities=None, item_ids=None):
        """Builds a list of item states out of parallel sequences, the way the simulator and the tests hand baskets around."""

        prev_prices = np.asarray(prev_prices, dtype=float)
        forecasts = np.asarray(forecasts, dtype=float)
        if prev_prices.shape != forecasts.shape:
            raise InvalidInputError("previous prices and forecasts must have the same length")
        if item_ids is None:
            item_ids = range(len(prev_prices))
        if elasticities is None:
            elasticities = [None] * len(prev_prices)

        return [
            cls(item_id, float(prev), float(forecast), None if gamma is None else float(gamma))
            for item_id, prev, forecast, gamma in zip(item_ids, prev_prices, forecasts, elasticities)
        ]

    def with_elasticity(self, elasticity):
        """Same item, different elasticity estimate."""
        return replace(self, elasticity=float(elasticity))


@dataclass(frozen=True)
class LikelihoodFeatures:
    """theta_t and the baseline revenue R-bar_t. For any elasticity vector gamma the linearized basket revenue equals
    gamma . theta + baseline_revenue."""

    theta: np.ndarray
    baseline_revenue: float

    def __post_init__(self):
        if not math.isfinite(self.baseline_revenue):
            raise InvalidInputError("baseline revenue must be finite")

    def predicted_revenue(self, elasticities):
        return float(np.dot(elasticities, self.theta) + self.baseline_revenue)

    def masked(self, mask):
        """Zero out theta outside mask. Used when only part of the basket is on Thompson sampling."""
        return LikelihoodFeatures(np.where(mask, self.theta, 0.0), self.baseline_revenue)
