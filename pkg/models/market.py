"""This file contains all the models that have to do with the synthetic market: its settings, the hidden per-trial draw, and
the day-by-day observations a pricing policy produces in it."""

from dataclasses import dataclass, field
import math

import numpy as np

from models.constraints import ConstraintSet
from models.errors import InvalidInputError

PASSIVE = "passive"
TS = "ts"
POLICIES = (TS, PASSIVE)


@dataclass(frozen=True)
class MarketConfig:
    """Settings of the synthetic market. Elasticities are drawn uniformly from [gamma_low, gamma_high] per item, day-one
    forecasts uniformly from [forecast_low, forecast_high]; every price lives in [price_low, price_high]."""

    basket_size: int = 100
    horizon: int = 100
    gamma_low: float = -3.0
    gamma_high: float = -1.0
    initial_price: float = 12.0
    forecast_low: float = 0.5
    forecast_high: float = 5.0
    price_low: float = 10.0
    price_high: float = 20.0
    decay: float = 0.5
    base: float = 0.5
    noise_std: float = 1.0
    fixed_fraction: float = 0.0
    max_rel_change: float = None

    def __post_init__(self):
        if self.basket_size < 1 or self.horizon < 1:
            raise InvalidInputError("basket_size and horizon must be at least 1")
        if not self.gamma_low <= self.gamma_high < 0:
            raise InvalidInputError("elasticity range must satisfy gamma_low <= gamma_high < 0")
        if not 0 < self.price_low <= self.price_high:
            raise InvalidInputError("price box must satisfy 0 < price_low <= price_high")
        if not self.price_low <= self.initial_price <= self.price_high:
            raise InvalidInputError("initial_price must lie inside the price box")
        if not 0 <= self.forecast_low <= self.forecast_high:
            raise InvalidInputError("forecast range must satisfy 0 <= forecast_low <= forecast_high")
        if not 0 < self.decay < 1:
            raise InvalidInputError("decay must lie in (0, 1)")
        if not self.base > 0:
            raise InvalidInputError("base must be positive")
        if not self.noise_std >= 0:
            raise InvalidInputError("noise_std must be nonnegative")
        if not 0 <= self.fixed_fraction <= 1:
            raise InvalidInputError("fixed_fraction must lie in [0, 1]")
        if self.max_rel_change is not None and not self.max_rel_change >= 0:
            raise InvalidInputError("max_rel_change must be nonnegative")

    def create_constraints(self):
        """The price region every day of the synthetic market: the same box for each item, plus the daily change limit."""
        return ConstraintSet.create_uniform(self.basket_size, self.price_low, self.price_high, self.max_rel_change)


@dataclass(frozen=True, eq=False)
class SyntheticMarket:
    """One trial's hidden draw, shared by every policy run in that trial. Only the simulator reads gamma_true."""

    config: MarketConfig
    gamma_true: np.ndarray
    initial_forecasts: np.ndarray
    fixed_mask: np.ndarray

    @classmethod
    def create_market(cls, config, rng):
        """Draws elasticities, day-one forecasts and the fixed-price flags."""

        size = config.basket_size
        gamma_true = rng.uniform(config.gamma_low, config.gamma_high, size)
        initial_forecasts = rng.uniform(config.forecast_low, config.forecast_high, size)
        fixed_mask = np.zeros(size, dtype=bool)
        fixed_mask[rng.permutation(size)[: int(round(config.fixed_fraction * size))]] = True
        return cls(config, gamma_true, initial_forecasts, fixed_mask)


@dataclass(eq=False)
class ObservationRecord:
    """What one policy did on one day and what the market answered."""

    trial: int
    day: int
    policy: str
    prices: np.ndarray
    forecasts: np.ndarray
    demands: np.ndarray
    basket_revenue: float
    sampled_gamma: np.ndarray = None
    ts_mask: np.ndarray = None

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.forecasts = np.asarray(self.forecasts, dtype=float)
        self.demands = np.asarray(self.demands, dtype=float)
        if self.sampled_gamma is not None:
            self.sampled_gamma = np.asarray(self.sampled_gamma, dtype=float)
        if self.ts_mask is not None:
            self.ts_mask = np.asarray(self.ts_mask, dtype=bool)

        if not self.prices.shape == self.forecasts.shape == self.demands.shape:
            raise InvalidInputError("prices, forecasts and demands must have the same length")
        if np.any(self.demands < 0):
            raise InvalidInputError("demands must be nonnegative")
        expected = float(np.dot(self.prices, self.demands))
        if not math.isclose(self.basket_revenue, expected, rel_tol=1e-9, abs_tol=1e-9):
            raise InvalidInputError(f"basket revenue {self.basket_revenue} does not match prices . demands = {expected}")

    @property
    def item_revenue(self):
        return self.prices * self.demands

    def to_dict(self):
        return {
            "trial": self.trial,
            "policy": self.policy,
            "day": self.day,
            "basket_revenue": float(self.basket_revenue),
            "prices": self.prices.tolist(),
            "forecasts": self.forecasts.tolist(),
            "demands": self.demands.tolist(),
            "sampled_gamma": None if self.sampled_gamma is None else self.sampled_gamma.tolist(),
            "ts_mask": None if self.ts_mask is None else self.ts_mask.tolist(),
        }

    @classmethod
    def from_dict(cls, record):
        return cls(
            trial=int(record["trial"]),
            day=int(record["day"]),
            policy=record["policy"],
            prices=record["prices"],
            forecasts=record["forecasts"],
            demands=record["demands"],
            basket_revenue=float(record["basket_revenue"]),
            sampled_gamma=record.get("sampled_gamma"),
            ts_mask=record.get("ts_mask"),
        )


@dataclass(eq=False)
class TrialResult:
    """Revenue series of one policy in one trial, with the records it came from."""

    trial_id: int
    policy: str
    revenue_series: np.ndarray
    records: list = field(default_factory=list)

    def __post_init__(self):
        self.revenue_series = np.asarray(self.revenue_series, dtype=float)
        if self.records and not np.array_equal(self.revenue_series, [record.basket_revenue for record in self.records]):
            raise InvalidInputError("revenue series does not match the records")

    @classmethod
    def from_records(cls, trial_id, policy, records):
        return cls(trial_id, policy, np.array([record.basket_revenue for record in records]), list(records))
