"""This file contains the model for the per-item history the passive elasticity estimators regress on."""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from models.errors import InvalidInputError

# Rows whose forecast is at or below this are dropped: the regression variable degenerates when f is ~0.
FORECAST_FLOOR = 1e-6


@dataclass(frozen=True)
class ElasticityRow:
    """One day of one item: yesterday's price, today's forecast at that price, the price charged and the demand observed."""

    prev_price: float
    forecast: float
    price: float
    demand: float


@dataclass
class ElasticityDataset:
    """The most recent `window` rows of one item, oldest first."""

    window: int = 60
    rows: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.window < 1:
            raise InvalidInputError(f"window must be at least 1, got {self.window}")
        self.rows = deque(self.rows, maxlen=self.window)

    @classmethod
    def create_dataset(cls, rows, window=60):
        """Builds a dataset out of (prev_price, forecast, price, demand) tuples, applying the same filtering as add_row."""

        dataset = cls(window=window)
        for row in rows:
            dataset.add_row(*row)
        return dataset

    def add_row(self, prev_price, forecast, price, demand):
        """Adds a day of data. Returns False (and keeps nothing) when the forecast is too small to carry information."""

        if not (prev_price > 0 and price > 0):
            raise InvalidInputError("prices must be positive")
        if forecast <= FORECAST_FLOOR:
            return False
        self.rows.append(ElasticityRow(float(prev_price), float(forecast), float(price), float(demand)))
        return True

    def design(self):
        """Regression variables of the linearized model d - f = gamma * f (p - prev) / prev: returns (x, y)."""

        prev = np.array([row.prev_price for row in self.rows])
        forecasts = np.array([row.forecast for row in self.rows])
        prices = np.array([row.price for row in self.rows])
        demands = np.array([row.demand for row in self.rows])
        return forecasts * (prices - prev) / prev, demands - forecasts

    def distinct_prices(self):
        return len({row.price for row in self.rows})

    def __len__(self):
        return len(self.rows)
