"""This file contains the model for the reference exponential-decay demand forecaster."""

from dataclasses import dataclass, field

from models.errors import InvalidInputError


@dataclass
class DemandHistory:
    """Realized demands of one item, from first_day onwards with no gaps. running_sum is
    S = sum_tau decay^(last_day + 1 - tau) d_tau, i.e. the decayed part of the forecast for the day after last_day."""

    first_day: int
    demands: list = field(default_factory=list)
    running_sum: float = 0.0

    @property
    def last_day(self):
        return self.first_day + len(self.demands) - 1


@dataclass
class ForecastModel:
    """Forecast f_{i,t} = base + sum_{tau < t} decay^(t - tau) d_{i,tau}. One instance per simulated trial; history maps
    item ids to their DemandHistory."""

    decay: float = 0.5
    base: float = 0.5
    history: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.decay < 1:
            raise InvalidInputError(f"decay must lie in (0, 1), got {self.decay}")
        if not self.base >= 0:
            raise InvalidInputError(f"base must be nonnegative, got {self.base}")
