"""This file contains the models produced by the evaluation helpers: per-item revenue deltas, Wald test results, the per-k rows
of a report table and the summary of a policy comparison."""

from dataclasses import dataclass, field
import math

import numpy as np

from models.errors import InvalidInputError

# Ways of averaging an item's revenue over the treatment window.
TS_DAYS = "ts_days"
WHOLE_PERIOD = "whole_period"
DELTA_VARIANTS = (TS_DAYS, WHOLE_PERIOD)

# Row statuses of a Wald table.
OK = "ok"
EMPTY_SET = "empty set"
INSUFFICIENT = "insufficient"
DEGENERATE = "degenerate"
NO_BASELINE = "no baseline"


def _float_or_none(value):
    return None if value is None or not math.isfinite(value) else float(value)


@dataclass(frozen=True)
class DeltaSample:
    """delta = mean revenue in the treatment window - mean revenue in the baseline window, for one item."""

    item_id: object
    delta: float
    days_on_treatment: int

    def __post_init__(self):
        if self.days_on_treatment < 0:
            raise InvalidInputError("days_on_treatment must be nonnegative")


@dataclass(frozen=True)
class WaldResult:
    n: int
    statistic: float
    p_value: float
    mean_delta: float

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("a Wald test needs at least 2 samples")
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidInputError(f"p-value must lie in [0, 1], got {self.p_value}")

    def significant(self, alpha=0.05):
        return self.p_value < alpha

    def to_dict(self):
        return {
            "n": self.n,
            "statistic": _float_or_none(self.statistic),
            "p_value": float(self.p_value),
            "mean_delta": float(self.mean_delta),
        }


@dataclass(frozen=True)
class WaldRow:
    """One row of a per-k report table. items is |S_k|. Test fields are None unless status is "ok"."""

    k: int
    variant: str
    items: int
    status: str
    statistic: float = None
    p_value: float = None
    mean_delta: float = None

    def to_dict(self):
        return {
            "k": self.k,
            "variant": self.variant,
            "items": self.items,
            "statistic": _float_or_none(self.statistic),
            "p_value": _float_or_none(self.p_value),
            "mean_delta": _float_or_none(self.mean_delta),
            "status": self.status,
        }


@dataclass(eq=False)
class PolicyComparison:
    """Cross-trial comparison of a treatment policy with a control over an inclusive day window.

    daily_mean and daily_std map each policy to its per-day revenue statistics across trials (the figure data), window_means
    maps each policy to its per-trial mean revenue over the window, and differences holds the paired per-trial
    treatment - control differences the Wald test runs on. wald is None when fewer than two trials exist."""

    window: tuple
    treatment: str
    control: str
    daily_mean: dict = field(default_factory=dict)
    daily_std: dict = field(default_factory=dict)
    window_means: dict = field(default_factory=dict)
    differences: np.ndarray = None
    wald: WaldResult = None
    status: str = OK

    @property
    def mean_difference(self):
        return float(np.mean(self.differences))

    def to_dict(self):
        return {
            "window": list(self.window),
            "treatment": self.treatment,
            "control": self.control,
            "trials": int(self.differences.shape[0]),
            "policies": {
                tag: {
                    "window_mean": float(np.mean(means)),
                    "window_std": float(np.std(means, ddof=1)) if means.shape[0] > 1 else None,
                }
                for tag, means in self.window_means.items()
            },
            "mean_difference": self.mean_difference,
            "wald": None if self.wald is None else self.wald.to_dict(),
            "status": self.status,
        }
