"""This file contains the models describing a whole experiment: the passive estimator settings and the ExperimentSpec the
CLI reads from a spec file."""

from dataclasses import dataclass, field

from models.errors import InvalidInputError
from models.market import POLICIES, MarketConfig
from models.posterior import TSConfig

ESTIMATORS = ("ols", "rls")
DEFAULT_REPORT_KS = (5, 10, 15, 20, 25, 30)


@dataclass(frozen=True)
class PassiveConfig:
    """How Max-Rev-Passive estimates elasticities: which regression, over how many trailing days, starting from which guess."""

    estimator: str = "ols"
    window: int = 60
    initial_elasticity: float = -1.5
    huber_delta: float = None

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise InvalidInputError(f"estimator must be one of {', '.join(ESTIMATORS)}")
        if self.window < 2:
            raise InvalidInputError("window must be at least 2 days")
        if not self.initial_elasticity < 0:
            raise InvalidInputError("initial_elasticity must be negative")
        if self.huber_delta is not None and not self.huber_delta > 0:
            raise InvalidInputError("huber_delta must be positive")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a simulation run. window_start is the first day of the comparison window (None means
    the second half of the horizon)."""

    market: MarketConfig = field(default_factory=MarketConfig)
    ts: TSConfig = field(default_factory=TSConfig)
    passive: PassiveConfig = field(default_factory=PassiveConfig)
    trials: int = 10
    policies: tuple = POLICIES
    output_dir: str = "results"
    report_ks: tuple = DEFAULT_REPORT_KS
    seed: int = 0
    workers: int = 1
    window_start: int = None
    baseline_days: int = 30

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be ≥ 1")
        if not self.policies or any(policy not in POLICIES for policy in self.policies):
            raise InvalidInputError(f"policies must be a nonempty subset of {', '.join(POLICIES)}")
        if any(k < 1 for k in self.report_ks) or list(self.report_ks) != sorted(set(self.report_ks)):
            raise InvalidInputError("report_ks must be positive and strictly ascending")
        if self.workers < 1:
            raise InvalidInputError("workers must be at least 1")
        if self.window_start is not None and not 1 <= self.window_start <= self.market.horizon:
            raise InvalidInputError("window_start must be a day of the horizon")

    def comparison_window(self):
        """Inclusive (first, last) day range the policies are compared over."""
        start = self.window_start if self.window_start is not None else self.market.horizon // 2 + 1
        return start, self.market.horizon
