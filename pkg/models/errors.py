"""This file contains the exceptions raised by the pricing engine. They all derive from ValueError, so callers that only catch
ValueError see them too."""

from dataclasses import dataclass


class PricingError(ValueError):
    """Base class for every error raised by the pricing engine."""


class InvalidInputError(PricingError):
    """An argument is out of its domain, e.g. a non-positive price, a negative demand or mismatched vector lengths."""


class DuplicateDayError(PricingError):
    """A demand has already been recorded for this item and day."""


class MissingHistoryError(PricingError):
    """The forecaster was asked about a day whose history is not (yet) recorded."""


class InsufficientDataError(PricingError):
    """Too few observations to estimate a quantity."""


class InestimableElasticityError(PricingError):
    """The regression design has no variance (all prices identical), so the slope is not identified."""


class InfeasibleConstraintsError(PricingError):
    """The feasible price region is empty."""


class RejectionLimitError(PricingError):
    """The rejection sampler gave up before drawing an all-negative elasticity vector."""

    def __init__(self, rejections):
        super().__init__(f"no all-negative elasticity sample after {rejections} rejections")
        self.rejections = rejections

    def __reduce__(self):
        return type(self), (self.rejections,)


class DegenerateSampleError(PricingError):
    """The sample has zero variance, so a Wald statistic is undefined."""


class EmptyEligibleSetError(PricingError):
    """No item was treated at least k times."""


@dataclass(frozen=True)
class FieldProblem:
    """One diagnostic about one key of an experiment spec file."""

    section: str
    key: str
    message: str
    line: int = None

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}[{self.section}] {self.key}: {self.message}"


class SpecError(PricingError):
    """The experiment spec does not parse or does not validate. Carries every problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(str(problem) for problem in self.problems))

    def __reduce__(self):
        return type(self), (self.problems,)


class TrialFailedError(PricingError):
    """A simulated trial aborted. Keeps the trial, policy and day so the CLI can say where it happened."""

    def __init__(self, trial, policy, day, cause):
        super().__init__(f"trial {trial} ({policy}) failed on day {day}: {cause}")
        self.trial = trial
        self.policy = policy
        self.day = day
        self.cause = cause

    # Trials run in worker processes, so the error has to survive pickling with its context.
    def __reduce__(self):
        return type(self), (self.trial, self.policy, self.day, self.cause)
