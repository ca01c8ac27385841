"""This file contains the models for the feasible price region of a basket and for the solution of the revenue problem."""

from dataclasses import dataclass, field

import numpy as np

from models.errors import InfeasibleConstraintsError, InvalidInputError

FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BasketLinearConstraint:
    """A single basket-wide constraint weights . p >= bound."""

    weights: np.ndarray
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "bound", float(self.bound))


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """The price region C_t: a box per item, an optional bound on the relative daily change, and at most one basket-wide
    linear inequality. The daily-change bound depends on yesterday's prices, so the methods that need it take prev_prices."""

    lower: np.ndarray
    upper: np.ndarray
    max_rel_change: float = None
    basket_linear: BasketLinearConstraint = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

        if lower.shape != upper.shape or lower.ndim != 1:
            raise InvalidInputError("lower and upper bounds must be vectors of the same length")
        if np.any(~(lower > 0)) or np.any(lower > upper):
            raise InvalidInputError("price bounds must satisfy 0 < lower <= upper for every item")
        if self.max_rel_change is not None and not self.max_rel_change >= 0:
            raise InvalidInputError(f"max_rel_change must be nonnegative, got {self.max_rel_change}")
        if self.basket_linear is not None and self.basket_linear.weights.shape != lower.shape:
            raise InvalidInputError("basket constraint weights must have one entry per item")

    @classmethod
    def create_uniform(cls, size, low, high, max_rel_change=None, basket_linear=None):
        """Same [low, high] box for every item, as in the synthetic market."""
        return cls(np.full(size, float(low)), np.full(size, float(high)), max_rel_change, basket_linear)

    def __len__(self):
        return self.lower.shape[0]

    def effective_box(self, prev_prices=None):
        """Per-item bounds after intersecting the box with the daily-change limit. Raises if any item's range is empty."""

        lo, hi = self.lower, self.upper
        if self.max_rel_change is not None:
            if prev_prices is None:
                raise InvalidInputError("previous prices are needed to apply the daily change limit")
            prev = np.asarray(prev_prices, dtype=float)
            lo = np.maximum(lo, prev * (1.0 - self.max_rel_change))
            hi = np.minimum(hi, prev * (1.0 + self.max_rel_change))
        if np.any(lo > hi):
            items = np.flatnonzero(lo > hi).tolist()
            raise InfeasibleConstraintsError(f"empty price range for items {items}")
        return lo, hi

    def check_feasible(self, prev_prices=None):
        """Raises InfeasibleConstraintsError unless some price vector satisfies every constraint. Returns the effective box."""

        lo, hi = self.effective_box(prev_prices)
        if self.basket_linear is not None:
            w = self.basket_linear.weights
            best = float(np.dot(w, np.where(w > 0, hi, lo)))
            if best < self.basket_linear.bound - FEASIBILITY_TOL:
                raise InfeasibleConstraintsError(
                    f"basket constraint needs weights . p >= {self.basket_linear.bound}, at most {best} is reachable"
                )
        return lo, hi

    def contains(self, prices, prev_prices=None, tol=FEASIBILITY_TOL):
        lo, hi = self.effective_box(prev_prices)
        prices = np.asarray(prices, dtype=float)
        inside = bool(np.all(prices >= lo - tol) and np.all(prices <= hi + tol))
        if inside and self.basket_linear is not None:
            inside = float(np.dot(self.basket_linear.weights, prices)) >= self.basket_linear.bound - tol
        return inside

    def restrict(self, mask, fixed_prices=None):
        """The constraint set seen by the items in mask when every other item keeps fixed_prices. The fixed items' share of the
        basket constraint moves into its bound."""

        mask = np.asarray(mask, dtype=bool)
        linear = None
        if self.basket_linear is not None:
            fixed = np.asarray(fixed_prices, dtype=float)
            w = self.basket_linear.weights
            linear = BasketLinearConstraint(w[mask], self.basket_linear.bound - float(np.dot(w[~mask], fixed[~mask])))
        return ConstraintSet(self.lower[mask], self.upper[mask], self.max_rel_change, linear)


@dataclass
class MaxRevSolution:
    """Prices chosen for a basket and the linearized revenue they are predicted to bring in."""

    prices: np.ndarray
    objective: float
    iterations: int = 0
    converged: bool = True
    objective_trace: list = field(default_factory=list)
