"""This file contains the two pricing policies the simulator can run, Max-Rev-Passive and Max-Rev-TS. A policy only ever sees
yesterday's prices, today's forecasts and the records of what happened; the true elasticities stay inside the simulator."""

import logging
from dataclasses import dataclass, replace

import numpy as np

from helpers.demand_helpers import likelihood_features
from helpers.elasticity_helpers import estimate
from helpers.maxrev_helpers import solve
from helpers.thompson_helpers import (
    fallback_elasticities,
    floored_noise_var,
    init_posterior,
    posterior_update,
    sample_elasticities,
)
from models.dataset import FORECAST_FLOOR, ElasticityDataset
from models.errors import InestimableElasticityError, InsufficientDataError, InvalidInputError, RejectionLimitError
from models.item import ItemState
from models.market import PASSIVE, TS

logger = logging.getLogger(__name__)


@dataclass
class PricingDecision:
    prices: np.ndarray
    sampled_gamma: np.ndarray = None
    ts_mask: np.ndarray = None


def partition_masks(fixed_mask, forecasts, forecast_threshold):
    """Splits a basket into (fixed, passive_only, ts_eligible) boolean masks: flagged items are fixed whatever their
    forecast, unflagged items forecast below the threshold are priced passively, the rest may go on Thompson sampling."""

    if forecast_threshold < 0:
        raise InvalidInputError(f"forecast threshold must be nonnegative, got {forecast_threshold}")
    fixed = np.asarray(fixed_mask, dtype=bool)
    forecasts = np.asarray(forecasts, dtype=float)
    passive_only = ~fixed & (forecasts < forecast_threshold)
    return fixed, passive_only, ~fixed & ~passive_only


def partition_basket(items, forecast_threshold):
    """Same split as partition_masks for a list of Item objects: returns the lists (fixed, passive_only, ts_eligible)."""

    fixed, passive_only, eligible = partition_masks(
        [item.fixed_price for item in items], [item.forecast for item in items], forecast_threshold
    )
    return (
        [item for item, flag in zip(items, fixed) if flag],
        [item for item, flag in zip(items, passive_only) if flag],
        [item for item, flag in zip(items, eligible) if flag],
    )


def _solve_priceable(prev_prices, forecasts, elasticities, priceable, constraints):
    """Runs Max-Rev on the priceable items; the others keep yesterday's price."""

    prices = prev_prices.copy()
    if not priceable.any():
        return prices
    basket = ItemState.create_basket(
        prev_prices[priceable], forecasts[priceable], elasticities[priceable], np.flatnonzero(priceable)
    )
    prices[priceable] = solve(basket, constraints.restrict(priceable, prev_prices)).prices
    return prices


class PassivePolicy:
    """Max-Rev-Passive: re-estimate each item's elasticity from its own trailing window, then solve Max-Rev with the
    estimates. Items whose window cannot identify a slope keep their previous estimate."""

    tag = PASSIVE

    def __init__(self, config, constraints, fixed_mask):
        self.config = config
        self.constraints = constraints
        self.fixed_mask = np.asarray(fixed_mask, dtype=bool)
        size = self.fixed_mask.shape[0]
        self.estimates = np.full(size, config.initial_elasticity)
        self.datasets = [ElasticityDataset(window=config.window) for _ in range(size)]
        self._last_prev = None

    def priceable(self, forecasts):
        return ~self.fixed_mask & (forecasts > FORECAST_FLOOR)

    def price(self, day, prev_prices, forecasts):
        self._last_prev = prev_prices.copy()
        prices = _solve_priceable(prev_prices, forecasts, self.estimates, self.priceable(forecasts), self.constraints)
        return PricingDecision(prices)

    def observe(self, record):
        for index in np.flatnonzero(~self.fixed_mask):
            added = self.datasets[index].add_row(
                self._last_prev[index], record.forecasts[index], record.prices[index], record.demands[index]
            )
            if not added:
                continue
            try:
                self.estimates[index] = estimate(self.datasets[index], self.config.estimator, self.config.huber_delta)
            except (InsufficientDataError, InestimableElasticityError) as exc:
                logger.debug("item %d keeps elasticity %.4g: %s", index, self.estimates[index], exc)


class ThompsonPolicy:
    """Max-Rev-TS. Each day the basket is partitioned: fixed items keep their price, low-forecast items use passive estimates,
    and the rest use elasticities sampled from the posterior. The day's revenue, minus the passive items' predicted share,
    updates the posterior for the sampled items. Observations are buffered and folded in every update_period days."""

    tag = TS

    def __init__(self, config, passive_config, constraints, fixed_mask, rng):
        self.config = config
        self.constraints = constraints
        self.rng = rng
        self.passive = PassivePolicy(passive_config, constraints, fixed_mask)
        self.posterior = init_posterior(config, self.passive.fixed_mask.shape[0])
        self.revenues = []
        self.pending = []
        self._last = None

    def price(self, day, prev_prices, forecasts):
        self.passive._last_prev = prev_prices.copy()
        priceable = self.passive.priceable(forecasts)
        _, _, eligible = partition_masks(self.passive.fixed_mask, forecasts, self.config.forecast_threshold)
        ts_mask = priceable & eligible & (day > self.config.warmup_days)

        sampled = None
        elasticities = self.passive.estimates
        if ts_mask.any():
            try:
                sampled = sample_elasticities(self.posterior, self.rng, self.config.max_rejections)
            except RejectionLimitError as exc:
                logger.warning("day %d: %s; pricing with the clipped posterior mean", day, exc)
                sampled = fallback_elasticities(self.posterior)
            elasticities = np.where(ts_mask, sampled, self.passive.estimates)

        prices = _solve_priceable(prev_prices, forecasts, elasticities, priceable, self.constraints)
        self._last = (prev_prices.copy(), ts_mask, priceable & ~ts_mask, np.array(elasticities))
        return PricingDecision(prices, sampled, ts_mask)

    def observe(self, record):
        prev_prices, ts_mask, passive_items, elasticities = self._last
        self.passive.observe(record)
        self.revenues.append(record.basket_revenue)

        if ts_mask.any():
            basket = ItemState.create_basket(prev_prices, record.forecasts)
            features = likelihood_features(basket, record.prices)
            passive_share = float(np.dot(elasticities[passive_items], features.theta[passive_items]))
            self.pending.append((features.masked(ts_mask), record.basket_revenue - passive_share))

        if record.day % self.config.update_period == 0:
            self._apply_pending()

    def _apply_pending(self):
        if not self.pending:
            return
        if self.config.noise_var is None:
            if len(self.revenues) < 2:
                return
            self.posterior = replace(self.posterior, noise_var=floored_noise_var(self.revenues))
        for features, revenue in self.pending:
            self.posterior = posterior_update(self.posterior, features, revenue)
        self.pending.clear()


def create_policy(tag, spec, market, rng):
    """Builds the policy named by tag for one trial of the market."""

    constraints = market.config.create_constraints()
    if tag == PASSIVE:
        return PassivePolicy(spec.passive, constraints, market.fixed_mask)
    if tag == TS:
        return ThompsonPolicy(spec.ts, spec.passive, constraints, market.fixed_mask, rng)
    raise InvalidInputError(f"unknown policy {tag!r}")
