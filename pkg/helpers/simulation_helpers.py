"""This file contains the synthetic market simulator: the demand draw, the day loop that runs one pricing policy against one
trial's market, and the experiment driver that runs every (trial, policy) pair.

Randomness is split per trial and per purpose from one master seed, so the same seed gives the same results whatever order
or process the trials run in. Both policies of a trial see the same market draw and the same noise streams."""

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from helpers.forecast_helpers import forecast, record_demand
from helpers.policy_helpers import create_policy
from models.errors import InvalidInputError, PricingError, TrialFailedError
from models.forecast import ForecastModel
from models.market import ObservationRecord, SyntheticMarket, TrialResult

logger = logging.getLogger(__name__)

STREAM_PURPOSES = ("market", "forecast_noise", "demand_noise", "policy")


def trial_seeds(seed, trials):
    """One dict of SeedSequences per trial, keyed by purpose. Generators are built from these fresh for every policy run."""

    if trials < 1:
        raise InvalidInputError("trials must be ≥ 1")
    seeds = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        seeds.append(dict(zip(STREAM_PURPOSES, child.spawn(len(STREAM_PURPOSES)))))
    return seeds


def create_streams(seeds):
    return {purpose: np.random.default_rng(sequence) for purpose, sequence in seeds.items()}


def realize_demand(config, index, forecast_value, price, prev_price, rng, gamma):
    """Demand of item index at price: max(f * (price / prev_price) ** gamma + eps, 0) with eps ~ N(0, noise_std^2). gamma is
    the item's true elasticity; policies never call this."""

    if not price > 0 or not prev_price > 0:
        raise InvalidInputError(f"item {index}: prices must be positive, got {price} after {prev_price}")
    noise = rng.normal(0.0, config.noise_std) if config.noise_std > 0 else 0.0
    return max(forecast_value * (price / prev_price) ** gamma + noise, 0.0)


def _day_forecasts(market, model, day, rng):
    if day == 1:
        clean = market.initial_forecasts
    else:
        clean = np.array([forecast(model, index, day) for index in range(market.config.basket_size)])
    noise = rng.normal(0.0, market.config.noise_std, clean.shape[0]) if market.config.noise_std > 0 else 0.0
    return np.maximum(clean + noise, 0.0)


def run_trial(spec, market, policy_tag, seeds, trial=0):
    """Runs one policy for the whole horizon. Each day: forecast, price, realize demand, record, feed back. Any error on a day
    aborts the trial with a TrialFailedError that says which day."""

    config = market.config
    streams = create_streams(seeds)
    policy = create_policy(policy_tag, spec, market, streams["policy"])
    model = ForecastModel(decay=config.decay, base=config.base)
    prev_prices = np.full(config.basket_size, config.initial_price)
    records = []

    logger.info("trial %d: running %s for %d days", trial, policy_tag, config.horizon)
    for day in range(1, config.horizon + 1):
        try:
            forecasts = _day_forecasts(market, model, day, streams["forecast_noise"])
            decision = policy.price(day, prev_prices, forecasts)
            demands = np.array(
                [
                    realize_demand(config, index, forecasts[index], decision.prices[index], prev_prices[index],
                                   streams["demand_noise"], market.gamma_true[index])
                    for index in range(config.basket_size)
                ]
            )
            record = ObservationRecord(
                trial=trial,
                day=day,
                policy=policy_tag,
                prices=decision.prices,
                forecasts=forecasts,
                demands=demands,
                basket_revenue=float(np.dot(decision.prices, demands)),
                sampled_gamma=decision.sampled_gamma,
                ts_mask=decision.ts_mask,
            )
            for index in range(config.basket_size):
                record_demand(model, index, day, demands[index])
            policy.observe(record)
        except PricingError as exc:
            raise TrialFailedError(trial, policy_tag, day, exc) from exc

        records.append(record)
        prev_prices = record.prices

    result = TrialResult.from_records(trial, policy_tag, records)
    logger.info("trial %d: %s done, total revenue %.2f", trial, policy_tag, result.revenue_series.sum())
    return result


def _run_trial_policies(spec, trial, seeds, policies):
    market = SyntheticMarket.create_market(spec.market, np.random.default_rng(seeds["market"]))
    return [run_trial(spec, market, tag, seeds, trial) for tag in policies]


def run_experiment(spec, trials=None, policies=None, workers=None):
    """Runs every policy on every trial and returns the TrialResults ordered by (trial, policy). trials, policies and workers
    default to the spec's own values. With more than one worker the trials are spread over a process pool."""

    trials = spec.trials if trials is None else trials
    policies = tuple(spec.policies if policies is None else policies)
    workers = spec.workers if workers is None else workers
    if not policies:
        raise InvalidInputError("at least one policy is needed")
    if workers < 1:
        raise InvalidInputError("workers must be at least 1")

    seeds = trial_seeds(spec.seed, trials)
    if workers == 1 or trials == 1:
        batches = [_run_trial_policies(spec, trial, seeds[trial], policies) for trial in range(trials)]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            futures = [pool.submit(_run_trial_policies, spec, trial, seeds[trial], policies) for trial in range(trials)]
            batches = [future.result() for future in futures]

    return [result for batch in batches for result in batch]
