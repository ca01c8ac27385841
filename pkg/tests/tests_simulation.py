"""Tests for the synthetic market simulator and the two pricing policies it runs: the demand draw, the basket partition, the
day loop, determinism across runs and worker counts, and the TS-versus-passive separation on the default market."""

# To run these tests:
#
# python3 -m unittest tests/tests_simulation.py

from dataclasses import replace
from unittest import TestCase
from unittest.mock import patch

import numpy as np

from helpers.evaluation_helpers import compare_policies
from helpers.policy_helpers import partition_basket, partition_masks
from helpers.simulation_helpers import realize_demand, run_experiment, run_trial, trial_seeds
from models.errors import InfeasibleConstraintsError, InvalidInputError, TrialFailedError
from models.experiment import ExperimentSpec, PassiveConfig
from models.item import Item
from models.market import PASSIVE, TS, MarketConfig, ObservationRecord, SyntheticMarket, TrialResult
from models.posterior import TSConfig


def small_spec(**market):
  settings = dict(basket_size=6, horizon=12)
  settings.update(market)
  return ExperimentSpec(market=MarketConfig(**settings), trials=2, seed=42)


class RealizeDemandTestCase(TestCase):
  """Test the market's demand draw."""

  def test_noiseless_identity(self):
    config = MarketConfig(noise_std=0.0)
    self.assertEqual(realize_demand(config, 0, 4.0, 12.0, 12.0, np.random.default_rng(0), -2.0), 4.0)

  def test_noiseless_unit_elasticity(self):
    config = MarketConfig(noise_std=0.0)
    self.assertAlmostEqual(realize_demand(config, 0, 2.0, 20.0, 10.0, np.random.default_rng(0), -1.0), 1.0)

  def test_clamped_at_zero(self):
    config = MarketConfig(noise_std=100.0)
    rng = np.random.default_rng(0)
    demands = [realize_demand(config, 0, 0.1, 12.0, 12.0, rng, -2.0) for _ in range(200)]
    self.assertEqual(min(demands), 0.0)
    self.assertTrue(all(demand >= 0 for demand in demands))

  def test_seeded(self):
    config = MarketConfig()
    first = realize_demand(config, 0, 3.0, 11.0, 12.0, np.random.default_rng(5), -2.0)
    second = realize_demand(config, 0, 3.0, 11.0, 12.0, np.random.default_rng(5), -2.0)
    self.assertEqual(first, second)

  def test_nonpositive_price(self):
    with self.assertRaises(InvalidInputError):
      realize_demand(MarketConfig(), 0, 3.0, 0.0, 12.0, np.random.default_rng(0), -2.0)


class PartitionTestCase(TestCase):
  """Test the fixed / passive-only / TS-eligible split."""

  def item(self, forecast, fixed=False):
    return Item("sku", prev_price=12, lower=10, upper=20, fixed_price=fixed, forecast=forecast)

  def test_examples(self):
    low, flagged, eligible = self.item(1.5), self.item(50, fixed=True), self.item(3)
    fixed, passive_only, ts_eligible = partition_basket([low, flagged, eligible], 2)
    self.assertEqual(fixed, [flagged])
    self.assertEqual(passive_only, [low])
    self.assertEqual(ts_eligible, [eligible])

  def test_exhaustive_and_disjoint(self):
    rng = np.random.default_rng(0)
    for _ in range(200):
      size = int(rng.integers(0, 30))
      flags = rng.random(size) < 0.3
      forecasts = rng.uniform(0, 5, size)
      fixed, passive_only, eligible = partition_masks(flags, forecasts, float(rng.uniform(0, 4)))
      np.testing.assert_array_equal(fixed.astype(int) + passive_only.astype(int) + eligible.astype(int), np.ones(size))

  def test_negative_threshold(self):
    with self.assertRaises(InvalidInputError):
      partition_masks([False], [1.0], -1)


class MarketModelTestCase(TestCase):
  """Test the market models."""

  def test_config_validation(self):
    with self.assertRaises(InvalidInputError):
      MarketConfig(gamma_high=0.0)
    with self.assertRaises(InvalidInputError):
      MarketConfig(price_low=20, price_high=10)
    with self.assertRaises(InvalidInputError):
      MarketConfig(initial_price=25)
    with self.assertRaises(InvalidInputError):
      MarketConfig(decay=1.0)

  def test_market_draw(self):
    market = SyntheticMarket.create_market(MarketConfig(fixed_fraction=0.25), np.random.default_rng(0))
    self.assertTrue(np.all((market.gamma_true >= -3) & (market.gamma_true <= -1)))
    self.assertTrue(np.all((market.initial_forecasts >= 0.5) & (market.initial_forecasts <= 5)))
    self.assertEqual(int(market.fixed_mask.sum()), 25)

  def test_record_consistency(self):
    with self.assertRaises(InvalidInputError):
      ObservationRecord(0, 1, TS, [10, 12], [1, 1], [2, 3], basket_revenue=1.0)
    with self.assertRaises(InvalidInputError):
      ObservationRecord(0, 1, TS, [10], [1], [-1], basket_revenue=-10.0)
    record = ObservationRecord(0, 1, TS, [10, 12], [1, 1], [2, 3], basket_revenue=56.0)
    self.assertEqual(ObservationRecord.from_dict(record.to_dict()).to_dict(), record.to_dict())

  def test_trial_result_matches_records(self):
    record = ObservationRecord(0, 1, TS, [10], [1], [2], basket_revenue=20.0)
    with self.assertRaises(InvalidInputError):
      TrialResult(0, TS, [21.0], [record])


class RunTrialTestCase(TestCase):
  """Test the day loop."""

  def run_both(self, spec, trial=0):
    seeds = trial_seeds(spec.seed, spec.trials)[trial]
    market = SyntheticMarket.create_market(spec.market, np.random.default_rng(seeds["market"]))
    return market, {tag: run_trial(spec, market, tag, seeds, trial) for tag in (TS, PASSIVE)}

  def test_policies_share_day_one(self):
    spec = small_spec(horizon=1)
    _, results = self.run_both(spec)
    np.testing.assert_array_equal(results[TS].records[0].forecasts, results[PASSIVE].records[0].forecasts)
    self.assertEqual(len(results[TS].revenue_series), 1)

  def test_records_are_consistent(self):
    spec = small_spec()
    _, results = self.run_both(spec)
    for result in results.values():
      self.assertEqual(len(result.records), spec.market.horizon)
      for day, record in enumerate(result.records, start=1):
        self.assertEqual(record.day, day)
        self.assertTrue(np.all(record.demands >= 0))
        self.assertTrue(np.all((record.prices >= 10 - 1e-9) & (record.prices <= 20 + 1e-9)))
        self.assertAlmostEqual(record.basket_revenue, float(np.dot(record.prices, record.demands)), places=9)
      np.testing.assert_array_equal(result.revenue_series, [record.basket_revenue for record in result.records])

  def test_ts_records_sampled_elasticities(self):
    _, results = self.run_both(small_spec())
    self.assertTrue(all(record.sampled_gamma is not None for record in results[TS].records))
    self.assertTrue(all(np.all(record.sampled_gamma < 0) for record in results[TS].records))
    self.assertTrue(all(record.sampled_gamma is None for record in results[PASSIVE].records))

  def test_passive_with_true_elasticity_settles(self):
    spec = replace(
      small_spec(gamma_low=-2.0, gamma_high=-2.0, noise_std=0.0),
      passive=PassiveConfig(initial_elasticity=-2.0),
    )
    _, results = self.run_both(spec)
    prices = np.array([record.prices for record in results[PASSIVE].records])
    np.testing.assert_allclose(prices, 10.0)

  def test_fixed_items_keep_their_price(self):
    _, results = self.run_both(small_spec(fixed_fraction=1.0))
    for result in results.values():
      for record in result.records:
        np.testing.assert_array_equal(record.prices, 12.0)

  def test_forecast_threshold_keeps_low_items_off_ts(self):
    spec = replace(small_spec(basket_size=20), ts=TSConfig(forecast_threshold=2.0))
    _, results = self.run_both(spec)
    for record in results[TS].records:
      self.assertFalse(np.any(record.ts_mask & (record.forecasts < 2.0)))

  def test_warmup_days(self):
    spec = replace(small_spec(), ts=TSConfig(warmup_days=3))
    _, results = self.run_both(spec)
    records = results[TS].records
    self.assertTrue(all(not record.ts_mask.any() for record in records[:3]))
    self.assertTrue(records[3].ts_mask.any())

  def test_failure_names_the_day(self):
    class BrokenPolicy:
      def price(self, day, prev_prices, forecasts):
        raise InfeasibleConstraintsError("empty price range")

    spec = small_spec()
    seeds = trial_seeds(spec.seed, 1)[0]
    market = SyntheticMarket.create_market(spec.market, np.random.default_rng(seeds["market"]))
    with patch("helpers.simulation_helpers.create_policy", return_value=BrokenPolicy()):
      with self.assertRaises(TrialFailedError) as context:
        run_trial(spec, market, TS, seeds, trial=3)
    self.assertEqual((context.exception.trial, context.exception.policy, context.exception.day), (3, TS, 1))


class RunExperimentTestCase(TestCase):
  """Test running every policy on every trial."""

  def test_result_layout(self):
    results = run_experiment(small_spec())
    self.assertEqual([(result.trial_id, result.policy) for result in results], [(0, TS), (0, PASSIVE), (1, TS), (1, PASSIVE)])
    self.assertEqual(len(run_experiment(small_spec(), trials=1, policies=[TS])), 1)

  def test_same_seed_same_results(self):
    first = run_experiment(small_spec())
    second = run_experiment(small_spec())
    for a, b in zip(first, second):
      np.testing.assert_array_equal(a.revenue_series, b.revenue_series)

  def test_trials_differ(self):
    results = run_experiment(small_spec())
    self.assertFalse(np.array_equal(results[0].records[0].forecasts, results[2].records[0].forecasts))

  def test_workers_do_not_change_results(self):
    serial = run_experiment(small_spec(), workers=1)
    parallel = run_experiment(small_spec(), workers=2)
    for a, b in zip(serial, parallel):
      self.assertEqual((a.trial_id, a.policy), (b.trial_id, b.policy))
      np.testing.assert_array_equal(a.revenue_series, b.revenue_series)

  def test_bad_arguments(self):
    with self.assertRaises(InvalidInputError):
      run_experiment(small_spec(), trials=0)
    with self.assertRaises(InvalidInputError):
      run_experiment(small_spec(), policies=[])


class SyntheticSeparationTestCase(TestCase):
  """On the default market (100 items, 100 days, 10 trials) Thompson sampling out-earns passive pricing over days 51-100."""

  def test_ts_beats_passive(self):
    spec = ExperimentSpec(seed=2024)
    results = run_experiment(spec)
    comparison = compare_policies(results, spec.comparison_window())
    self.assertEqual(comparison.window, (51, 100))
    self.assertGreater(comparison.daily_mean[TS][50:].mean(), comparison.daily_mean[PASSIVE][50:].mean())
    self.assertGreater(comparison.mean_difference, 0)
    self.assertLess(comparison.wald.p_value, 0.05)
