"""Tests for the passive elasticity estimators and the trailing-window dataset they work on."""

# To run these tests:
#
# python3 -m unittest tests/tests_elasticity.py

import warnings
from unittest import TestCase

import numpy as np

from helpers.elasticity_helpers import (
  ELASTICITY_BOUNDS,
  RobustFitWarning,
  clamp_elasticity,
  estimate,
  estimate_ols,
  estimate_rls,
  huber_delta_for,
)
from models.dataset import ElasticityDataset
from models.errors import InestimableElasticityError, InsufficientDataError, InvalidInputError


def linear_rows(gamma, prices, prev=10.0, forecast=10.0):
  """Rows that sit exactly on the linearized demand model."""
  return [(prev, forecast, p, forecast + gamma * forecast * (p - prev) / prev) for p in prices]


class DatasetTestCase(TestCase):
  """Test the trailing window."""

  def test_window_keeps_latest_rows(self):
    data = ElasticityDataset.create_dataset(linear_rows(-2, [9, 10, 11, 12]), window=3)
    self.assertEqual(len(data), 3)
    self.assertEqual([row.price for row in data.rows], [10, 11, 12])

  def test_zero_forecast_rows_dropped(self):
    data = ElasticityDataset(window=5)
    self.assertFalse(data.add_row(10, 0.0, 11, 0))
    self.assertTrue(data.add_row(10, 1.0, 11, 0.8))
    self.assertEqual(len(data), 1)

  def test_design(self):
    data = ElasticityDataset.create_dataset([(10, 10, 11, 8)])
    x, y = data.design()
    np.testing.assert_allclose(x, [1.0])
    np.testing.assert_allclose(y, [-2.0])

  def test_bad_price(self):
    with self.assertRaises(InvalidInputError):
      ElasticityDataset().add_row(0, 1, 10, 1)


class OLSTestCase(TestCase):
  """Test the least squares estimator."""

  def test_two_points(self):
    data = ElasticityDataset.create_dataset([(10, 10, 10, 10), (10, 10, 11, 8)])
    self.assertAlmostEqual(estimate_ols(data), -2.0, places=12)

  def test_symmetric_noise_cancels(self):
    rows = linear_rows(-1, [8, 12])
    rows[0] = (rows[0][0], rows[0][1], rows[0][2], rows[0][3] + 0.5)
    rows[1] = (rows[1][0], rows[1][1], rows[1][2], rows[1][3] + 0.5)
    data = ElasticityDataset.create_dataset(rows)
    x, y = data.design()
    oracle = np.linalg.lstsq(x[:, None], y, rcond=None)[0][0]
    self.assertAlmostEqual(estimate_ols(data), -1.0, places=12)
    self.assertAlmostEqual(estimate_ols(data), oracle, places=12)

  def test_noiseless_recovery(self):
    rng = np.random.default_rng(4)
    for _ in range(200):
      gamma = float(rng.uniform(-9.5, -0.2))
      rows = []
      for _ in range(50):
        prev, forecast, price = rng.uniform(5, 20), rng.uniform(0.5, 10), rng.uniform(5, 20)
        rows.append((prev, forecast, price, forecast + gamma * forecast * (price - prev) / prev))
      self.assertAlmostEqual(estimate_ols(ElasticityDataset.create_dataset(rows)), gamma, delta=1e-9)

  def test_scaling_demand_and_forecast(self):
    rng = np.random.default_rng(6)
    rows = [
      (prev, forecast, price, max(0.0, forecast - 1.8 * forecast * (price - prev) / prev + rng.normal(0, 0.5)))
      for prev, forecast, price in zip(rng.uniform(8, 14, 40), rng.uniform(1, 6, 40), rng.uniform(8, 14, 40))
    ]
    original = estimate_ols(ElasticityDataset.create_dataset(rows))
    for c in (0.01, 7.0, 1000.0):
      scaled = [(prev, c * forecast, price, c * demand) for prev, forecast, price, demand in rows]
      self.assertAlmostEqual(estimate_ols(ElasticityDataset.create_dataset(scaled)), original, places=9)

  def test_identical_prices(self):
    data = ElasticityDataset.create_dataset([(10, 10, 12, 8), (10, 10, 12, 7)])
    with self.assertRaises(InestimableElasticityError):
      estimate_ols(data)

  def test_too_few_rows(self):
    with self.assertRaises(InsufficientDataError):
      estimate_ols(ElasticityDataset.create_dataset([(10, 10, 11, 8)]))

  def test_clamped(self):
    data = ElasticityDataset.create_dataset(linear_rows(-20, [9, 11]))
    self.assertEqual(estimate_ols(data), ELASTICITY_BOUNDS[0])
    data = ElasticityDataset.create_dataset(linear_rows(0.5, [9, 11]))
    self.assertEqual(estimate_ols(data), ELASTICITY_BOUNDS[1])

  def test_clamp_elasticity(self):
    self.assertEqual(clamp_elasticity(-2.5), -2.5)
    self.assertEqual(clamp_elasticity(3.0), -0.1)
    self.assertEqual(clamp_elasticity(-50.0), -10.0)


class RLSTestCase(TestCase):
  """Test the Huber-loss estimator."""

  def setUp(self):
    self.prices = [5.0 + 0.5 * step for step in range(20)]

  def test_matches_ols_on_clean_data(self):
    data = ElasticityDataset.create_dataset(linear_rows(-2, self.prices))
    self.assertAlmostEqual(estimate_rls(data), estimate_ols(data), delta=1e-6)

  def test_resists_outlier(self):
    rows = linear_rows(-2, self.prices)
    rows.append((10.0, 10.0, 10.5, 90.0))
    data = ElasticityDataset.create_dataset(rows)
    ols = estimate_ols(data)
    rls = estimate_rls(data)
    self.assertLess(abs(rls + 2), abs(ols + 2))
    self.assertAlmostEqual(ols, -1.7586, places=3)

  def test_explicit_delta(self):
    rows = linear_rows(-2, self.prices)
    rows.append((10.0, 10.0, 10.5, 90.0))
    data = ElasticityDataset.create_dataset(rows)
    self.assertLess(abs(estimate_rls(data, huber_delta=0.5) + 2), abs(estimate_ols(data) + 2))

  def test_identical_prices(self):
    data = ElasticityDataset.create_dataset([(10, 10, 12, 8)] * 5)
    with self.assertRaises(InestimableElasticityError):
      estimate_rls(data)

  def test_warns_without_convergence(self):
    rows = linear_rows(-2, self.prices)
    rows.append((10.0, 10.0, 10.5, 90.0))
    data = ElasticityDataset.create_dataset(rows)
    with warnings.catch_warnings(record=True) as caught:
      warnings.simplefilter("always")
      gamma = estimate_rls(data, tol=0.0, max_iter=1)
    self.assertTrue(any(issubclass(warning.category, RobustFitWarning) for warning in caught))
    self.assertTrue(ELASTICITY_BOUNDS[0] <= gamma <= ELASTICITY_BOUNDS[1])

  def test_huber_delta_floor(self):
    self.assertGreater(huber_delta_for(np.zeros(5)), 0)

  def test_dispatch(self):
    data = ElasticityDataset.create_dataset(linear_rows(-2, self.prices))
    self.assertAlmostEqual(estimate(data, "ols"), -2.0, places=10)
    self.assertAlmostEqual(estimate(data, "rls"), -2.0, places=6)
