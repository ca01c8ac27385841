"""Tests for the Max-Rev solver: the closed-form optimum, the projection onto the feasible region, the constraint set and the
solver itself against brute-force grids."""

# To run these tests:
#
# python3 -m unittest tests/tests_maxrev.py

from unittest import TestCase

import numpy as np

from helpers.demand_helpers import revenue_coefficients, revenue_item
from helpers.maxrev_helpers import kkt_residual, project, solve, unconstrained_optimum
from models.constraints import BasketLinearConstraint, ConstraintSet
from models.errors import InfeasibleConstraintsError, InvalidInputError
from models.item import ItemState


def grid_best(basket, constraints, step=0.01):
  """Brute force over a lattice of the box (upper bounds included), keeping points that satisfy the basket constraint."""

  prev = np.array([item.prev_price for item in basket])
  a, b = revenue_coefficients(prev, [item.forecast for item in basket], [item.elasticity for item in basket])
  lo, hi = constraints.effective_box(prev)
  axes = [np.append(np.arange(low, high, step), high) for low, high in zip(lo, hi)]
  points = np.stack([axis.ravel() for axis in np.meshgrid(*axes, indexing="ij")], axis=1)
  values = (a * points ** 2 + b * points).sum(axis=1)
  if constraints.basket_linear is not None:
    feasible = points @ constraints.basket_linear.weights >= constraints.basket_linear.bound - 1e-12
    values = np.where(feasible, values, -np.inf)
  return float(values.max())


class UnconstrainedOptimumTestCase(TestCase):
  """Test the closed-form optimum of one item."""

  def test_unit_elasticity_keeps_price(self):
    self.assertEqual(unconstrained_optimum(ItemState("a", 12, 3, -1)), 12)

  def test_cubic(self):
    item = ItemState("a", 12, 3, -3)
    self.assertEqual(unconstrained_optimum(item), 8)
    grid = np.arange(6, 18.0005, 1e-3)
    best = grid[np.argmax([revenue_item(item, p) for p in grid])]
    self.assertAlmostEqual(best, 8, places=3)

  def test_quadratic(self):
    item = ItemState("a", 10, 10, -2)
    self.assertEqual(unconstrained_optimum(item), 7.5)
    grid = np.arange(5, 15.0005, 1e-3)
    self.assertTrue(all(revenue_item(item, 7.5) >= revenue_item(item, p) for p in grid))

  def test_needs_elasticity_and_forecast(self):
    with self.assertRaises(InvalidInputError):
      unconstrained_optimum(ItemState("a", 10, 10))
    with self.assertRaises(InvalidInputError):
      unconstrained_optimum(ItemState("a", 10, 0, -2))


class ConstraintSetTestCase(TestCase):
  """Test the feasible region model."""

  def test_bad_box(self):
    with self.assertRaises(InvalidInputError):
      ConstraintSet([10, 5], [20, 4])
    with self.assertRaises(InvalidInputError):
      ConstraintSet([0], [1])

  def test_change_limit_intersects_box(self):
    constraints = ConstraintSet.create_uniform(2, 10, 20, max_rel_change=0.1)
    lo, hi = constraints.effective_box([12, 19])
    np.testing.assert_allclose(lo, [10.8, 17.1])
    np.testing.assert_allclose(hi, [13.2, 20.0])

  def test_empty_range(self):
    constraints = ConstraintSet.create_uniform(1, 10, 20, max_rel_change=0.1)
    with self.assertRaises(InfeasibleConstraintsError):
      constraints.effective_box([30])

  def test_infeasible_basket_constraint(self):
    constraints = ConstraintSet.create_uniform(2, 10, 20, basket_linear=BasketLinearConstraint([1, 1], 41))
    with self.assertRaises(InfeasibleConstraintsError):
      constraints.check_feasible()

  def test_restrict(self):
    constraints = ConstraintSet([1, 2, 3], [10, 20, 30], basket_linear=BasketLinearConstraint([1, 2, 3], 50))
    restricted = constraints.restrict([True, False, True], [5, 6, 7])
    np.testing.assert_allclose(restricted.lower, [1, 3])
    np.testing.assert_allclose(restricted.basket_linear.weights, [1, 3])
    self.assertAlmostEqual(restricted.basket_linear.bound, 38)


class ProjectTestCase(TestCase):
  """Test the projection onto the feasible region."""

  def test_inside_point(self):
    constraints = ConstraintSet.create_uniform(2, 10, 20)
    np.testing.assert_allclose(project([12, 15], constraints), [12, 15])

  def test_clip(self):
    constraints = ConstraintSet.create_uniform(2, 10, 20)
    np.testing.assert_allclose(project([25, 25], constraints), [20, 20])

  def test_halfspace(self):
    constraints = ConstraintSet.create_uniform(2, 10, 20, basket_linear=BasketLinearConstraint([1, 1], 25))
    np.testing.assert_allclose(project([0, 0], constraints), [12.5, 12.5], atol=1e-6)

  def test_halfspace_against_active_sets(self):
    """Enumerate which coordinates sit at a bound; the best feasible candidate is the projection."""

    rng = np.random.default_rng(21)
    for _ in range(100):
      lo = rng.uniform(1, 5, 2)
      hi = lo + rng.uniform(1, 5, 2)
      w = rng.uniform(0.2, 2, 2)
      bound = float(np.dot(w, lo + rng.uniform(0.1, 0.9) * (hi - lo)))
      constraints = ConstraintSet(lo, hi, basket_linear=BasketLinearConstraint(w, bound))
      point = rng.uniform(0, 12, 2)

      candidates = [np.clip(point, lo, hi)]
      for fixed in ({}, {0: lo[0]}, {0: hi[0]}, {1: lo[1]}, {1: hi[1]}):
        free = [i for i in range(2) if i not in fixed]
        candidate = point.copy()
        for i, value in fixed.items():
          candidate[i] = value
        rest = bound - sum(w[i] * candidate[i] for i in fixed)
        nu = (rest - sum(w[i] * point[i] for i in free)) / sum(w[i] ** 2 for i in free)
        for i in free:
          candidate[i] = point[i] + nu * w[i]
        candidates.append(candidate)
      feasible = [c for c in candidates if constraints.contains(c, tol=1e-9)]
      oracle = min(feasible, key=lambda c: np.sum((c - point) ** 2))

      np.testing.assert_allclose(project(point, constraints), oracle, atol=1e-6)


class SolveTestCase(TestCase):
  """Test the solver."""

  def test_clipped_up(self):
    solution = solve([ItemState("a", 10, 10, -2)], ConstraintSet.create_uniform(1, 10, 20))
    np.testing.assert_allclose(solution.prices, [10])
    self.assertAlmostEqual(solution.objective, 100)

  def test_interior(self):
    solution = solve([ItemState("a", 10, 10, -2)], ConstraintSet.create_uniform(1, 5, 20))
    np.testing.assert_allclose(solution.prices, [7.5])
    self.assertAlmostEqual(solution.objective, 112.5)

  def test_basket_constraint(self):
    basket = ItemState.create_basket([10, 10], [10, 10], [-2, -2])
    constraints = ConstraintSet.create_uniform(2, 5, 20, basket_linear=BasketLinearConstraint([1, 1], 25))
    solution = solve(basket, constraints)
    np.testing.assert_allclose(solution.prices, [12.5, 12.5], atol=1e-4)
    self.assertAlmostEqual(solution.objective, 125, places=6)
    self.assertGreaterEqual(solution.objective, grid_best(basket, constraints) - 1e-4)
    self.assertTrue(solution.converged)

  def test_trace_is_nondecreasing(self):
    basket = ItemState.create_basket([10, 12, 9], [3, 5, 1], [-2, -1.5, -3])
    constraints = ConstraintSet.create_uniform(3, 5, 20, basket_linear=BasketLinearConstraint([1, 2, 1], 60))
    solution = solve(basket, constraints, record_trace=True)
    self.assertTrue(np.all(np.diff(solution.objective_trace) >= -1e-12))

  def test_random_baskets_against_grid(self):
    rng = np.random.default_rng(8)
    for case in range(500):
      size = int(rng.integers(1, 4))
      prev = rng.uniform(5, 15, size)
      basket = ItemState.create_basket(prev, rng.uniform(0.5, 5, size), rng.uniform(-3, -0.5, size))
      lo = rng.uniform(4, 10, size)
      hi = lo + (rng.uniform(0.3, 3.0, size) if size < 3 else rng.uniform(0.2, 0.8, size))
      linear = None
      if case % 3 == 1:
        w = rng.uniform(0.5, 2, size)
        linear = BasketLinearConstraint(w, float(np.dot(w, lo + rng.uniform(0.2, 0.8) * (hi - lo))))
      elif case % 3 == 2:
        # Mixed and negative weights: a cap on some prices traded against a floor on others.
        w = rng.uniform(-2, 2, size)
        linear = BasketLinearConstraint(w, float(np.dot(w, lo + rng.uniform(0.2, 0.8, size) * (hi - lo))))
      constraints = ConstraintSet(lo, hi, basket_linear=linear)

      solution = solve(basket, constraints)
      self.assertTrue(constraints.contains(solution.prices))
      self.assertGreaterEqual(solution.objective, grid_best(basket, constraints) - 1e-4)
      self.assertLess(kkt_residual(solution.prices, basket, constraints), 1e-6)

  def test_negative_weights_cap_the_basket(self):
    # -p1 - p2 >= -25 caps the sum at 25; both items want 15 on their own.
    basket = ItemState.create_basket([10, 10], [10, 10], [-0.5, -0.5])
    constraints = ConstraintSet.create_uniform(2, 5, 20, basket_linear=BasketLinearConstraint([-1, -1], -25))
    solution = solve(basket, constraints)
    np.testing.assert_allclose(solution.prices, [12.5, 12.5], atol=1e-6)
    self.assertGreaterEqual(solution.objective, grid_best(basket, constraints) - 1e-4)

  def test_scaling_forecasts_keeps_prices(self):
    rng = np.random.default_rng(12)
    for case in range(50):
      size = int(rng.integers(1, 6))
      prev = rng.uniform(5, 15, size)
      forecasts = rng.uniform(0.5, 5, size)
      gammas = rng.uniform(-3, -0.5, size)
      linear = None
      if case % 2:
        w = rng.uniform(0.5, 2, size)
        linear = BasketLinearConstraint(w, float(np.dot(w, rng.uniform(8, 16, size))))
      constraints = ConstraintSet.create_uniform(size, 5, 20, basket_linear=linear)
      base = solve(ItemState.create_basket(prev, forecasts, gammas), constraints)
      for c in (0.1, 10.0):
        scaled = solve(ItemState.create_basket(prev, c * forecasts, gammas), constraints)
        np.testing.assert_allclose(scaled.prices, base.prices, atol=1e-7)
        self.assertAlmostEqual(scaled.objective, c * base.objective, delta=1e-7 * max(1.0, abs(c * base.objective)))

  def test_change_limit(self):
    solution = solve([ItemState("a", 12, 3, -3)], ConstraintSet.create_uniform(1, 5, 20, max_rel_change=0.1))
    np.testing.assert_allclose(solution.prices, [10.8])

  def test_empty_basket(self):
    with self.assertRaises(InvalidInputError):
      solve([], ConstraintSet.create_uniform(1, 10, 20))

  def test_size_mismatch(self):
    with self.assertRaises(InvalidInputError):
      solve([ItemState("a", 10, 10, -2)], ConstraintSet.create_uniform(2, 10, 20))
