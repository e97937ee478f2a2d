import os
import tempfile
import unittest
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy.spatial.distance import cdist

from abr.config import AbrConfig
from abr.factories import AgentFactory
from baselines.config import BaselineConfig
from baselines.losses import td3bc_actor_loss
from core.exceptions import ConfigError, PreconditionError
from core.io import read_csv
from core.seeding import make_rng
from data.dataset import Batch
from data.factories import DatasetFactory
from envs.bandit import BanditEnv
from envs.behavior import default_bandit_behavior
from envs.generation import generate_dataset
from nn.network import Mlp
from .backup import adaptive_weight, bias_bound_check, closed_form_backup, objective_minimizer
from .checks import check_variance, run_oracle_suite
from .diagnostics import gradient_decomposition
from .factories import GridProblemFactory
from .grid import (
    GridProblem, action_grid, behavior_on_grid, penalty_values, random_grid_problem,
    surrogate_values,
)
from .landscape import LANDSCAPE_COLUMNS, landscape, write_landscape
from .variance import expected_variance, mixture_variance, variance_y

RUN_SLOW = os.environ.get('ABR_RUN_SLOW') == '1'


def _cell_problem(density, alpha, backup, surrogate, **kwargs):
    """Single-cell problem on [-1, 1], so u = 0.5."""
    return GridProblem(action_grid(1), [density], [backup], [surrogate], alpha, **kwargs)


class ActionGridTestCase(SimpleTestCase):

    def test_default_grid(self):
        grid = action_grid()
        self.assertEqual(grid.n_bins, 401)
        self.assertAlmostEqual(grid.u * grid.volume, 1.0)
        self.assertTrue(np.allclose(np.diff(grid.centers[:, 0]), 2.0 / 401))

    def test_two_dimensional_grid(self):
        grid = action_grid(11, dim=2)
        self.assertEqual(grid.centers.shape, (121, 2))
        self.assertAlmostEqual(grid.u, 0.25)
        self.assertAlmostEqual(grid.integrate(np.ones(grid.n_bins)), 4.0)

    def test_quadrature_of_behavior_density(self):
        grid = action_grid()
        density = behavior_on_grid(default_bandit_behavior(), grid)
        self.assertLess(abs(grid.integrate(density) - 1.0), 1e-6)

    def test_invalid_grids(self):
        with self.assertRaises(ConfigError):
            action_grid(0)
        with self.assertRaises(ConfigError):
            action_grid(11, dim=3)


class SurrogateTestCase(SimpleTestCase):

    def test_penalty_matches_pairwise_sum(self):
        grid = action_grid(31, dim=2)
        density = make_rng(0).uniform(0.0, 1.0, grid.n_bins)
        brute = 0.7 * (cdist(grid.centers, grid.centers, 'sqeuclidean') @ (density * grid.cell_volume))
        np.testing.assert_allclose(penalty_values(grid, density, 0.7), brute, rtol=1e-10, atol=1e-12)

    def test_surrogate_is_c_minus_f(self):
        grid = action_grid(51)
        density = behavior_on_grid(default_bandit_behavior(), grid)
        backup = np.linspace(-1.0, 1.0, grid.n_bins)
        q_tilde, c, f = surrogate_values(grid, density, backup, 0.5)
        np.testing.assert_allclose(q_tilde, c - f)
        _, zero_c, _ = surrogate_values(grid, density, backup, 0.5, c_choice='zero')
        self.assertEqual(zero_c, 0.0)

    def test_random_problem_satisfies_preconditions(self):
        rng = make_rng(3)
        for _ in range(20):
            p = random_grid_problem(rng, action_grid(101))
            self.assertLessEqual(np.max(np.abs(p.backup)), p.value_bound)
            self.assertLessEqual(np.max(np.abs(p.surrogate)), p.delta)


class AdaptiveWeightTestCase(SimpleTestCase):

    def test_limits(self):
        self.assertEqual(adaptive_weight(0.0, 0.3, 0.5), 1.0)
        self.assertEqual(adaptive_weight(0.7, 0.0, 0.5), 0.0)
        self.assertLess(adaptive_weight(1e12, 0.3, 0.5), 1e-12)

    def test_monotone(self):
        densities = np.linspace(0.0, 4.0, 50)
        w = adaptive_weight(densities, 0.2, 0.5)
        self.assertTrue(np.all(np.diff(w) < 0))
        self.assertTrue(np.all(adaptive_weight(densities, 0.3, 0.5) > w))


class ClosedFormBackupTestCase(SimpleTestCase):

    def test_substitution(self):
        q = closed_form_backup(_cell_problem(0.5, 0.1, 2.0, -1.0))
        self.assertAlmostEqual(q[0], 2.0 - 3.0 * 0.05 / 0.55, places=12)
        self.assertAlmostEqual(q[0], 1.7272727272727, places=12)

    def test_off_support_cells_take_surrogate_exactly(self):
        p = GridProblemFactory()
        p.behavior_density[::3] = 0.0
        q = closed_form_backup(p)
        self.assertTrue(np.array_equal(q[::3], p.surrogate[::3]))

    def test_zero_alpha_gives_backup_exactly(self):
        p = GridProblemFactory(alpha=0.0)
        self.assertTrue(np.array_equal(closed_form_backup(p), p.backup))


class ObjectiveMinimizerTestCase(SimpleTestCase):

    def test_matches_closed_form_on_random_problems(self):
        rng = make_rng(11)
        grid = action_grid(101)
        for _ in range(100):
            p = random_grid_problem(rng, grid)
            np.testing.assert_allclose(objective_minimizer(p), closed_form_backup(p), rtol=0, atol=1e-8)

    def test_equal_weights_average(self):
        q = objective_minimizer(_cell_problem(0.05, 0.1, 3.0, -1.0))
        self.assertAlmostEqual(q[0], 1.0, places=9)

    def test_common_minimizer(self):
        q = objective_minimizer(_cell_problem(0.8, 0.4, 2.5, 2.5))
        self.assertEqual(q[0], 2.5)

    def test_matches_closed_form_on_factory_problems(self):
        for _ in range(10):
            p = GridProblemFactory()
            np.testing.assert_allclose(objective_minimizer(p), closed_form_backup(p), rtol=0, atol=1e-8)


class BiasBoundTestCase(SimpleTestCase):

    def test_bound_substitution(self):
        p = _cell_problem(0.5, 0.1, 2.0, -1.0, r_max=1.0, gamma=0.9, sigma=0.25, delta=12.0)
        report = bias_bound_check(p)
        self.assertAlmostEqual(report.bound, 4.4)
        self.assertTrue(report.holds)

    def test_zero_alpha(self):
        report = bias_bound_check(GridProblemFactory(alpha=0.0))
        self.assertEqual(report.max_bias, 0.0)
        self.assertEqual(report.bound, 0.0)
        self.assertTrue(report.holds)

    def test_holds_on_random_problems(self):
        rng = make_rng(5)
        grid = action_grid(201)
        for _ in range(200):
            self.assertTrue(bias_bound_check(random_grid_problem(rng, grid)).holds)

    def test_halving_alpha_never_increases_bias(self):
        rng = make_rng(6)
        for _ in range(50):
            p = random_grid_problem(rng, action_grid(101))
            self.assertLessEqual(bias_bound_check(p.with_alpha(p.alpha / 2)).max_bias,
                                 bias_bound_check(p).max_bias)

    def test_bias_over_alpha_stays_bounded(self):
        p = GridProblemFactory()
        limit = p.u / p.sigma * (p.value_bound + p.delta)
        for alpha in (1e-2, 1e-4, 1e-6):
            self.assertLess(bias_bound_check(p.with_alpha(alpha)).max_bias / alpha, limit)

    def test_unclipped_backup_is_reported(self):
        p = _cell_problem(0.5, 0.1, 50.0, 0.0, r_max=1.0, gamma=0.9, delta=1.0)
        with self.assertRaises(PreconditionError):
            bias_bound_check(p)

    def test_surrogate_above_delta_is_reported(self):
        p = _cell_problem(0.5, 0.1, 1.0, -3.0, r_max=1.0, gamma=0.9, delta=1.0)
        with self.assertRaises(PreconditionError):
            bias_bound_check(p)


class VarianceTestCase(SimpleTestCase):

    def test_formula_substitution(self):
        self.assertAlmostEqual(variance_y(0.5, 0.05, 2.0, -1.0), 0.025 / 0.55 * 9.0, places=12)
        self.assertAlmostEqual(variance_y(0.5, 0.05, 2.0, -1.0), 0.4090909090909, places=12)

    def test_zero_when_targets_agree(self):
        self.assertEqual(variance_y(0.5, 0.05, 2.0, 2.0), 0.0)
        self.assertEqual(mixture_variance(0.0, 0.05, 2.0, -1.0), 0.0)

    def test_relation_to_two_point_variance(self):
        rng = make_rng(1)
        for _ in range(20):
            density, alpha_u = rng.uniform(0.0, 3.0), rng.uniform(0.01, 1.0)
            q_pi, q_tilde = rng.uniform(-5.0, 5.0, size=2)
            self.assertAlmostEqual(variance_y(density, alpha_u, q_pi, q_tilde),
                                   (density + alpha_u) * mixture_variance(density, alpha_u, q_pi, q_tilde),
                                   places=10)

    def test_monte_carlo(self):
        report = check_variance(make_rng(2), params=10)
        self.assertTrue(report['holds'], report)

    def test_non_positive_alpha_u(self):
        with self.assertRaises(PreconditionError):
            variance_y(0.5, 0.0, 1.0, 0.0)


class ExpectedVarianceTestCase(SimpleTestCase):

    def setUp(self):
        grid = action_grid(201)
        density = behavior_on_grid(default_bandit_behavior(), grid)
        backup = np.sin(3.0 * grid.centers[:, 0])
        self.problem = GridProblem(grid, density, backup, backup, 0.2, r_max=1.0, gamma=0.5,
                                   penalty=penalty_values(grid, density, 0.3))

    def test_mean_c_minimizes_value_term(self):
        best = expected_variance(self.problem, 'mean')
        for c in make_rng(4).uniform(-2.0, 2.0, size=20):
            self.assertLessEqual(best.value_term, expected_variance(self.problem, float(c)).value_term)

    def test_zero_penalty_reduces_to_behavior_variance(self):
        p = self.problem
        flat = GridProblem(p.grid, p.behavior_density, p.backup, p.backup, p.alpha)
        result = expected_variance(flat, 'mean')
        weights = p.behavior_density * p.grid.cell_volume
        variance = np.cov(p.backup, aweights=weights, bias=True)
        expected = p.alpha * p.u / 2.0 * variance * weights.sum()
        self.assertAlmostEqual(result.expectation, expected, places=12)
        self.assertEqual(result.penalty_term, 0.0)

    def test_both_sides_reported(self):
        result = expected_variance(self.problem, 'mean')
        self.assertAlmostEqual(result.expectation - result.bound, result.cross_term, places=12)
        self.assertEqual(result.within_bound, result.cross_term <= 0)


class OracleSuiteTestCase(SimpleTestCase):

    def test_full_suite_holds(self):
        report = run_oracle_suite(problems=1000, seed=7)
        self.assertTrue(report['holds'], report['checks'])
        self.assertEqual(report['problems'], 1000)
        self.assertLess(report['max_bias'], report['bound'])

    def test_same_seed_same_report(self):
        a = run_oracle_suite(problems=20, seed=1, grid_cells=51, variance_draws=10_000)
        b = run_oracle_suite(problems=20, seed=1, grid_cells=51, variance_draws=10_000)
        self.assertEqual(a, b)


class GradientDecompositionTestCase(SimpleTestCase):

    def setUp(self):
        rng = make_rng(0, 'decomposition')
        self.batch = Batch(rng.uniform(-1, 1, (6, 2)), rng.uniform(-1, 1, (6, 1)), np.zeros(6),
                           rng.uniform(-1, 1, (6, 2)), np.zeros(6))
        self.agent = AgentFactory()

    def test_zero_weight_has_no_penalty(self):
        result = gradient_decomposition(self.agent, self.batch, 0.0)
        self.assertTrue(np.all(result.penalty_norms == 0.0))
        self.assertTrue(np.all(result.value_norms > 0.0))

    def test_constant_critic_has_no_value_term(self):
        critic = Mlp([3, 1], [np.zeros((3, 1))], [np.array([1.5])])
        result = gradient_decomposition(self.agent.with_networks(critic1=critic), self.batch, 2.0)
        self.assertTrue(np.all(result.value_norms == 0.0))

    def test_components_sum_to_actor_gradient(self):
        result = gradient_decomposition(self.agent, self.batch, 0.8)
        total = td3bc_actor_loss(self.batch, self.agent, 0.8).grads[0]
        np.testing.assert_allclose(result.total.flat(), total.flat(), rtol=0, atol=1e-10)


class LandscapeTestCase(SimpleTestCase):

    def setUp(self):
        self.dataset = generate_dataset(BanditEnv(), 'default', 500, seed=0)
        self.small = dict(hidden_sizes=(8, 8), batch_size=16, log_every=5)

    def test_rows_and_columns(self):
        curves = landscape(self.dataset, 'abr', [0.05, 0.4], seeds=(0, 1), steps=4,
                           grid=action_grid(21), base_cfg=AbrConfig(**self.small))
        self.assertEqual(len(curves), 4)
        self.assertEqual([(c.alpha, c.seed) for c in curves],
                         [(0.05, 0), (0.05, 1), (0.4, 0), (0.4, 1)])
        self.assertEqual(len(curves[0].values), 21)

        with tempfile.TemporaryDirectory() as tmp:
            rows = read_csv(write_landscape(Path(tmp) / 'landscape.csv', curves))
        self.assertEqual(tuple(rows[0].keys()), LANDSCAPE_COLUMNS)
        self.assertEqual(len(rows), 84)

    def test_td3bc_curve(self):
        curves = landscape(self.dataset, 'td3bc', [1.0], steps=4, grid=action_grid(21),
                           base_cfg=BaselineConfig(**self.small))
        self.assertTrue(np.all(np.isfinite(curves[0].values)))

    def test_rejects_non_bandit_data(self):
        with self.assertRaises(ConfigError):
            landscape(DatasetFactory(), 'abr', [0.1], steps=1)

    def test_rejects_unknown_method(self):
        with self.assertRaises(ConfigError):
            landscape(self.dataset, 'cql', [0.1], steps=1)


@unittest.skipUnless(RUN_SLOW, 'set ABR_RUN_SLOW=1 for the landscape reproduction')
class LandscapeReproductionTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset = generate_dataset(BanditEnv(), 'default', 10_000, seed=0)
        cls.behavior = default_bandit_behavior()

    def test_abr_stays_in_support(self):
        for curve in landscape(self.dataset, 'abr', [0.05, 0.15, 0.4], seeds=range(4)):
            supported = curve.actions[curve.density > 0.1]
            self.assertLessEqual(np.min(np.abs(supported - curve.argmax_action)), 0.05)

    def test_small_fixed_weight_overestimates(self):
        curves = landscape(self.dataset, 'td3bc', [0.01], seeds=range(4))
        self.assertGreaterEqual(sum(c.argmax_density < 1e-3 for c in curves), 3)

    def test_large_fixed_weight_collapses_to_behavior_mean(self):
        """
        A dominant squared-distance penalty is minimized by E[a] under the behavior
        policy, so the argmax lands on the behavior mean rather than its largest mode.
        """
        mean = float(self.behavior.mean_action()[0])
        for curve in landscape(self.dataset, 'td3bc', [100.0], seeds=range(4)):
            self.assertLess(abs(curve.argmax_action - mean), 0.05)
