import numpy as np
from django.test import SimpleTestCase
from scipy.stats import kstest

from core.exceptions import ActionBoundsError, ConfigError
from core.seeding import make_rng
from .bandit import BanditEnv, bandit_reward
from .behavior import (
    BehaviorPolicy, behavior_cdf, behavior_density, behavior_sample, default_bandit_behavior,
)
from .generation import generate_dataset, reference_returns, rollout, expert_policy
from .pointmass import PointMassEnv, expert_controller, pm_step


def _single_normal(mean=0.0, sd=0.1):
    return BehaviorPolicy(weights=[1.0], means=[[mean]], sds=[[sd]], low=[-1.0], high=[1.0])


class BanditRewardTestCase(SimpleTestCase):

    def setUp(self):
        self.env = BanditEnv()

    def test_in_support_mode(self):
        expected = 0.6 + 1.0 * np.exp(-72.0)
        self.assertAlmostEqual(bandit_reward(self.env, 0.2), expected, places=12)

    def test_out_of_support_mode(self):
        expected = 1.0 + 0.6 * np.exp(-18.0)
        self.assertAlmostEqual(bandit_reward(self.env, 0.8), expected, places=12)

    def test_noise_free_reward_is_deterministic(self):
        env = BanditEnv(reward_noise_sd=0.0)
        rng = make_rng(0)
        self.assertEqual(bandit_reward(env, 0.3, rng), bandit_reward(env, 0.3, rng))

    def test_noise_has_configured_scale(self):
        rng = make_rng(1)
        rewards = np.array([bandit_reward(self.env, 0.2, rng) for _ in range(4000)])
        self.assertAlmostEqual(rewards.std(), 0.05, delta=0.005)

    def test_out_of_bounds_action(self):
        with self.assertRaises(ActionBoundsError):
            bandit_reward(self.env, 1.5)

    def test_best_action(self):
        self.assertAlmostEqual(self.env.best_action(), 0.8, places=3)

    def test_widths_must_be_positive(self):
        from .bandit import RewardMode
        with self.assertRaises(ConfigError):
            BanditEnv(reward_modes=(RewardMode(0.0, 1.0, 0.0),))


class BehaviorDensityTestCase(SimpleTestCase):

    def test_single_truncated_normal_peak(self):
        pol = _single_normal()
        self.assertAlmostEqual(behavior_density(pol, None, 0.0), 3.989422804, places=6)

    def test_zero_outside_box(self):
        self.assertEqual(behavior_density(_single_normal(), None, 1.2), 0.0)
        self.assertEqual(behavior_density(_single_normal(), None, -1.0001), 0.0)

    def test_integrates_to_one(self):
        pol = default_bandit_behavior()
        n = 10_000
        width = 2.0 / n
        centers = -1.0 + width * (np.arange(n) + 0.5)
        total = behavior_density(pol, None, centers).sum() * width
        self.assertLess(abs(total - 1.0), 1e-6)

    def test_heavily_truncated_component_integrates_to_one(self):
        pol = BehaviorPolicy(weights=[0.3, 0.7], means=[[0.9], [-1.2]], sds=[[0.4], [0.5]],
                             low=[-1.0], high=[1.0])
        n = 10_000
        width = 2.0 / n
        centers = -1.0 + width * (np.arange(n) + 0.5)
        self.assertLess(abs(behavior_density(pol, None, centers).sum() * width - 1.0), 1e-6)

    def test_default_mixture_leaves_best_arm_unsupported(self):
        pol = default_bandit_behavior()
        self.assertLess(behavior_density(pol, None, 0.8), 1e-4)
        self.assertGreater(behavior_density(pol, None, 0.2), 1.0)

    def test_two_dimensional_density_factorizes(self):
        pol = BehaviorPolicy(weights=[1.0], means=[[0.0, 0.0]], sds=[[0.1, 0.2]],
                             low=[-1.0, -1.0], high=[1.0, 1.0])
        joint = behavior_density(pol, None, [0.05, -0.1])
        px = behavior_density(_single_normal(0.0, 0.1), None, 0.05)
        py = behavior_density(_single_normal(0.0, 0.2), None, -0.1)
        self.assertAlmostEqual(joint, px * py, places=10)

    def test_invalid_mixtures_rejected(self):
        with self.assertRaises(ConfigError):
            BehaviorPolicy(weights=[0.4, 0.4], means=[[0.0], [0.1]], sds=[[0.1], [0.1]],
                           low=[-1.0], high=[1.0])
        with self.assertRaises(ConfigError):
            _single_normal(sd=0.0)


class BehaviorSampleTestCase(SimpleTestCase):

    def test_degenerate_component(self):
        pol = _single_normal(mean=0.3, sd=1e-9)
        samples = behavior_sample(pol, None, make_rng(0), 100)
        self.assertTrue(np.allclose(samples, 0.3, atol=1e-6))

    def test_samples_match_analytic_cdf(self):
        pol = default_bandit_behavior()
        samples = behavior_sample(pol, None, make_rng(3), 100_000)[:, 0]
        statistic = kstest(samples, lambda a: behavior_cdf(pol, a)).statistic
        self.assertLess(statistic, 0.01)

    def test_samples_stay_in_box(self):
        pol = BehaviorPolicy(weights=[1.0], means=[[0.95]], sds=[[0.5]], low=[-1.0], high=[1.0])
        samples = behavior_sample(pol, None, make_rng(4), 20_000)
        self.assertTrue(np.all((samples >= -1.0) & (samples <= 1.0)))

    def test_single_draw_shape(self):
        action = behavior_sample(default_bandit_behavior(), None, make_rng(5))
        self.assertEqual(action.shape, (1,))


class PointMassTestCase(SimpleTestCase):

    def setUp(self):
        self.env = PointMassEnv()

    def test_zero_action_keeps_position(self):
        state = np.array([0.5, -0.5, 0.0, 0.0])
        next_state, reward, done = pm_step(self.env, state, [0.0, 0.0])
        self.assertTrue(np.array_equal(next_state[:2], state[:2]))
        self.assertAlmostEqual(reward, -np.linalg.norm(state[:2] - np.array([1.0, 1.0])))
        self.assertFalse(done)

    def test_reward_zero_at_goal(self):
        _, reward, _ = pm_step(self.env, np.array([1.0, 1.0, 0.0, 0.0]), [0.0, 0.0])
        self.assertEqual(reward, 0.0)

    def test_integration_arithmetic(self):
        env = PointMassEnv(damping=1.0)
        next_state, _, _ = pm_step(env, np.zeros(4), [1.0, 0.0])
        self.assertAlmostEqual(next_state[2], 0.05)
        self.assertAlmostEqual(next_state[0], 0.0025)
        self.assertEqual(next_state[1], 0.0)

    def test_position_clipped_to_arena(self):
        next_state, _, _ = pm_step(self.env, np.array([2.0, 0.0, 5.0, 0.0]), [1.0, 0.0])
        self.assertEqual(next_state[0], 2.0)

    def test_done_exactly_at_horizon(self):
        self.assertFalse(pm_step(self.env, np.zeros(4), [0.0, 0.0], t=98)[2])
        self.assertTrue(pm_step(self.env, np.zeros(4), [0.0, 0.0], t=99)[2])

    def test_step_is_pure(self):
        state = np.array([0.1, 0.2, 0.3, -0.1])
        first = pm_step(self.env, state, [0.2, -0.4], t=3)
        second = pm_step(self.env, state, [0.2, -0.4], t=3)
        self.assertTrue(np.array_equal(first[0], second[0]))
        self.assertEqual(first[1:], second[1:])

    def test_out_of_bounds_action(self):
        with self.assertRaises(ActionBoundsError):
            pm_step(self.env, np.zeros(4), [1.5, 0.0])


class ExpertControllerTestCase(SimpleTestCase):

    def setUp(self):
        self.env = PointMassEnv()

    def test_zero_action_at_goal(self):
        action = expert_controller(self.env, np.array([1.0, 1.0, 0.0, 0.0]))
        self.assertTrue(np.array_equal(action, np.zeros(2)))

    def test_saturates_far_from_goal(self):
        action = expert_controller(self.env, np.array([-2.0, 1.0, 0.0, 0.0]))
        self.assertEqual(action[0], 1.0)

    def test_rollout_reaches_goal(self):
        transitions, _ = rollout(self.env, expert_policy(self.env), make_rng(0))
        self.assertEqual(len(transitions), 100)
        final_position = transitions[-1][3][:2]
        self.assertLess(np.linalg.norm(final_position - np.array([1.0, 1.0])), 0.1)


class GenerateDatasetTestCase(SimpleTestCase):

    def test_bandit_dataset(self):
        ds = generate_dataset(BanditEnv(), 'default', 1000, seed=0)
        self.assertEqual(len(ds), 1000)
        self.assertTrue(np.all(ds.dones))
        density = behavior_density(default_bandit_behavior(), None, ds.actions[:, 0])
        self.assertTrue(np.all(density > 0))

    def test_mixed_point_mass_has_two_quality_levels(self):
        from data.dataset import episode_returns
        ds = generate_dataset(PointMassEnv(), 'mixed', 10_000, seed=0)
        self.assertEqual(len(ds), 10_000)
        returns = np.array(episode_returns(ds))
        expert, medium = returns[0::2], returns[1::2]
        self.assertEqual(np.ptp(expert), 0.0)
        self.assertGreater(medium.std(), 0.0)
        self.assertLess(medium.mean(), expert[0])

    def test_same_seed_same_dataset(self):
        a = generate_dataset(PointMassEnv(), 'medium', 750, seed=4)
        b = generate_dataset(PointMassEnv(), 'medium', 750, seed=4)
        self.assertTrue(a.equals(b))

    def test_every_action_inside_box(self):
        ds = generate_dataset(PointMassEnv(), 'random', 500, seed=1)
        self.assertTrue(np.all(np.abs(ds.actions) <= 1.0))

    def test_unknown_behavior(self):
        with self.assertRaises(ConfigError):
            generate_dataset(PointMassEnv(), 'replay', 10, seed=0)

    def test_non_positive_size(self):
        with self.assertRaises(ConfigError):
            generate_dataset(BanditEnv(), 'default', 0, seed=0)


class ReferenceReturnsTestCase(SimpleTestCase):

    def test_expert_beats_random(self):
        refs = reference_returns(PointMassEnv(), episodes=5, seed=0)
        self.assertGreater(refs['expert'], refs['random'])

    def test_bandit_expert_is_best_arm(self):
        refs = reference_returns(BanditEnv(reward_noise_sd=0.0), episodes=3, seed=0)
        self.assertAlmostEqual(refs['expert'], 1.0, places=3)
