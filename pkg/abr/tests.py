import os
import tempfile
import unittest
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, DivergenceError, PreconditionError
from core.seeding import make_rng
from data.dataset import Batch, full_batch
from data.factories import DatasetFactory
from envs.bandit import BanditEnv
from envs.behavior import behavior_density, default_bandit_behavior
from envs.generation import expert_policy, generate_dataset, reference_returns
from envs.pointmass import PointMassEnv
from nn.gradcheck import grad_check_fn
from nn.network import Mlp, mlp_init
from .agent import act, agent_load, agent_save, build_agent, NETWORKS
from .config import AbrConfig
from .evaluation import evaluate_policy, normalized_score
from .factories import AbrConfigFactory, AgentFactory
from .losses import (
    LossResult, abr_critic_loss, actor_loss, lambda_coeff, policy_gradient,
    regularized_critic_loss, td_target,
)
from .metrics import read_metrics, write_metrics
from .training import run_training, train

RUN_SLOW = os.environ.get('ABR_RUN_SLOW') == '1'


def _constant(value, inputs):
    return Mlp([inputs, 1], [np.zeros((inputs, 1))], [np.array([float(value)])])


def _batch(n=4, rewards=0.0, dones=0.0, state_dim=2, seed=0):
    rng = make_rng(seed, 'test_batch')
    return Batch(
        states=rng.uniform(-1, 1, size=(n, state_dim)),
        actions=rng.uniform(-1, 1, size=(n, 1)),
        rewards=np.full(n, float(rewards)),
        next_states=rng.uniform(-1, 1, size=(n, state_dim)),
        dones=np.full(n, float(dones)),
    )


class AbrConfigTestCase(SimpleTestCase):

    def test_defaults(self):
        cfg = AbrConfig().validate()
        self.assertEqual((cfg.alpha, cfg.beta, cfg.num_samples), (0.15, 1.0, 1))
        self.assertEqual((cfg.gamma, cfg.tau, cfg.policy_delay, cfg.batch_size), (0.99, 0.005, 2, 256))

    def test_invalid_fields_named(self):
        for field, value in [('alpha', -0.1), ('num_samples', 0), ('gamma', 1.0), ('tau', 0.0),
                             ('policy_delay', 0)]:
            with self.assertRaises(ConfigError) as ctx:
                AbrConfig(**{field: value}).validate()
            self.assertEqual(ctx.exception.field, field)


class TdTargetTestCase(SimpleTestCase):

    def setUp(self):
        self.agent = AgentFactory()

    def test_terminal_transition(self):
        y = td_target(_batch(rewards=5.0, dones=1.0), self.agent, AbrConfigFactory(), make_rng(0))
        self.assertTrue(np.all(y == 5.0))

    def test_zero_discount(self):
        batch = _batch(rewards=-2.5)
        y = td_target(batch, self.agent, AbrConfigFactory(gamma=0.0), make_rng(0))
        self.assertTrue(np.array_equal(y, batch.rewards))

    def test_clipped_double_q(self):
        agent = self.agent.with_networks(critic1_target=_constant(3.0, 3),
                                         critic2_target=_constant(2.0, 3))
        cfg = AbrConfigFactory(clip_targets=False)
        y = td_target(_batch(rewards=1.0), agent, cfg, make_rng(0))
        np.testing.assert_allclose(y, 2.98, rtol=1e-14)

    def test_targets_clipped_to_value_range(self):
        agent = self.agent.with_networks(critic1_target=_constant(10.0, 3),
                                         critic2_target=_constant(10.0, 3))
        y = td_target(_batch(rewards=1.0), agent, AbrConfigFactory(gamma=0.5), make_rng(0), r_max=1.0)
        self.assertTrue(np.all(y == 2.0))

    def test_zero_rewards_give_zero_value_range(self):
        # max |r| = 0 bounds every return at 0
        agent = self.agent.with_networks(critic1_target=_constant(4.0, 3),
                                         critic2_target=_constant(4.0, 3))
        y = td_target(_batch(rewards=0.0), agent, AbrConfigFactory(), make_rng(0), r_max=0.0)
        self.assertTrue(np.all(y == 0.0))


class LambdaCoeffTestCase(SimpleTestCase):

    def test_range_over_mean_abs_q(self):
        agent = AgentFactory().with_networks(critic1=_constant(50.0, 3))
        self.assertAlmostEqual(lambda_coeff(_batch(), agent, AbrConfigFactory()), 0.08)

    def test_linear_in_beta(self):
        agent = AgentFactory().with_networks(critic1=_constant(-7.0, 3))
        one = lambda_coeff(_batch(), agent, AbrConfigFactory(beta=1.0))
        two = lambda_coeff(_batch(), agent, AbrConfigFactory(beta=2.0))
        self.assertAlmostEqual(two, 2.0 * one)

    def test_denominator_floor(self):
        agent = AgentFactory().with_networks(critic1=_constant(0.0, 3))
        self.assertAlmostEqual(lambda_coeff(_batch(), agent, AbrConfigFactory()), 4000.0)


class RegularizedCriticLossTestCase(SimpleTestCase):

    def test_single_transition_arithmetic(self):
        critic = _constant(0.0, 2)
        loss, _, info = regularized_critic_loss(
            critic, np.zeros((1, 1)), np.zeros((1, 1)), np.ones(1),
            np.full((1, 1, 1), 0.5), lam=1.0, alpha=0.3)
        self.assertAlmostEqual(loss, 1.0 + 0.3 * 0.5625)
        self.assertAlmostEqual(info['regularizer'], 0.5625)

    def test_regularizer_vanishes_on_surrogate(self):
        critic = _constant(1.5, 2)
        uniform = make_rng(0).uniform(-1, 1, size=(3, 4, 1))
        _, _, info = regularized_critic_loss(
            critic, np.zeros((3, 1)), np.zeros((3, 1)), np.full(3, 1.5), uniform, lam=0.0, alpha=1.0)
        self.assertEqual(info['regularizer'], 0.0)

    def test_regularizer_non_negative(self):
        critic = mlp_init([3, 8, 1], 'tanh', seed=2)
        rng = make_rng(2)
        _, _, info = regularized_critic_loss(
            critic, rng.normal(size=(5, 2)), rng.uniform(-1, 1, size=(5, 1)), rng.normal(size=5),
            rng.uniform(-1, 1, size=(5, 3, 1)), lam=0.4, alpha=0.15)
        self.assertGreaterEqual(info['regularizer'], 0.0)

    def test_gradients_match_finite_differences(self):
        for seed in range(8):
            action_dim = 1 + seed % 2
            hidden = [[8], [16, 16], [12, 6]][seed % 3]
            critic = mlp_init([2 + action_dim, *hidden, 1], 'tanh', seed=seed)
            rng = make_rng(seed, 'fd')
            states = rng.normal(size=(6, 2))
            actions = rng.uniform(-1, 1, size=(6, action_dim))
            y = rng.normal(size=6)
            uniform = rng.uniform(-1, 1, size=(6, 3, action_dim))

            def loss_fn(nets):
                return regularized_critic_loss(nets[0], states, actions, y, uniform, 0.3, 0.7)[0]

            _, grads, _ = regularized_critic_loss(critic, states, actions, y, uniform, 0.3, 0.7)
            self.assertLessEqual(grad_check_fn(loss_fn, [critic], [grads], seed=seed), 1e-4)

    def test_full_loss_gradient_for_second_critic(self):
        # lambda depends on critic1 only, so the full loss is exact in critic2
        agent = AgentFactory()
        cfg = AbrConfigFactory(num_samples=4)
        batch = _batch(n=8, rewards=0.3)

        def loss_fn(nets):
            return abr_critic_loss(batch, agent.with_networks(critic2=nets[0]), cfg, make_rng(3)).loss

        result = abr_critic_loss(batch, agent, cfg, make_rng(3))
        self.assertLessEqual(grad_check_fn(loss_fn, [agent.critic2], [result.grads[1]]), 1e-4)

    def test_sample_count_changes_variance_not_mean(self):
        critic = mlp_init([3, 8, 1], 'tanh', seed=5)
        batch = _batch(n=4, seed=5)
        y = np.array([0.2, -0.1, 0.4, 0.0])
        estimates = {}
        for m in (1, 10):
            values = []
            for seed in range(400):
                uniform = make_rng(seed, 'uniform', m).uniform(-1, 1, size=(4, m, 1))
                _, _, info = regularized_critic_loss(critic, batch.states, batch.actions, y,
                                                     uniform, lam=0.5, alpha=1.0)
                values.append(info['regularizer'])
            estimates[m] = (np.mean(values), np.std(values, ddof=1) / np.sqrt(len(values)))
        (mean1, se1), (mean10, se10) = estimates[1], estimates[10]
        self.assertLess(abs(mean1 - mean10), 4.0 * np.hypot(se1, se10))
        self.assertLess(se10, se1)


class AbrCriticLossTestCase(SimpleTestCase):

    def test_returns_gradients_for_both_critics(self):
        agent = AgentFactory()
        result = abr_critic_loss(_batch(), agent, AbrConfigFactory(), make_rng(0))
        self.assertIsInstance(result, LossResult)
        self.assertEqual(len(result.grads), 2)
        self.assertIn('lambda', result.info)
        self.assertGreater(result.info['regularizer'], 0.0)

    def test_same_rng_same_loss(self):
        agent = AgentFactory()
        cfg = AbrConfigFactory(num_samples=3)
        a = abr_critic_loss(_batch(), agent, cfg, make_rng(4))
        b = abr_critic_loss(_batch(), agent, cfg, make_rng(4))
        self.assertEqual(a.loss, b.loss)


class ActorLossTestCase(SimpleTestCase):

    def test_constant_critic(self):
        agent = AgentFactory().with_networks(critic1=_constant(4.0, 3))
        result = actor_loss(_batch(), agent)
        self.assertEqual(result.loss, -4.0)
        self.assertTrue(np.all(result.grads[0].flat() == 0.0))

    def test_quadratic_bowl_pulls_actions_to_zero(self):
        actor = Mlp([1, 1], [np.array([[0.5]])], [np.array([0.3])])
        states = np.array([[0.2], [0.6]])

        def objective(s, a):
            return float(np.mean(np.sum(a * a, axis=1))), 2.0 * a / len(a)

        _, grads, before = policy_gradient(actor, states, np.array([-1.0]), np.array([1.0]), objective)
        stepped = actor.copy()
        stepped.weights = [w - 0.1 * g for w, g in zip(actor.weights, grads.weights)]
        stepped.biases = [b - 0.1 * g for b, g in zip(actor.biases, grads.biases)]
        _, _, after = policy_gradient(stepped, states, np.array([-1.0]), np.array([1.0]), objective)
        self.assertTrue(np.all(np.abs(after) < np.abs(before)))

    def test_gradients_match_finite_differences(self):
        for seed in range(6):
            agent = AgentFactory(action_dim=1 + seed % 2, cfg__seed=seed)
            batch = _batch(n=8, seed=seed)

            def loss_fn(nets):
                return actor_loss(batch, agent.with_networks(actor=nets[0])).loss

            result = actor_loss(batch, agent)
            self.assertLessEqual(
                grad_check_fn(loss_fn, [agent.actor], result.grads, seed=seed), 1e-4)

    def test_actions_stay_in_box(self):
        agent = AgentFactory(action_low=np.array([-0.5]), action_high=np.array([2.0]))
        actions = act(agent, make_rng(0).normal(scale=50.0, size=(100, 2)))
        self.assertTrue(np.all((actions >= -0.5) & (actions <= 2.0)))


class TrainTestCase(SimpleTestCase):

    def setUp(self):
        self.dataset = DatasetFactory(size=64, seed=1)

    def test_zero_steps_returns_initial_agent(self):
        cfg = AbrConfigFactory(total_steps=0)
        agent, metrics = train(self.dataset, cfg)
        fresh = build_agent(2, 1, [-1.0], [1.0], cfg)
        self.assertEqual(metrics, [])
        for name in NETWORKS:
            for p, q in zip(getattr(agent, name).parameters(), getattr(fresh, name).parameters()):
                self.assertTrue(np.array_equal(p, q))

    def test_same_seed_same_metrics(self):
        cfg = AbrConfigFactory(seed=3)
        _, first = train(self.dataset, cfg)
        _, second = train(self.dataset, cfg)
        self.assertEqual([m.as_row() for m in first], [m.as_row() for m in second])

    def test_metrics_cadence(self):
        _, metrics = train(self.dataset, AbrConfigFactory(total_steps=20, log_every=5))
        self.assertEqual([m.step for m in metrics], [5, 10, 15, 20])
        self.assertTrue(all(np.isfinite(m.critic_loss) and np.isfinite(m.lam) for m in metrics))

    def test_targets_move_only_on_delayed_steps(self):
        agent, _ = train(self.dataset, AbrConfigFactory(total_steps=1, policy_delay=2))
        self.assertTrue(np.array_equal(agent.actor.weights[0], agent.actor_target.weights[0]))
        self.assertEqual(agent.actor_opt.step_count, 0)
        self.assertEqual(agent.critic1_opt.step_count, 1)

    def test_divergence_guard(self):
        def exploding(batch, agent, cfg, rng, r_max):
            return LossResult(1e9, [None, None])

        with self.assertRaises(DivergenceError):
            run_training(self.dataset, AbrConfigFactory(), exploding, None)

    def test_evaluator_runs_at_last_step(self):
        calls = []

        def evaluator(agent):
            calls.append(agent.step)
            return 1.25

        _, metrics = train(self.dataset, AbrConfigFactory(total_steps=10, log_every=5), evaluator)
        self.assertEqual(calls, [10])
        self.assertEqual(metrics[-1].eval_return, 1.25)
        self.assertIsNone(metrics[0].eval_return)

    def test_metrics_file_is_reproducible(self):
        cfg = AbrConfigFactory(seed=8)
        with tempfile.TemporaryDirectory() as tmp:
            a = write_metrics(Path(tmp) / 'a.csv', train(self.dataset, cfg)[1])
            b = write_metrics(Path(tmp) / 'b.csv', train(self.dataset, cfg)[1])
            self.assertEqual(a.read_bytes(), b.read_bytes())
            rows = read_metrics(a)
        self.assertEqual(rows[0].step, 5)

    @unittest.skipUnless(RUN_SLOW, 'set ABR_RUN_SLOW=1 for desk-scale training runs')
    def test_bandit_policy_stays_in_support(self):
        dataset = generate_dataset(BanditEnv(), 'default', 10_000, seed=0)
        cfg = AbrConfig(total_steps=20_000, hidden_sizes=(64, 64), log_every=5000, seed=0)
        agent, _ = train(dataset, cfg)
        action = act(agent, np.zeros((1, 1)))[0]
        self.assertGreater(behavior_density(default_bandit_behavior(), None, action), 0.1)


class CheckpointTestCase(SimpleTestCase):

    def test_round_trip(self):
        agent = AgentFactory()
        agent.step = 42
        with tempfile.TemporaryDirectory() as tmp:
            agent_save(agent, Path(tmp) / 'ckpt')
            loaded = agent_load(Path(tmp) / 'ckpt')
        self.assertEqual(loaded.step, 42)
        for name in NETWORKS:
            for p, q in zip(getattr(agent, name).parameters(), getattr(loaded, name).parameters()):
                self.assertTrue(np.array_equal(p, q))


class EvaluatePolicyTestCase(SimpleTestCase):

    def test_constant_bandit_actor(self):
        env = BanditEnv(reward_noise_sd=0.0)
        actor = Mlp([1, 1], [np.zeros((1, 1))], [np.array([np.arctanh(0.2)])],
                    output_activation='tanh')
        self.assertAlmostEqual(evaluate_policy(env, actor, 3, make_rng(0)), 0.6, places=6)

    def test_expert_matches_reference(self):
        env = PointMassEnv()
        refs = reference_returns(env, episodes=2, seed=0)
        ret = evaluate_policy(env, expert_policy(env), 1, make_rng(0))
        self.assertLess(abs(ret - refs['expert']), 0.05 * abs(refs['expert']))

    def test_repeatable_with_same_rng_state(self):
        env = BanditEnv()
        actor = AgentFactory(state_dim=1).actor
        a = evaluate_policy(env, actor, 5, make_rng(7))
        b = evaluate_policy(env, actor, 5, make_rng(7))
        self.assertEqual(a, b)

    def test_needs_an_episode(self):
        with self.assertRaises(ValueError):
            evaluate_policy(BanditEnv(), expert_policy(BanditEnv()), 0, make_rng(0))


class NormalizedScoreTestCase(SimpleTestCase):

    def test_reference_points(self):
        self.assertEqual(normalized_score(-10.0, -10.0, 90.0), 0.0)
        self.assertEqual(normalized_score(90.0, -10.0, 90.0), 100.0)
        self.assertEqual(normalized_score(40.0, -10.0, 90.0), 50.0)

    def test_degenerate_references(self):
        with self.assertRaises(PreconditionError):
            normalized_score(1.0, 3.0, 3.0)
