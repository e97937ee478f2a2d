import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy.stats import chisquare

from core.exceptions import DatasetError, NonFiniteError
from core.seeding import make_rng
from envs.bandit import BanditEnv
from envs.generation import generate_dataset
from nn.network import Mlp
from .dataset import (
    FORMAT_TAG, Dataset, Transition, dataset_load, dataset_save, dataset_summary, energy_distance,
    episode_returns, full_batch, mean_abs_q, sample_batch,
)
from .factories import DatasetFactory


def _constant_critic(value, inputs=3):
    return Mlp([inputs, 1], [np.zeros((inputs, 1))], [np.array([float(value)])])


class DatasetValidationTestCase(SimpleTestCase):

    def test_factory_dataset_is_valid(self):
        ds = DatasetFactory()
        self.assertEqual(len(ds), 32)
        self.assertEqual(ds.state_dim, 2)
        self.assertEqual(ds.action_dim, 1)

    def test_action_outside_bounds_names_row(self):
        actions = np.zeros((5, 1))
        actions[3, 0] = 1.5
        with self.assertRaises(DatasetError) as ctx:
            DatasetFactory(size=5, actions=actions)
        self.assertEqual(ctx.exception.row, 3)
        self.assertIn('row 3', str(ctx.exception))

    def test_non_finite_reward_names_row(self):
        rewards = np.zeros(4)
        rewards[1] = np.nan
        with self.assertRaises(DatasetError) as ctx:
            DatasetFactory(size=4, rewards=rewards)
        self.assertEqual(ctx.exception.row, 1)

    def test_empty_dataset_rejected(self):
        with self.assertRaises(DatasetError):
            Dataset.from_transitions([], [-1.0], [1.0])

    def test_from_transitions(self):
        t = Transition(np.zeros(1), np.array([0.5]), 1.0, np.zeros(1), True)
        ds = Dataset.from_transitions([t, t], [-1.0], [1.0])
        self.assertEqual(len(ds), 2)
        self.assertEqual(ds.transition(1).reward, 1.0)


class DatasetFileTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_is_exact(self):
        ds = DatasetFactory(size=50)
        ds.rewards[0] = 0.1 + 0.2
        path = dataset_save(ds, self.dir / 'd.jsonl')
        loaded = dataset_load(path)
        self.assertTrue(ds.equals(loaded))

    def test_same_seed_gives_byte_identical_file(self):
        env = BanditEnv()
        a = dataset_save(generate_dataset(env, 'default', 300, seed=1), self.dir / 'a.jsonl')
        b = dataset_save(generate_dataset(env, 'default', 300, seed=1), self.dir / 'b.jsonl')
        self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_truncated_file_is_an_error(self):
        path = dataset_save(DatasetFactory(size=10), self.dir / 'd.jsonl')
        lines = path.read_text().splitlines(keepends=True)
        path.write_text(''.join(lines[:6]))
        with self.assertRaises(DatasetError):
            dataset_load(path)

    def test_partial_last_line_is_an_error(self):
        path = dataset_save(DatasetFactory(size=10), self.dir / 'd.jsonl')
        text = path.read_text()
        path.write_text(text[:-15])
        with self.assertRaises(DatasetError):
            dataset_load(path)

    def test_out_of_bounds_row_in_file(self):
        path = dataset_save(DatasetFactory(size=4), self.dir / 'd.jsonl')
        lines = path.read_text().splitlines()
        row = json.loads(lines[3])
        row['a'] = [7.0]
        lines[3] = json.dumps(row)
        path.write_text('\n'.join(lines) + '\n')
        with self.assertRaises(DatasetError) as ctx:
            dataset_load(path)
        self.assertEqual(ctx.exception.row, 2)

    def test_missing_file(self):
        with self.assertRaises(DatasetError):
            dataset_load(self.dir / 'nope.jsonl')

    def test_unknown_format(self):
        path = self.dir / 'd.jsonl'
        path.write_text('{"format": "other", "state_dim": 1, "action_dim": 1, "count": 0, '
                        '"action_low": [-1], "action_high": [1]}\n')
        with self.assertRaises(DatasetError):
            dataset_load(path)

    def test_negative_header_sizes(self):
        path = self.dir / 'd.jsonl'
        for count, state_dim in ((-1, 1), (0, -2)):
            header = {'format': FORMAT_TAG, 'state_dim': state_dim, 'action_dim': 1,
                      'count': count, 'action_low': [-1], 'action_high': [1]}
            path.write_text(json.dumps(header) + '\n')
            with self.assertRaises(DatasetError) as ctx:
                dataset_load(path)
            self.assertIn('bad header sizes', str(ctx.exception))


class SampleBatchTestCase(SimpleTestCase):

    def test_single_transition(self):
        ds = DatasetFactory(size=1)
        batch = sample_batch(ds, 1, make_rng(0))
        self.assertTrue(np.array_equal(batch.states[0], ds.states[0]))
        self.assertEqual(batch.size, 1)

    def test_same_rng_state_same_batch(self):
        ds = DatasetFactory(size=100)
        a = sample_batch(ds, 16, make_rng(5))
        b = sample_batch(ds, 16, make_rng(5))
        self.assertTrue(np.array_equal(a.indices, b.indices))

    def test_sampling_is_uniform(self):
        ds = DatasetFactory(size=10)
        batch = sample_batch(ds, 100_000, make_rng(9))
        freq = np.bincount(batch.indices, minlength=10) / 100_000
        sigma = np.sqrt(0.1 * 0.9 / 100_000)
        self.assertTrue(np.all(np.abs(freq - 0.1) < 4 * sigma))
        self.assertGreater(chisquare(freq * 100_000).pvalue, 1e-3)

    def test_dones_are_floats(self):
        batch = full_batch(DatasetFactory(size=8))
        self.assertEqual(batch.dones.dtype, np.float64)
        self.assertEqual(batch.dones.tolist(), [0.0, 0.0, 0.0, 1.0] * 2)

    def test_invalid_batch_size(self):
        with self.assertRaises(ValueError):
            sample_batch(DatasetFactory(), 0, make_rng(0))


class MeanAbsQTestCase(SimpleTestCase):

    def setUp(self):
        self.batch = full_batch(DatasetFactory(size=6))

    def test_constant_positive_critic(self):
        self.assertEqual(mean_abs_q(self.batch, _constant_critic(2.0)), 2.0)

    def test_constant_negative_critic(self):
        self.assertEqual(mean_abs_q(self.batch, _constant_critic(-3.0)), 3.0)

    def test_mixed_signs(self):
        # Q(s, a) = a on three transitions with actions {1, -2, 3}
        ds = Dataset(np.zeros((3, 1)), [[1.0], [-2.0], [3.0]], np.zeros(3), np.zeros((3, 1)),
                     np.ones(3), [-5.0], [5.0])
        critic = Mlp([2, 1], [np.array([[0.0], [1.0]])], [np.zeros(1)])
        self.assertAlmostEqual(mean_abs_q(full_batch(ds), critic), 2.0)

    def test_non_finite_critic(self):
        with self.assertRaises(NonFiniteError):
            mean_abs_q(self.batch, _constant_critic(np.inf))


class DatasetStatisticsTestCase(SimpleTestCase):

    def test_episode_returns_skip_unfinished_tail(self):
        ds = Dataset(np.zeros((5, 1)), np.zeros((5, 1)), [1.0, 2.0, 3.0, 4.0, 5.0],
                     np.zeros((5, 1)), [False, True, False, True, False], [-1.0], [1.0])
        self.assertEqual(episode_returns(ds), [3.0, 7.0])

    def test_summary(self):
        ds = Dataset(np.zeros((2, 1)), [[0.5], [-0.5]], [-3.0, 1.0], np.zeros((2, 1)),
                     [True, True], [-1.0], [1.0])
        summary = dataset_summary(ds)
        self.assertEqual(summary['r_max'], 3.0)
        self.assertEqual(summary['n_episodes'], 2)
        self.assertEqual(summary['action_mean'], [0.0])

    def test_energy_distance_of_identical_samples_is_zero(self):
        x = make_rng(0).normal(size=(50, 2))
        self.assertAlmostEqual(energy_distance(x, x), 0.0, places=12)

    def test_energy_distance_grows_with_shift(self):
        rng = make_rng(1)
        x = rng.normal(size=(300, 1))
        near = energy_distance(x, x + 0.1)
        far = energy_distance(x, x + 2.0)
        self.assertGreater(far, near)
