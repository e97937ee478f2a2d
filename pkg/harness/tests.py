import json
import math
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path
from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, IncompleteRunError
from core.io import dump_json, read_csv
from .cli import cli
from .environments import references_path
from .factories import SweepConfigFactory, TrainConfigFactory
from .runs import (
    evaluate_checkpoint, gen_data, method_config, run_sweep, seed_dir, sweep_aggregate,
    sweep_points, train_run,
)
from .serializers import SweepRunSerializer, TrainRunSerializer, validate_run_config

RUN_SLOW = os.environ.get('ABR_RUN_SLOW') == '1'


def run_cli(*argv):
    out, err = StringIO(), StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


class TempDirMixin:

    def setUp(self):
        super().setUp()
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()
        super().tearDown()

    def write_config(self, data, name='run.json'):
        return dump_json(self.dir / name, data)


class RunConfigValidationTestCase(SimpleTestCase):

    def assertInvalid(self, data, field, serializer=TrainRunSerializer):
        with self.assertRaises(ConfigError) as ctx:
            validate_run_config(data, serializer)
        self.assertEqual(ctx.exception.field, field)

    def test_defaults_are_filled(self):
        run = validate_run_config({'env': {'kind': 'bandit'}, 'method': 'abr'}, TrainRunSerializer)
        self.assertEqual(run['seeds'], [0])
        self.assertEqual(run['env']['behavior'], 'default')
        self.assertEqual(run['dataset']['n_transitions'], 10_000)
        self.assertEqual(run['evaluation']['episodes'], 10)
        self.assertEqual(dict(run['abr']), {})

    def test_pointmass_defaults_to_mixed_data(self):
        run = validate_run_config(TrainConfigFactory(env={'kind': 'pointmass'}), TrainRunSerializer)
        self.assertEqual(run['env']['behavior'], 'mixed')

    def test_missing_field_is_named(self):
        data = TrainConfigFactory()
        del data['method']
        self.assertInvalid(data, 'method')

    def test_unknown_keys_rejected(self):
        self.assertInvalid(TrainConfigFactory(alpah=0.1), 'alpah')
        self.assertInvalid(TrainConfigFactory(abr={'alpah': 0.1}), 'abr.alpah')
        self.assertInvalid(TrainConfigFactory(abr={'seed': 3}), 'abr.seed')

    def test_hyperparameter_ranges_use_dotted_paths(self):
        self.assertInvalid(TrainConfigFactory(abr={'alpha': -1.0}), 'abr.alpha')
        self.assertInvalid(TrainConfigFactory(abr={'gamma': 1.0}), 'abr.gamma')
        self.assertInvalid(TrainConfigFactory(baseline={'alpha_fixed': -2.0}), 'baseline.alpha_fixed')
        self.assertInvalid(TrainConfigFactory(env={'kind': 'cartpole'}), 'env.kind')
        self.assertInvalid(TrainConfigFactory(env={'kind': 'pointmass', 'behavior': 'default'}),
                           'env.behavior')
        self.assertInvalid(TrainConfigFactory(dataset={'n_transitions': 0}), 'dataset.n_transitions')
        self.assertInvalid(TrainConfigFactory(method='cql'), 'method')

    def test_list_items_are_located(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_run_config(TrainConfigFactory(abr={'hidden_sizes': [8, 0]}), TrainRunSerializer)
        self.assertEqual(ctx.exception.field, 'abr.hidden_sizes.1')

    def test_seeds(self):
        self.assertInvalid(TrainConfigFactory(seeds=[]), 'seeds')
        self.assertInvalid(TrainConfigFactory(seeds=[1, 1]), 'seeds')

    def test_hidden_sizes_become_tuple(self):
        run = validate_run_config(TrainConfigFactory(), TrainRunSerializer)
        self.assertEqual(run['abr']['hidden_sizes'], (8, 8))

    def test_not_an_object(self):
        with self.assertRaises(ConfigError):
            validate_run_config([1, 2], TrainRunSerializer)

    def test_sweep_grid(self):
        run = validate_run_config(SweepConfigFactory(), SweepRunSerializer)
        self.assertEqual(run['grid']['methods'], ['abr', 'bc'])
        self.assertInvalid(SweepConfigFactory(grid={'methods': ['cql']}), 'grid.methods.0',
                           SweepRunSerializer)
        self.assertInvalid(SweepConfigFactory(grid={'num_samples': [0]}), 'grid.num_samples.0',
                           SweepRunSerializer)
        with_method = SweepConfigFactory()
        with_method['method'] = 'abr'
        self.assertInvalid(with_method, 'method', SweepRunSerializer)

    def test_sweep_grid_defaults(self):
        data = SweepConfigFactory()
        del data['grid']
        run = validate_run_config(data, SweepRunSerializer)
        self.assertEqual(dict(run['grid']), {
            'methods': ['abr'], 'alphas': [0.15], 'betas': [1.0], 'num_samples': [1]})


class RunPlanningTestCase(SimpleTestCase):

    def test_method_config(self):
        run = validate_run_config(TrainConfigFactory(), TrainRunSerializer)
        cfg = method_config(run, 'abr', 3, alpha=0.4)
        self.assertEqual((cfg.seed, cfg.alpha, cfg.eval_episodes), (3, 0.4, 2))
        self.assertEqual(cfg.hidden_sizes, (8, 8))
        self.assertEqual(method_config(run, 'td3', 0).method, 'td3')

    def test_sweep_points(self):
        data = SweepConfigFactory(grid={'methods': ['abr', 'td3bc'], 'alphas': [0.05, 0.4],
                                        'num_samples': [1, 10]})
        points = sweep_points(validate_run_config(data, SweepRunSerializer))
        self.assertEqual([name for name, _, _ in points], [
            'abr_alpha0.05_beta1_m1', 'abr_alpha0.05_beta1_m10',
            'abr_alpha0.4_beta1_m1', 'abr_alpha0.4_beta1_m10', 'td3bc',
        ])
        self.assertEqual(points[1][2], {'alpha': 0.05, 'beta': 1.0, 'num_samples': 10})


class SweepAggregateTestCase(TempDirMixin, SimpleTestCase):

    def write_result(self, name, seed, score, method='abr', alpha=0.15):
        run_dir = self.dir / name / f'seed_{seed}'
        dump_json(run_dir / 'result.json', {
            'method': method, 'alpha': alpha, 'beta': 1.0 if method == 'abr' else None,
            'num_samples': 1 if method == 'abr' else None, 'seed': seed, 'normalized_score': score,
        })
        return run_dir

    def test_mean_and_sample_sd(self):
        dirs = [self.write_result('abr', i, s) for i, s in enumerate([50.0, 52.0, 48.0, 50.0])]
        [row] = sweep_aggregate(dirs)
        self.assertEqual(row['mean_score'], 50.0)
        self.assertAlmostEqual(row['sd_score'], 1.63, places=2)
        self.assertEqual(row['seeds'], 4)

    def test_groups_by_point(self):
        dirs = [
            self.write_result('a', 0, 10.0),
            self.write_result('b', 0, 30.0, alpha=0.4),
            self.write_result('bc', 0, 70.0, method='bc', alpha=None),
        ]
        rows = sweep_aggregate(dirs)
        self.assertEqual([(r['method'], r['alpha'], r['mean_score']) for r in rows],
                         [('abr', 0.15, 10.0), ('abr', 0.4, 30.0), ('bc', None, 70.0)])
        self.assertEqual(rows[0]['sd_score'], 0.0)

    def test_missing_seed_is_named(self):
        dirs = [self.write_result('abr', 0, 50.0), self.dir / 'abr' / 'seed_1']
        with self.assertRaises(IncompleteRunError) as ctx:
            sweep_aggregate(dirs)
        self.assertEqual(ctx.exception.missing, [self.dir / 'abr' / 'seed_1'])
        self.assertIn('seed_1', str(ctx.exception))


class CliTestCase(TempDirMixin, SimpleTestCase):

    def test_usage_errors(self):
        self.assertEqual(run_cli()[0], 2)
        code, _, err = run_cli('fit')
        self.assertEqual(code, 2)
        self.assertIn("unknown subcommand 'fit'", err)
        self.assertEqual(run_cli('gen-data', '--env', 'bandit')[0], 2)

    def test_oracle_check(self):
        code, out, _ = run_cli('oracle-check', '--problems', 20, '--seed', 7, '--grid', 51,
                               '--draws', 10_000)
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertTrue(report['holds'])
        self.assertEqual(report['seed'], 7)
        self.assertTrue(all(check['holds'] for check in report['checks'].values()))

    def test_oracle_check_rejects_zero_problems(self):
        code, _, err = run_cli('oracle-check', '--problems', 0)
        self.assertEqual(code, 2)
        self.assertIn('problems', err)

    def test_oracle_report_that_cannot_be_written(self):
        report = {'holds': True, 'checks': {}, 'max_abs_z': math.inf}
        with patch('harness.management.commands.oracle_check.run_oracle_suite',
                   return_value=report):
            code, _, err = run_cli('oracle-check', '--problems', 1, '--out', self.dir / 'r.json')
        self.assertEqual(code, 1)
        self.assertEqual(len(err.strip().splitlines()), 1)
        self.assertIn('CommandError', err)

    def test_gen_data_is_byte_reproducible(self):
        for name in ('a.jsonl', 'b.jsonl'):
            code, _, _ = run_cli('gen-data', '--env', 'bandit', '--n', 500, '--seed', 1,
                                 '--out', self.dir / name, '--reference-episodes', 5)
            self.assertEqual(code, 0)
        self.assertEqual((self.dir / 'a.jsonl').read_bytes(), (self.dir / 'b.jsonl').read_bytes())
        refs = json.loads(references_path(self.dir / 'a.jsonl').read_text())
        self.assertEqual(refs['env'], 'bandit')
        self.assertGreater(refs['expert'], refs['random'])

    def test_gen_data_unknown_behavior(self):
        code, _, err = run_cli('gen-data', '--env', 'pointmass', '--behavior', 'default',
                               '--out', self.dir / 'd.jsonl')
        self.assertEqual(code, 2)
        self.assertIn('behavior', err)
        self.assertFalse((self.dir / 'd.jsonl').exists())

    def test_train_missing_field(self):
        data = TrainConfigFactory()
        del data['method']
        code, _, err = run_cli('train', '--config', self.write_config(data), '--out', self.dir / 'out')
        self.assertEqual(code, 2)
        self.assertIn('method', err)
        self.assertEqual(len(err.strip().splitlines()), 1)
        self.assertFalse((self.dir / 'out').exists())

    def test_train_bad_json(self):
        path = self.dir / 'broken.json'
        path.write_text('{"env": ')
        self.assertEqual(run_cli('train', '--config', path)[0], 2)
        self.assertEqual(run_cli('train', '--config', self.dir / 'nope.json')[0], 2)

    def test_train_missing_dataset_path(self):
        config = self.write_config(TrainConfigFactory(dataset={'path': str(self.dir / 'no.jsonl')}))
        code, _, err = run_cli('train', '--config', config, '--out', self.dir / 'out')
        self.assertEqual(code, 2)
        self.assertIn('dataset.path', err)

    def test_train_writes_reproducible_artifacts(self):
        config = self.write_config(TrainConfigFactory())
        for name in ('first', 'second'):
            code, _, _ = run_cli('train', '--config', config, '--out', self.dir / name)
            self.assertEqual(code, 0)

        for seed in (0, 1):
            first = self.dir / 'first' / f'seed_{seed}'
            second = self.dir / 'second' / f'seed_{seed}'
            for artifact in ('metrics.csv', 'result.json', 'agent/actor.json'):
                self.assertEqual((first / artifact).read_bytes(), (second / artifact).read_bytes())
            self.assertTrue((first / 'run_meta.json').exists())

        result = json.loads((self.dir / 'first' / 'seed_0' / 'result.json').read_text())
        self.assertEqual(result['method'], 'abr')
        self.assertEqual(result['config']['total_steps'], 10)
        self.assertEqual([r['step'] for r in read_csv(self.dir / 'first' / 'seed_0' / 'metrics.csv')],
                         ['5', '10'])

    def test_train_baseline_then_eval(self):
        config = self.write_config(TrainConfigFactory(method='td3bc', seeds=[0]))
        self.assertEqual(run_cli('train', '--config', config, '--out', self.dir / 'out')[0], 0)
        result = json.loads((self.dir / 'out' / 'seed_0' / 'result.json').read_text())
        self.assertEqual(result['alpha'], 0.4)

        code, out, _ = run_cli('eval', '--checkpoint', self.dir / 'out' / 'seed_0' / 'agent',
                               '--env', 'bandit', '--dataset', self.dir / 'out' / 'dataset.jsonl',
                               '--episodes', 3, '--reference-episodes', 5)
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertGreaterEqual(report['energy_distance'], 0.0)
        self.assertEqual(report['episodes'], 3)
        self.assertEqual(report['references'], result['references'])

    def test_eval_missing_checkpoint(self):
        self.assertEqual(run_cli('gen-data', '--env', 'bandit', '--n', 50, '--out',
                                 self.dir / 'd.jsonl', '--reference-episodes', 5)[0], 0)
        code, _, _ = run_cli('eval', '--checkpoint', self.dir / 'missing', '--env', 'bandit',
                             '--dataset', self.dir / 'd.jsonl')
        self.assertEqual(code, 1)

    def test_sweep_and_aggregate_only(self):
        config = self.write_config(SweepConfigFactory(), 'sweep.json')
        out = self.dir / 'sweep'
        code, _, _ = run_cli('sweep', '--config', config, '--out', out)
        self.assertEqual(code, 0)

        rows = read_csv(out / 'aggregate.csv')
        self.assertEqual([(r['method'], r['alpha']) for r in rows],
                         [('abr', '0.0'), ('abr', '0.1'), ('bc', '')])
        self.assertTrue(all(r['seeds'] == '2' for r in rows))
        before = (out / 'aggregate.csv').read_bytes()

        self.assertEqual(run_cli('sweep', '--config', config, '--out', out, '--aggregate-only')[0], 0)
        self.assertEqual((out / 'aggregate.csv').read_bytes(), before)

        shutil.rmtree(out / 'bc' / 'seed_1')
        code, _, err = run_cli('sweep', '--config', config, '--out', out, '--aggregate-only')
        self.assertEqual(code, 1)
        self.assertIn(str(Path('bc') / 'seed_1'), err)

    def test_landscape(self):
        out = self.dir / 'landscape.csv'
        code, _, _ = run_cli('landscape', '--method', 'abr', '--alphas', 0.1, '--steps', 2,
                             '--grid', 11, '--n', 100, '--out', out)
        self.assertEqual(code, 0)
        rows = read_csv(out)
        self.assertEqual(len(rows), 11)
        self.assertEqual(rows[0]['alpha'], '0.1')

    def test_landscape_rejects_negative_weight(self):
        code, _, _ = run_cli('landscape', '--method', 'td3bc', '--alphas', -1, '--out',
                             self.dir / 'x.csv')
        self.assertEqual(code, 2)


@unittest.skipUnless(RUN_SLOW, 'set ABR_RUN_SLOW=1 for the desk-scale sweep')
class HyperparameterSweepTestCase(TempDirMixin, SimpleTestCase):
    """ABR on point-mass mixed data, 4 seeds per point."""

    def _sweep(self, out, alphas, num_samples):
        data = SweepConfigFactory(
            env={'kind': 'pointmass', 'behavior': 'mixed'},
            dataset={'n_transitions': 20_000, 'seed': 0},
            abr={'hidden_sizes': [64, 64], 'total_steps': 20_000, 'log_every': 5000},
            evaluation={'episodes': 10, 'reference_episodes': 100},
            seeds=[0, 1, 2, 3],
            grid={'methods': ['abr'], 'alphas': alphas, 'betas': [1.0],
                  'num_samples': num_samples},
        )
        run = validate_run_config(data, SweepRunSerializer)
        return run_sweep(run, self.dir / out, workers=4, reference_episodes=100)

    def test_one_uniform_sample_is_enough(self):
        one, ten = self._sweep('samples', [0.15], [1, 10])
        self.assertLessEqual(abs(one['mean_score'] - ten['mean_score']), 5.0)

    def test_moderate_alphas_score_alike(self):
        rows = self._sweep('alphas', [0.1, 0.15, 0.2], [1])
        self.assertEqual([row['alpha'] for row in rows], [0.1, 0.15, 0.2])
        means = [row['mean_score'] for row in rows]
        self.assertLessEqual(max(means) - min(means), 10.0)


@unittest.skipUnless(RUN_SLOW, 'set ABR_RUN_SLOW=1 for desk-scale training runs')
class OfflineLearningTestCase(SimpleTestCase):
    """
    ABR against BC and plain TD3 on point-mass data, 50k steps and 4 seeds
    per run. Scores come from the saved checkpoints.
    """

    seeds = [0, 1, 2, 3]

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls.tmp.name)
        cls.scores = {
            (method, behavior): cls._mean_score(method, behavior)
            for behavior, methods in (('mixed', ('abr', 'bc', 'td3')), ('expert', ('abr', 'bc')))
            for method in methods
        }

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    @classmethod
    def _mean_score(cls, method, behavior):
        dataset_path = cls.dir / behavior / 'dataset.jsonl'
        if not dataset_path.exists():
            gen_data('pointmass', behavior, 20_000, 0, dataset_path, 100)
        section = {'hidden_sizes': [64, 64], 'total_steps': 50_000, 'log_every': 10_000}
        data = TrainConfigFactory(
            env={'kind': 'pointmass', 'behavior': behavior},
            dataset={'path': str(dataset_path)},
            method=method,
            abr={**section, 'alpha': 0.15, 'beta': 1.0, 'num_samples': 1},
            baseline=section,
            evaluation={'episodes': 10, 'reference_episodes': 100},
            seeds=cls.seeds,
        )
        out = cls.dir / behavior / method
        train_run(validate_run_config(data, TrainRunSerializer), out, reference_episodes=100)
        scores = [
            evaluate_checkpoint(seed_dir(out, seed) / 'agent', 'pointmass', dataset_path,
                                episodes=10, seed=seed, reference_episodes=100)['normalized_score']
            for seed in cls.seeds
        ]
        return float(np.mean(scores))

    def test_abr_matches_bc_on_mixed_data(self):
        self.assertGreaterEqual(self.scores['abr', 'mixed'], self.scores['bc', 'mixed'])

    def test_abr_keeps_up_with_bc_on_expert_data(self):
        self.assertGreaterEqual(self.scores['abr', 'expert'], 0.9 * self.scores['bc', 'expert'])

    def test_unregularized_td3_falls_behind_on_mixed_data(self):
        self.assertLess(self.scores['td3', 'mixed'], self.scores['abr', 'mixed'])
