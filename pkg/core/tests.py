import logging
import math
import tempfile
from pathlib import Path

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from .exceptions import ConfigError, DatasetError, IncompleteRunError
from .io import dump_json, format_cell, json_line, load_json, read_csv, write_csv
from .seeding import derive_seed, make_rng


class SeedingTestCase(SimpleTestCase):

    def test_same_key_same_stream(self):
        a = make_rng(3, 'init', 'critic1').random(5)
        b = make_rng(3, 'init', 'critic1').random(5)
        self.assertTrue(np.array_equal(a, b))

    def test_keys_separate_streams(self):
        a = make_rng(3, 'init', 'critic1').random(5)
        b = make_rng(3, 'init', 'critic2').random(5)
        c = make_rng(4, 'init', 'critic1').random(5)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_integer_and_string_keys(self):
        a = make_rng(0, 'episode', 17).integers(0, 1 << 30)
        b = make_rng(0, 'episode', 17).integers(0, 1 << 30)
        self.assertEqual(a, b)

    def test_derive_seed(self):
        seed = derive_seed(1, 'init', 'actor')
        self.assertIsInstance(seed, int)
        self.assertEqual(seed, derive_seed(1, 'init', 'actor'))
        self.assertTrue(0 <= seed < 2 ** 32)


class JsonTestCase(SimpleTestCase):

    def test_json_line_is_compact_and_sorted(self):
        line = json_line({'b': np.float64(0.5), 'a': np.arange(3)})
        self.assertEqual(line, '{"a":[0,1,2],"b":0.5}')

    def test_non_finite_values_rejected(self):
        with self.assertRaises(ValueError):
            json_line({'x': math.nan})

    def test_float_round_trip_is_exact(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = dump_json(Path(tmp) / 'nested' / 'x.json', {'v': 0.1 + 0.2, 'w': [1e-300]})
            data = load_json(path)
            self.assertTrue(path.read_text().endswith('\n'))
        self.assertEqual(data['v'], 0.1 + 0.2)
        self.assertEqual(data['w'], [1e-300])


class CsvTestCase(SimpleTestCase):

    def test_cells(self):
        self.assertEqual(format_cell(None), '')
        self.assertEqual(format_cell(math.nan), '')
        self.assertEqual(format_cell(np.float64(0.1)), '0.1')
        self.assertEqual(format_cell(np.int64(7)), '7')
        self.assertEqual(format_cell('abr'), 'abr')

    def test_write_and_read(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_csv(Path(tmp) / 'm.csv', ('step', 'loss'), [(1, 0.25), (2, None)])
            self.assertEqual(path.read_bytes(), b'step,loss\n1,0.25\n2,\n')
            self.assertEqual(read_csv(path), [{'step': '1', 'loss': '0.25'}, {'step': '2', 'loss': ''}])


class ExceptionTestCase(SimpleTestCase):

    def test_config_error_names_field(self):
        e = ConfigError('must be non-negative', 'abr.alpha')
        self.assertEqual(str(e), 'abr.alpha: must be non-negative')
        self.assertEqual(e.message, 'must be non-negative')
        self.assertEqual(str(ConfigError('bad')), 'bad')

    def test_dataset_error_names_row(self):
        self.assertEqual(str(DatasetError('non-finite rewards', row=0)), 'row 0: non-finite rewards')

    def test_incomplete_runs_listed(self):
        e = IncompleteRunError(['a/seed_0', 'a/seed_1'])
        self.assertEqual(e.missing, ['a/seed_0', 'a/seed_1'])
        self.assertIn('a/seed_1', str(e))


class LoggingSettingsTestCase(SimpleTestCase):

    def test_every_app_logs_at_configured_level(self):
        level = logging.getLevelName(settings.LOGGING['loggers']['abr']['level'].upper())
        for name in ('core.io', 'nn.network', 'envs.generation', 'data.dataset', 'abr.training',
                     'baselines.training', 'oracle.checks', 'harness.runs'):
            self.assertEqual(logging.getLogger(name).getEffectiveLevel(), level, name)
