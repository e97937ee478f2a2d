"""
Management command to run the closed-form oracle checks

Usage:
    python manage.py oracle_check --problems 1000 --seed 7
    python manage.py oracle_check --out oracle.json
"""
from django.conf import settings
from django.core.management.base import CommandError

from core.exceptions import ConfigError
from core.io import dump_json
from harness.management.base import RUNTIME_EXIT, HarnessCommand
from oracle.checks import VARIANCE_DRAWS, run_oracle_suite


class Command(HarnessCommand):
    help = 'Verify the regularized backup, bias bound and variance claims on random grid problems'

    def add_arguments(self, parser):
        parser.add_argument('--problems', type=int, default=1000, help='Random grid problems')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the problem generator')
        parser.add_argument('--grid', type=int, default=None,
                            help='Cells of the action grid (default: ABR_LANDSCAPE_GRID)')
        parser.add_argument('--draws', type=int, default=VARIANCE_DRAWS,
                            help='Monte-Carlo draws per variance check')
        parser.add_argument('--out', help='Also write the JSON report to this file')

    def run(self, **options):
        for name in ('problems', 'draws'):
            if options[name] < 1:
                raise ConfigError('must be at least 1', name)
        grid = options['grid'] or settings.ABR_LANDSCAPE_GRID

        report = run_oracle_suite(problems=options['problems'], seed=options['seed'],
                                  grid_cells=grid, variance_draws=options['draws'])
        if options['out']:
            dump_json(options['out'], report)
        self.write_json(report)
        if not report['holds']:
            failed = ', '.join(name for name, check in report['checks'].items() if not check['holds'])
            raise CommandError(f'oracle checks failed: {failed}', returncode=RUNTIME_EXIT)
