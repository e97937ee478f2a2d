"""
Management command to run a hyperparameter sweep

Usage:
    python manage.py sweep --config sweep.json
    python manage.py sweep --config sweep.json --workers 4
    python manage.py sweep --config sweep.json --aggregate-only
"""
from pathlib import Path

from django.conf import settings

from core.exceptions import ConfigError
from harness.management.base import HarnessCommand
from harness.runs import AGGREGATE_FILE, aggregate_sweep, run_sweep
from harness.serializers import SweepRunSerializer, validate_run_config


class Command(HarnessCommand):
    help = 'Train every (method, alpha, beta, M, seed) point and aggregate the scores'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Sweep configuration (JSON)')
        parser.add_argument('--out', help='Output directory (default: ABR_OUT_DIR/<config name>)')
        parser.add_argument('--workers', type=int, default=None,
                            help='Parallel processes (default: ABR_SWEEP_WORKERS)')
        parser.add_argument('--aggregate-only', action='store_true',
                            help='Only aggregate existing run directories')

    def run(self, **options):
        run = validate_run_config(self.load_config(options['config']), SweepRunSerializer)
        workers = settings.ABR_SWEEP_WORKERS if options['workers'] is None else options['workers']
        if workers < 1:
            raise ConfigError('must be at least 1', 'workers')
        out_dir = Path(options['out'] or run.get('out_dir')
                       or settings.ABR_OUT_DIR / Path(options['config']).stem)

        if options['aggregate_only']:
            rows = aggregate_sweep(run, out_dir)
        else:
            rows = run_sweep(run, out_dir, workers, settings.ABR_REFERENCE_EPISODES)

        for row in rows:
            self.stdout.write(
                f'  {row["method"]} alpha={row["alpha"]} beta={row["beta"]} M={row["num_samples"]}: '
                f'{row["mean_score"]:.2f} +- {row["sd_score"]:.2f} ({row["seeds"]} seeds)'
            )
        self.stdout.write(self.style.SUCCESS(f'Wrote {out_dir / AGGREGATE_FILE}'))
