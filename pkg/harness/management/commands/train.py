"""
Management command to train ABR or a baseline from a run configuration

Usage:
    python manage.py train --config run.json
    python manage.py train --config run.json --out runs/abr_bandit
"""
from pathlib import Path

from django.conf import settings

from harness.management.base import HarnessCommand
from harness.runs import train_run
from harness.serializers import TrainRunSerializer, validate_run_config


class Command(HarnessCommand):
    help = 'Train one method for every configured seed'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Run configuration (JSON)')
        parser.add_argument('--out', help='Output directory (default: ABR_OUT_DIR/<config name>)')

    def run(self, **options):
        run = validate_run_config(self.load_config(options['config']), TrainRunSerializer)
        out_dir = Path(options['out'] or run.get('out_dir')
                       or settings.ABR_OUT_DIR / Path(options['config']).stem)

        self.stdout.write(f'Training {run["method"]} on seeds {run["seeds"]} into {out_dir}')
        results = train_run(run, out_dir, settings.ABR_REFERENCE_EPISODES)

        for result in results:
            self.stdout.write(
                f'  seed {result["seed"]}: return {result["raw_return"]:.4f}, '
                f'normalized score {result["normalized_score"]:.2f}'
            )
        self.stdout.write(self.style.SUCCESS(f'Finished {len(results)} run(s)'))
