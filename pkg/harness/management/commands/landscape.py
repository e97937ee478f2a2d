"""
Management command to trace learned objective landscapes on the bandit

Usage:
    python manage.py landscape --method abr --alphas 0.05 0.15 0.4 --seeds 0 1 2 3 --out abr.csv
    python manage.py landscape --method td3bc --alphas 0.01 100 --dataset bandit.jsonl --out td3bc.csv
"""
from django.conf import settings

from core.exceptions import ConfigError
from data.dataset import dataset_load
from envs.bandit import BanditEnv
from envs.generation import generate_dataset
from harness.management.base import HarnessCommand
from oracle.grid import action_grid
from oracle.landscape import DEFAULT_STEPS, LANDSCAPE_METHODS, landscape, write_landscape


class Command(HarnessCommand):
    help = 'Train on the bandit and write the actor objective over an action grid'

    def add_arguments(self, parser):
        parser.add_argument('--method', choices=LANDSCAPE_METHODS, required=True)
        parser.add_argument('--alphas', type=float, nargs='+', required=True,
                            help='alpha (abr) or fixed weight (td3bc) values')
        parser.add_argument('--seeds', type=int, nargs='+', default=[0])
        parser.add_argument('--steps', type=int, default=DEFAULT_STEPS, help='Gradient steps')
        parser.add_argument('--dataset', help='Bandit dataset file (default: generate one)')
        parser.add_argument('--n', type=int, default=10_000, help='Transitions when generating')
        parser.add_argument('--data-seed', type=int, default=0, help='Seed when generating')
        parser.add_argument('--grid', type=int, default=None,
                            help='Grid cells (default: ABR_LANDSCAPE_GRID)')
        parser.add_argument('--out', required=True, help='Output CSV')

    def run(self, **options):
        if any(alpha < 0 for alpha in options['alphas']):
            raise ConfigError('must be non-negative', 'alphas')
        if options['steps'] < 0:
            raise ConfigError('must be non-negative', 'steps')
        if options['n'] < 1:
            raise ConfigError('must be at least 1', 'n')

        env = BanditEnv()
        if options['dataset']:
            dataset = dataset_load(options['dataset'])
        else:
            dataset = generate_dataset(env, 'default', options['n'], options['data_seed'])
        grid = action_grid(options['grid'] or settings.ABR_LANDSCAPE_GRID,
                           low=env.action_low, high=env.action_high)

        curves = landscape(dataset, options['method'], options['alphas'], seeds=options['seeds'],
                           steps=options['steps'], grid=grid, env=env)
        path = write_landscape(options['out'], curves)

        for curve in curves:
            self.stdout.write(
                f'  alpha={curve.alpha:g} seed={curve.seed}: argmax a={curve.argmax_action:.3f} '
                f'(behavior density {curve.argmax_density:.3g})'
            )
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(curves)} curve(s) to {path}'))
