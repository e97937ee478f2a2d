"""
Management command to generate an offline dataset

Usage:
    python manage.py gen_data --env bandit --n 10000 --seed 1 --out d.jsonl
    python manage.py gen_data --env pointmass --behavior expert --n 50000 --out expert.jsonl
"""
from django.conf import settings

from core.exceptions import ConfigError
from harness.environments import ENV_KINDS, default_behavior
from harness.management.base import HarnessCommand
from harness.runs import gen_data


class Command(HarnessCommand):
    help = 'Generate an offline dataset and its reference returns'

    def add_arguments(self, parser):
        parser.add_argument('--env', choices=ENV_KINDS, required=True, help='Environment kind')
        parser.add_argument(
            '--behavior',
            help='Behavior policy (bandit: default; pointmass: expert, medium, mixed, random)'
        )
        parser.add_argument('--n', type=int, default=10_000, help='Number of transitions')
        parser.add_argument('--seed', type=int, default=0, help='Dataset seed')
        parser.add_argument('--out', required=True, help='Output dataset file (.jsonl)')
        parser.add_argument(
            '--reference-episodes',
            type=int,
            default=None,
            help='Episodes per reference policy (default: ABR_REFERENCE_EPISODES)'
        )

    def run(self, **options):
        if options['n'] < 1:
            raise ConfigError('must be at least 1', 'n')
        episodes = options['reference_episodes'] or settings.ABR_REFERENCE_EPISODES
        behavior = options['behavior'] or default_behavior(options['env'])

        path, refs = gen_data(options['env'], behavior, options['n'], options['seed'],
                              options['out'], episodes)

        self.stdout.write(self.style.SUCCESS(f'Wrote {options["n"]} transitions to {path}'))
        self.stdout.write(f'  Reference returns: random={refs["random"]:.4f} expert={refs["expert"]:.4f}')
