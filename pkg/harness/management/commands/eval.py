"""
Management command to evaluate a saved agent

Usage:
    python manage.py eval --checkpoint runs/x/seed_0/agent --env bandit --dataset d.jsonl
"""
from django.conf import settings

from core.exceptions import ConfigError
from harness.environments import ENV_KINDS
from harness.management.base import HarnessCommand
from harness.runs import evaluate_checkpoint


class Command(HarnessCommand):
    help = 'Evaluate a checkpoint: return, normalized score and action energy distance'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Agent checkpoint directory')
        parser.add_argument('--env', choices=ENV_KINDS, required=True, help='Environment kind')
        parser.add_argument('--dataset', required=True, help='Dataset the agent was trained on')
        parser.add_argument('--episodes', type=int, default=10, help='Evaluation episodes')
        parser.add_argument('--seed', type=int, default=0, help='Evaluation seed')
        parser.add_argument(
            '--reference-episodes',
            type=int,
            default=None,
            help='Episodes per reference policy (default: ABR_REFERENCE_EPISODES)'
        )

    def run(self, **options):
        if options['episodes'] < 1:
            raise ConfigError('must be at least 1', 'episodes')
        report = evaluate_checkpoint(
            options['checkpoint'],
            options['env'],
            options['dataset'],
            options['episodes'],
            options['seed'],
            options['reference_episodes'] or settings.ABR_REFERENCE_EPISODES,
        )
        self.write_json(report)
