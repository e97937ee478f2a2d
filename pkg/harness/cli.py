"""
The `abr` console script.

Usage:
    abr gen-data --env bandit --n 10000 --seed 1 --out d.jsonl
    abr train --config run.json
    abr eval --checkpoint runs/run/seed_0/agent --env bandit --dataset d.jsonl
    abr landscape --method abr --alphas 0.05 0.15 0.4 --out landscape.csv
    abr oracle-check --problems 1000 --seed 7
    abr sweep --config sweep.json [--aggregate-only]

Each subcommand is the harness management command of the same name. Exit
codes: 0 success, 1 runtime failure, 2 invalid configuration or arguments.
"""
import os
import sys

SUBCOMMANDS = {
    'gen-data': 'gen_data',
    'train': 'train',
    'eval': 'eval',
    'landscape': 'landscape',
    'oracle-check': 'oracle_check',
    'sweep': 'sweep',
}
USAGE = f'usage: abr {{{",".join(SUBCOMMANDS)}}} [options]\n'


def cli(argv=None):
    """
    Run one subcommand.

    Returns:
        Process exit code; failures also print a one-line diagnostic on stderr
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help'):
        sys.stderr.write(USAGE)
        return 0 if argv else 2
    name = SUBCOMMANDS.get(argv[0])
    if name is None:
        sys.stderr.write(f'abr: unknown subcommand {argv[0]!r}\n{USAGE}')
        return 2

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'abrlab.settings')
    import django
    from django.core.management import load_command_class

    django.setup()
    command = load_command_class('harness', name)
    try:
        # Django prints "CommandError: ..." and exits with the error's returncode
        command.run_from_argv(['abr', argv[0], *argv[1:]])
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    return 0


def main():
    sys.exit(cli())
