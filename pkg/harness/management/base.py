"""
Shared behavior of the harness management commands.
"""
import json
import logging

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import AbrLabError, ConfigError
from core.io import load_json, to_builtin

logger = logging.getLogger(__name__)

CONFIG_EXIT = 2
RUNTIME_EXIT = 1


class HarnessCommand(BaseCommand):
    """
    Base command: subclasses implement run(**options).

    ConfigError becomes CommandError(returncode=2); any other abrlab error,
    file-system error or ValueError becomes CommandError(returncode=1).
    """

    requires_system_checks = []

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except ConfigError as e:
            raise CommandError(f'invalid configuration: {e}', returncode=CONFIG_EXIT) from e
        except (AbrLabError, OSError, ValueError) as e:
            logger.error(f'{self.__module__.rsplit(".", 1)[-1]} failed: {e}')
            raise CommandError(str(e), returncode=RUNTIME_EXIT) from e

    def run(self, **options):
        raise NotImplementedError

    def load_config(self, path):
        try:
            return load_json(path)
        except FileNotFoundError:
            raise ConfigError(f'{path} does not exist', 'config') from None
        except json.JSONDecodeError as e:
            raise ConfigError(f'{path} is not valid JSON ({e})', 'config') from e

    def write_json(self, data):
        self.stdout.write(json.dumps(to_builtin(data), sort_keys=True, indent=2))
