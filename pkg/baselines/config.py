from dataclasses import dataclass

from abr.config import Td3Config
from core.exceptions import ConfigError

METHODS = ('bc', 'td3', 'td3bc')


@dataclass
class BaselineConfig(Td3Config):
    """Behavior cloning, plain offline TD3 or TD3+BC with a fixed weight."""

    method: str = 'td3bc'
    # Weight of the behavior-cloning term; the value term is scaled to unit size by lambda_n.
    alpha_fixed: float = 0.4

    def validate(self):
        super().validate()
        if self.method not in METHODS:
            raise ConfigError(f'must be one of {", ".join(METHODS)}', 'method')
        if self.alpha_fixed < 0:
            raise ConfigError('must be non-negative', 'alpha_fixed')
        return self
