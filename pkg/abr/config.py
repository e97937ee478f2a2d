"""
Hyperparameters of the TD3 backbone and of adaptive behavior regularization.
"""
from dataclasses import asdict, dataclass, field
from typing import Tuple

from core.exceptions import ConfigError
from nn.network import HIDDEN_ACTIVATIONS


@dataclass
class Td3Config:
    """Fields shared by every actor-critic run (ABR and the baselines)."""

    # TD3 core
    gamma: float = 0.99
    tau: float = 0.005
    policy_noise_sd: float = 0.2
    noise_clip: float = 0.5
    policy_delay: int = 2
    clip_targets: bool = True

    # Optimization
    batch_size: int = 256
    total_steps: int = 50_000
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4

    # Networks
    hidden_sizes: Tuple[int, ...] = field(default=(256, 256))
    hidden_activation: str = 'relu'

    # Bookkeeping
    seed: int = 0
    log_every: int = 1000
    eval_every: int = 0
    eval_episodes: int = 10

    def validate(self):
        """Raise ConfigError naming the first invalid field."""
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError('must lie in [0, 1)', 'gamma')
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError('must lie in (0, 1]', 'tau')
        if self.policy_noise_sd < 0:
            raise ConfigError('must be non-negative', 'policy_noise_sd')
        if self.noise_clip < 0:
            raise ConfigError('must be non-negative', 'noise_clip')
        if self.policy_delay < 1:
            raise ConfigError('must be at least 1', 'policy_delay')
        if self.batch_size < 1:
            raise ConfigError('must be at least 1', 'batch_size')
        if self.total_steps < 0:
            raise ConfigError('must be non-negative', 'total_steps')
        if self.lr_actor <= 0:
            raise ConfigError('must be positive', 'lr_actor')
        if self.lr_critic <= 0:
            raise ConfigError('must be positive', 'lr_critic')
        if not self.hidden_sizes or any(int(n) <= 0 for n in self.hidden_sizes):
            raise ConfigError('needs at least one positive layer size', 'hidden_sizes')
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f'must be one of {", ".join(HIDDEN_ACTIVATIONS)}', 'hidden_activation')
        if self.log_every < 1:
            raise ConfigError('must be at least 1', 'log_every')
        if self.eval_every < 0:
            raise ConfigError('must be non-negative', 'eval_every')
        if self.eval_episodes < 1:
            raise ConfigError('must be at least 1', 'eval_episodes')
        return self

    def to_dict(self):
        data = asdict(self)
        data['hidden_sizes'] = list(self.hidden_sizes)
        return data


@dataclass
class AbrConfig(Td3Config):
    """
    ABR hyperparameters.

    alpha weighs the uniform-action regularizer, beta scales lambda and
    num_samples is the number of uniform actions drawn per transition (M).
    """

    alpha: float = 0.15
    beta: float = 1.0
    num_samples: int = 1

    def validate(self):
        super().validate()
        if self.alpha < 0:
            raise ConfigError('must be non-negative', 'alpha')
        if self.beta < 0:
            raise ConfigError('must be non-negative', 'beta')
        if self.num_samples < 1:
            raise ConfigError('must be at least 1', 'num_samples')
        return self
