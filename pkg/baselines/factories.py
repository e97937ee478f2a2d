"""
Factory definitions for baseline configs used in tests
"""
import factory

from .config import BaselineConfig


class BaselineConfigFactory(factory.Factory):
    class Meta:
        model = BaselineConfig

    method = 'td3bc'
    alpha_fixed = 2.5
    hidden_sizes = (16, 16)
    hidden_activation = 'tanh'
    batch_size = 16
    total_steps = 20
    log_every = 5
    seed = factory.Sequence(lambda n: n)
