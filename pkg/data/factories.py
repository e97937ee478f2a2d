"""
Factory definitions for datasets used in tests
"""
import factory
import numpy as np

from core.seeding import make_rng

from .dataset import Dataset


def _random_rows(o, cols, key, low=-1.0, high=1.0):
    return make_rng(o.seed, 'factory', key).uniform(low, high, size=(o.size, cols))


class DatasetFactory(factory.Factory):
    """Random one-step dataset with actions inside [-1, 1]^action_dim"""

    class Meta:
        model = Dataset
        exclude = ('size', 'state_dim', 'action_dim', 'seed')

    size = 32
    state_dim = 2
    action_dim = 1
    seed = factory.Sequence(lambda n: n)

    states = factory.LazyAttribute(lambda o: _random_rows(o, o.state_dim, 'states'))
    actions = factory.LazyAttribute(lambda o: _random_rows(o, o.action_dim, 'actions'))
    rewards = factory.LazyAttribute(lambda o: _random_rows(o, 1, 'rewards')[:, 0])
    next_states = factory.LazyAttribute(lambda o: _random_rows(o, o.state_dim, 'next_states'))
    dones = factory.LazyAttribute(lambda o: np.arange(o.size) % 4 == 3)
    action_low = factory.LazyAttribute(lambda o: -np.ones(o.action_dim))
    action_high = factory.LazyAttribute(lambda o: np.ones(o.action_dim))
    provenance = factory.LazyAttribute(lambda o: f'factory/seed={o.seed}')
