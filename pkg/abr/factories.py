"""
Factory definitions for ABR configs and agents used in tests
"""
import factory
import numpy as np

from .agent import build_agent
from .config import AbrConfig


class AbrConfigFactory(factory.Factory):
    """Desk-sized config: small tanh networks, short runs"""

    class Meta:
        model = AbrConfig

    hidden_sizes = (16, 16)
    hidden_activation = 'tanh'
    batch_size = 16
    total_steps = 20
    log_every = 5
    seed = factory.Sequence(lambda n: n)


class AgentFactory(factory.Factory):
    class Meta:
        model = build_agent

    state_dim = 2
    action_dim = 1
    action_low = factory.LazyAttribute(lambda o: -np.ones(o.action_dim))
    action_high = factory.LazyAttribute(lambda o: np.ones(o.action_dim))
    cfg = factory.SubFactory(AbrConfigFactory)
