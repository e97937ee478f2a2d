"""
Factory definitions for networks used in tests
"""
import factory

from .network import mlp_init


class MlpFactory(factory.Factory):
    """Small critic-shaped network; override layer_sizes/activations as needed"""

    class Meta:
        model = mlp_init

    layer_sizes = factory.LazyFunction(lambda: [3, 16, 16, 1])
    hidden_activation = 'tanh'
    output_activation = 'identity'
    seed = factory.Sequence(lambda n: n)


class ActorNetFactory(factory.Factory):
    # Not a MlpFactory subclass: factory_boy requires a class model for factory inheritance
    class Meta:
        model = mlp_init

    layer_sizes = factory.LazyFunction(lambda: [2, 16, 16, 1])
    hidden_activation = 'tanh'
    output_activation = 'tanh'
    seed = factory.Sequence(lambda n: n)
