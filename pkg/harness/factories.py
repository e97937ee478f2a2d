"""
Factory definitions for run configuration documents used in tests
"""
import factory


class TrainConfigFactory(factory.DictFactory):
    """Tiny bandit run: small networks, a few steps, cheap references"""

    env = factory.Dict({'kind': 'bandit'})
    dataset = factory.Dict({'n_transitions': 200, 'seed': 0})
    method = 'abr'
    abr = factory.Dict({
        'hidden_sizes': [8, 8],
        'batch_size': 16,
        'total_steps': 10,
        'log_every': 5,
    })
    baseline = factory.Dict({
        'hidden_sizes': [8, 8],
        'batch_size': 16,
        'total_steps': 10,
        'log_every': 5,
    })
    evaluation = factory.Dict({'episodes': 2, 'reference_episodes': 5})
    seeds = factory.List([0, 1])


class SweepConfigFactory(TrainConfigFactory):
    class Meta:
        exclude = ('method',)

    grid = factory.Dict({
        'methods': ['abr', 'bc'],
        'alphas': [0.0, 0.1],
        'betas': [1.0],
        'num_samples': [1],
    })
