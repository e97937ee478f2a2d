"""
Factory definitions for oracle grid problems used in tests
"""
import factory
import numpy as np

from core.seeding import make_rng

from .grid import GridProblem, action_grid


class GridProblemFactory(factory.Factory):
    """Random per-cell problem on a small 1-D grid; preconditions hold by construction"""

    class Meta:
        model = GridProblem
        exclude = ('n_bins', 'seed')

    n_bins = 21
    seed = factory.Sequence(lambda n: n)

    grid = factory.LazyAttribute(lambda o: action_grid(o.n_bins))
    behavior_density = factory.LazyAttribute(
        lambda o: make_rng(o.seed, 'density').uniform(0.0, 2.0, o.n_bins))
    backup = factory.LazyAttribute(
        lambda o: make_rng(o.seed, 'backup').uniform(-1.0, 1.0, o.n_bins) * o.r_max / (1 - o.gamma))
    surrogate = factory.LazyAttribute(
        lambda o: make_rng(o.seed, 'surrogate').uniform(-1.0, 1.0, o.n_bins) * o.delta)
    alpha = 0.2
    r_max = 1.0
    gamma = 0.9
    sigma = 0.25
    delta = 5.0
    penalty = factory.LazyAttribute(lambda o: np.zeros(o.n_bins))
