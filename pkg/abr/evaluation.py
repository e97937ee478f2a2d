"""
Policy evaluation and normalized scores.
"""
import logging

import numpy as np

from core.exceptions import PreconditionError
from envs.generation import rollout
from nn.network import Mlp

from .agent import actor_actions

logger = logging.getLogger(__name__)


def actor_policy(actor, low, high):
    """Deterministic policy (state, rng) -> action for an actor network."""

    def act(state, rng):
        return actor_actions(actor, np.asarray(state).reshape(1, -1), low, high)[0][0]

    return act


def evaluate_policy(env, actor, episodes, rng):
    """
    Mean undiscounted return of deterministic rollouts.

    Args:
        env: BanditEnv or PointMassEnv
        actor: Actor Mlp (scaled to env.bounds()) or a policy callable (state, rng)
        episodes: Number of episodes, at least 1
        rng: Generator for reward noise

    Returns:
        float
    """
    if episodes < 1:
        raise ValueError(f'episodes must be at least 1, got {episodes}')
    if isinstance(actor, Mlp):
        actor = actor_policy(actor, *env.bounds())
    returns = [rollout(env, actor, rng)[1] for _ in range(int(episodes))]
    return float(np.mean(returns))


def normalized_score(raw, random_ref, expert_ref):
    """100 * (raw - random) / (expert - random)."""
    if not np.isfinite(random_ref) or not np.isfinite(expert_ref) or expert_ref == random_ref:
        raise PreconditionError(f'degenerate reference returns: random={random_ref} expert={expert_ref}')
    return 100.0 * (raw - random_ref) / (expert_ref - random_ref)
