"""
Offline dataset generation, rollouts and reference returns.

Point-mass behaviors:
    expert  - clipped PD controller
    medium  - expert plus N(0, 0.3^2) action noise, then clipped
    mixed   - alternating expert / medium episodes (50/50)
    random  - uniform actions over the box
Bandit behavior: a BehaviorPolicy (the default mixture when given 'default').
"""
import logging

import numpy as np

from core.exceptions import ConfigError
from core.seeding import make_rng
from data.dataset import Dataset

from .bandit import BanditEnv
from .behavior import BehaviorPolicy, behavior_sample, default_bandit_behavior
from .pointmass import PointMassEnv, expert_controller

logger = logging.getLogger(__name__)

POINTMASS_BEHAVIORS = ('expert', 'medium', 'mixed', 'random')


def uniform_policy(env):
    """Uniform-random policy over the environment's action box."""
    low, high = env.bounds()

    def act(state, rng):
        return rng.uniform(low, high)

    return act


def expert_policy(env):
    """Best known controller: the PD law, or the best arm of a bandit."""
    if isinstance(env, BanditEnv):
        best = np.array([env.best_action()])
        return lambda state, rng: best
    return lambda state, rng: expert_controller(env, state)


def medium_policy(env):
    def act(state, rng):
        noisy = expert_controller(env, state) + rng.normal(0.0, env.medium_noise_sd, size=2)
        return np.clip(noisy, -1.0, 1.0)

    return act


def rollout(env, policy, rng, max_steps=None):
    """
    Run one episode.

    Args:
        env: BanditEnv or PointMassEnv
        policy: Callable (state, rng) -> action
        rng: Generator for the policy and reward noise
        max_steps: Optional cap below the horizon

    Returns:
        (list of (s, a, r, s2, done) tuples, undiscounted return)
    """
    steps = env.horizon if max_steps is None else min(env.horizon, max_steps)
    state = env.reset()
    transitions = []
    total = 0.0
    for t in range(steps):
        action = np.asarray(policy(state, rng), dtype=np.float64).reshape(-1)
        next_state, reward, done = env.step(state, action, t, rng)
        transitions.append((state, action, reward, next_state, done))
        total += reward
        state = next_state
        if done:
            break
    return transitions, total


def resolve_behavior(env, behavior):
    """Normalize a behavior spec into a BehaviorPolicy (bandit) or a tag (point mass)."""
    if isinstance(env, BanditEnv):
        if isinstance(behavior, BehaviorPolicy):
            return behavior
        if behavior in (None, 'default'):
            return default_bandit_behavior()
        raise ConfigError(f'unknown bandit behavior {behavior!r}', 'behavior')
    if isinstance(env, PointMassEnv):
        if behavior in POINTMASS_BEHAVIORS:
            return behavior
        raise ConfigError(f'unknown point-mass behavior {behavior!r}; '
                          f'choose one of {", ".join(POINTMASS_BEHAVIORS)}', 'behavior')
    raise ConfigError(f'unsupported environment {type(env).__name__}', 'env')


def _bandit_dataset(env, behavior, n_transitions, seed):
    rng = make_rng(seed, 'dataset', 'bandit')
    state = env.reset()
    actions = behavior_sample(behavior, state, rng, n_transitions)
    rewards = env.mean_reward(actions[:, 0])
    if env.reward_noise_sd > 0:
        rewards = rewards + rng.normal(0.0, env.reward_noise_sd, size=n_transitions)
    states = np.tile(state, (n_transitions, 1))
    low, high = env.bounds()
    return Dataset(
        states=states,
        actions=actions,
        rewards=rewards,
        next_states=states.copy(),
        dones=np.ones(n_transitions, dtype=bool),
        action_low=low,
        action_high=high,
        provenance=f'bandit/default/n={n_transitions}/seed={seed}',
    )


def _episode_policy(env, tag, episode):
    if tag == 'mixed':
        tag = 'expert' if episode % 2 == 0 else 'medium'
    return {
        'expert': expert_policy,
        'medium': medium_policy,
        'random': uniform_policy,
    }[tag](env)


def _pointmass_dataset(env, tag, n_transitions, seed):
    rows = []
    episode = 0
    while len(rows) < n_transitions:
        # Each episode has its own stream, so episodes could run in any order
        rng = make_rng(seed, 'dataset', 'episode', episode)
        transitions, _ = rollout(env, _episode_policy(env, tag, episode), rng,
                                 max_steps=n_transitions - len(rows))
        rows.extend(transitions)
        episode += 1

    low, high = env.bounds()
    logger.debug(f'Generated {episode} point-mass episodes ({tag})')
    return Dataset(
        states=np.array([r[0] for r in rows]),
        actions=np.array([r[1] for r in rows]),
        rewards=np.array([r[2] for r in rows]),
        next_states=np.array([r[3] for r in rows]),
        dones=np.array([r[4] for r in rows], dtype=bool),
        action_low=low,
        action_high=high,
        provenance=f'pointmass/{tag}/n={n_transitions}/seed={seed}',
    )


def generate_dataset(env, behavior, n_transitions, seed):
    """
    Build an offline dataset.

    Args:
        env: BanditEnv or PointMassEnv
        behavior: BehaviorPolicy / 'default' for the bandit; one of
            POINTMASS_BEHAVIORS for the point mass
        n_transitions: Exact number of transitions (> 0)
        seed: Integer seed; same seed gives an identical dataset

    Returns:
        Dataset
    """
    if n_transitions <= 0:
        raise ConfigError('n_transitions must be positive', 'dataset.n_transitions')
    resolved = resolve_behavior(env, behavior)
    if isinstance(env, BanditEnv):
        ds = _bandit_dataset(env, resolved, int(n_transitions), seed)
    else:
        ds = _pointmass_dataset(env, resolved, int(n_transitions), seed)
    logger.info(f'Generated dataset {ds.provenance}')
    return ds


def average_return(env, policy, episodes, rng):
    returns = [rollout(env, policy, rng)[1] for _ in range(int(episodes))]
    return float(np.mean(returns))


def reference_returns(env, episodes=100, seed=0):
    """
    Random and expert reference returns used for normalized scores.

    Returns:
        {'random': float, 'expert': float, 'episodes': int}
    """
    random_ref = average_return(env, uniform_policy(env), episodes, make_rng(seed, 'reference', 'random'))
    expert_ref = average_return(env, expert_policy(env), episodes, make_rng(seed, 'reference', 'expert'))
    logger.info(f'Reference returns for {env.kind}: random={random_ref:.4f} expert={expert_ref:.4f}')
    return {'random': random_ref, 'expert': expert_ref, 'episodes': int(episodes)}
