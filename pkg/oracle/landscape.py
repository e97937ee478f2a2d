"""
Learned objective landscapes on the bandit.

For each weight alpha (and seed) a critic is trained on the bandit dataset and
the objective the actor climbs is read off on the action grid:

    abr    Q1(s0, a)
    td3bc  lambda_n Q1(s0, a) - alpha * mean_i ||a - a_i||^2
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from abr.agent import act, critic_values
from abr.config import AbrConfig
from abr.training import train
from baselines.config import BaselineConfig
from baselines.training import train_baseline
from core.exceptions import ConfigError
from core.io import write_csv
from envs.bandit import BanditEnv
from envs.behavior import default_bandit_behavior

from .grid import action_grid, behavior_on_grid

logger = logging.getLogger(__name__)

LANDSCAPE_METHODS = ('abr', 'td3bc')
LANDSCAPE_COLUMNS = ('alpha', 'seed', 'action', 'objective_value', 'behavior_density', 'mean_reward')
DEFAULT_STEPS = 2000


@dataclass(eq=False)
class LandscapeCurve:
    method: str
    alpha: float
    seed: int
    actions: np.ndarray
    values: np.ndarray
    density: np.ndarray
    mean_reward: np.ndarray

    @property
    def argmax_action(self):
        return float(self.actions[int(np.argmax(self.values))])

    @property
    def argmax_density(self):
        return float(self.density[int(np.argmax(self.values))])

    def rows(self):
        for a, v, d, r in zip(self.actions, self.values, self.density, self.mean_reward):
            yield self.alpha, self.seed, a, v, d, r


def _check_bandit_dataset(dataset):
    if dataset.state_dim != 1 or dataset.action_dim != 1:
        raise ConfigError('landscapes need a one-dimensional bandit dataset', 'dataset')


def _config(method, alpha, seed, steps, base_cfg):
    overrides = dict(total_steps=int(steps), seed=int(seed))
    if method == 'abr':
        cfg = base_cfg if isinstance(base_cfg, AbrConfig) else AbrConfig()
        return replace(cfg, alpha=float(alpha), **overrides)
    cfg = base_cfg if isinstance(base_cfg, BaselineConfig) else BaselineConfig()
    return replace(cfg, method='td3bc', alpha_fixed=float(alpha), **overrides)


def landscape_curve(dataset, method, alpha, seed=0, steps=DEFAULT_STEPS, grid=None, env=None,
                    behavior=None, base_cfg=None):
    """
    Train one agent and evaluate its actor objective on the grid.

    Args:
        dataset: Bandit Dataset
        method: 'abr' or 'td3bc'
        alpha: Regularizer weight (alpha for abr, alpha_fixed for td3bc)
        seed: Network/training seed
        steps: Gradient steps
        grid: ActionGrid over the bandit's action range
        env, behavior: Used for the mean-reward and density columns
        base_cfg: Config whose remaining fields are kept

    Returns:
        LandscapeCurve
    """
    if method not in LANDSCAPE_METHODS:
        raise ConfigError(f'must be one of {", ".join(LANDSCAPE_METHODS)}', 'method')
    _check_bandit_dataset(dataset)
    env = env or BanditEnv()
    behavior = behavior or default_bandit_behavior()
    grid = grid or action_grid(low=env.action_low, high=env.action_high)

    cfg = _config(method, alpha, seed, steps, base_cfg)
    if method == 'abr':
        agent, _ = train(dataset, cfg)
    else:
        agent, _ = train_baseline(dataset, cfg)

    state = env.reset()
    actions = grid.centers
    states = np.tile(state, (len(actions), 1))
    q, _ = critic_values(agent.critic1, states, actions)
    if method == 'abr':
        values = q
    else:
        # lambda_n as the actor saw it: 1 / mean |Q| at the actor's actions on the data
        data_states = dataset.states
        policy_q, _ = critic_values(agent.critic1, data_states, act(agent, data_states))
        lam_n = 1.0 / max(1e-3, float(np.mean(np.abs(policy_q))))
        a = actions[:, 0]
        data = dataset.actions[:, 0]
        # mean_i (a - a_i)^2 = (a - mean)^2 + var
        spread = (a - data.mean()) ** 2 + data.var()
        values = lam_n * q - alpha * spread

    curve = LandscapeCurve(
        method=method,
        alpha=float(alpha),
        seed=int(seed),
        actions=actions[:, 0].copy(),
        values=values,
        density=behavior_on_grid(behavior, grid),
        mean_reward=env.mean_reward(actions[:, 0]),
    )
    logger.info(f'{method} alpha={alpha} seed={seed}: argmax a={curve.argmax_action:.3f} '
                f'(density {curve.argmax_density:.3g})')
    return curve


def landscape(dataset, method, alphas, seeds=(0,), steps=DEFAULT_STEPS, grid=None, env=None,
              behavior=None, base_cfg=None):
    """One LandscapeCurve per (alpha, seed), alphas outermost."""
    _check_bandit_dataset(dataset)
    return [
        landscape_curve(dataset, method, alpha, seed, steps, grid, env, behavior, base_cfg)
        for alpha in alphas
        for seed in seeds
    ]


def write_landscape(path, curves):
    rows = [row for curve in curves for row in curve.rows()]
    return write_csv(path, LANDSCAPE_COLUMNS, rows)
