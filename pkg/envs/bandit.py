"""
One-dimensional continuous bandit with Gaussian reward bumps.

The default configuration puts its best arm (a=0.8) where the default
behavior policy has essentially no mass, and a weaker arm (a=0.2) on a
behavior mode, so value overestimation outside the data support is present
by construction.
"""
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from core.exceptions import ActionBoundsError, ConfigError

BOUNDS_SLACK = 1e-12


@dataclass(frozen=True)
class RewardMode:
    center: float
    height: float
    width: float


DEFAULT_REWARD_MODES = (
    RewardMode(center=0.2, height=0.6, width=0.1),
    RewardMode(center=0.8, height=1.0, width=0.05),
)


@dataclass(frozen=True)
class BanditEnv:
    action_low: float = -1.0
    action_high: float = 1.0
    reward_modes: Tuple[RewardMode, ...] = DEFAULT_REWARD_MODES
    reward_noise_sd: float = 0.05

    kind: ClassVar[str] = 'bandit'
    state_dim: ClassVar[int] = 1
    action_dim: ClassVar[int] = 1
    horizon: ClassVar[int] = 1

    def __post_init__(self):
        if not self.action_low < self.action_high:
            raise ConfigError('action bounds must be ordered', 'env.action_low')
        if any(m.width <= 0 for m in self.reward_modes):
            raise ConfigError('reward mode widths must be positive', 'env.reward_modes')
        if self.reward_noise_sd < 0:
            raise ConfigError('noise sd must be non-negative', 'env.reward_noise_sd')

    def bounds(self):
        return np.array([self.action_low]), np.array([self.action_high])

    def mean_reward(self, action):
        """Noise-free reward; works elementwise on arrays of actions."""
        a = np.asarray(action, dtype=np.float64)
        total = np.zeros_like(a)
        for mode in self.reward_modes:
            total = total + mode.height * np.exp(-(a - mode.center) ** 2 / (2.0 * mode.width ** 2))
        return total

    def best_action(self, n_points=20001):
        """Arg-max of the mean reward on a fine grid over the action range."""
        grid = np.linspace(self.action_low, self.action_high, n_points)
        return float(grid[np.argmax(self.mean_reward(grid))])

    def reset(self):
        return np.zeros(self.state_dim)

    def step(self, state, action, t=0, rng=None):
        reward = bandit_reward(self, action, rng)
        return np.array(state, dtype=np.float64), reward, True


def bandit_reward(env, action, rng=None):
    """
    Sum of Gaussian bumps plus N(0, reward_noise_sd^2) observation noise.

    Args:
        env: BanditEnv
        action: Scalar or length-1 action
        rng: Generator for the noise; None gives the noise-free mean

    Returns:
        float reward
    """
    a = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
    if not env.action_low - BOUNDS_SLACK <= a <= env.action_high + BOUNDS_SLACK:
        raise ActionBoundsError(f'action {a} outside [{env.action_low}, {env.action_high}]')
    reward = float(env.mean_reward(a))
    if rng is not None and env.reward_noise_sd > 0:
        reward += float(rng.normal(0.0, env.reward_noise_sd))
    return reward
