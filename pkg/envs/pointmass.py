"""
Two-dimensional point mass driven toward a goal.

State is (px, py, vx, vy); the action is an acceleration in [-1, 1]^2.
Velocity is updated first and the new velocity moves the position
(semi-implicit Euler), then the position is clipped to the arena.
"""
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from core.exceptions import ActionBoundsError, ConfigError

BOUNDS_SLACK = 1e-12


@dataclass(frozen=True)
class PointMassEnv:
    dt: float = 0.05
    damping: float = 0.99
    goal: Tuple[float, float] = (1.0, 1.0)
    start: Tuple[float, float] = (0.0, 0.0)
    horizon: int = 100
    position_bound: float = 2.0
    kp: float = 2.0
    kd: float = 1.0
    medium_noise_sd: float = 0.3

    kind: ClassVar[str] = 'pointmass'
    state_dim: ClassVar[int] = 4
    action_dim: ClassVar[int] = 2

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError('dt must be positive', 'env.dt')
        if self.horizon < 1:
            raise ConfigError('horizon must be at least 1', 'env.horizon')
        if self.position_bound <= 0:
            raise ConfigError('position bound must be positive', 'env.position_bound')

    def bounds(self):
        return -np.ones(self.action_dim), np.ones(self.action_dim)

    def reset(self):
        return np.array([self.start[0], self.start[1], 0.0, 0.0])

    def step(self, state, action, t=0, rng=None):
        return pm_step(self, state, action, t)


def pm_step(env, state, action, t=0):
    """
    Advance the point mass by one step.

    Args:
        env: PointMassEnv
        state: (px, py, vx, vy)
        action: Acceleration in [-1, 1]^2
        t: Index of this step within the episode

    Returns:
        (next_state, reward, done) with reward = -||position - goal||
    """
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape != (2,) or np.any(np.abs(a) > 1.0 + BOUNDS_SLACK):
        raise ActionBoundsError(f'action {a.tolist()} outside [-1, 1]^2')
    s = np.asarray(state, dtype=np.float64)

    velocity = env.damping * s[2:] + env.dt * a
    position = np.clip(s[:2] + env.dt * velocity, -env.position_bound, env.position_bound)
    reward = -float(np.linalg.norm(position - np.asarray(env.goal)))
    done = t + 1 >= env.horizon
    return np.concatenate([position, velocity]), reward, done


def expert_controller(env, state):
    """Clipped PD law toward the goal."""
    s = np.asarray(state, dtype=np.float64)
    action = env.kp * (np.asarray(env.goal) - s[:2]) - env.kd * s[2:]
    return np.clip(action, -1.0, 1.0)
