"""
Truncated Gaussian-mixture behavior policies.

The density is exactly evaluable, which is what lets the oracle app compare
learned quantities against ground truth. Each component is a product of
independent normals truncated to the action box.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm

from core.exceptions import ConfigError


@dataclass(frozen=True, eq=False)
class BehaviorPolicy:
    """
    Mixture sum_k w_k * prod_d TN(mu_kd, sd_kd; [low_d, high_d]).

    The bandit has a single state, so the mixture does not depend on it; the
    state argument of the operations is accepted for interface symmetry.
    """

    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        means = np.asarray(self.means, dtype=np.float64).reshape(len(weights), -1)
        sds = np.asarray(self.sds, dtype=np.float64).reshape(means.shape)
        low = np.asarray(self.low, dtype=np.float64).reshape(-1)
        high = np.asarray(self.high, dtype=np.float64).reshape(-1)

        if len(weights) == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ConfigError('mixture weights must be non-negative and sum to 1', 'behavior.weights')
        if np.any(sds <= 0):
            raise ConfigError('standard deviations must be positive', 'behavior.sds')
        if low.shape != (means.shape[1],) or high.shape != low.shape or np.any(low >= high):
            raise ConfigError('action bounds must be ordered and match the action dimension',
                              'behavior.bounds')

        # Probability mass each component keeps inside the box, per dimension
        mass = ndtr((high - means) / sds) - ndtr((low - means) / sds)
        if np.any(mass < 1e-12):
            raise ConfigError('a mixture component has no mass inside the action box',
                              'behavior.means')

        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'sds', sds)
        object.__setattr__(self, 'low', low)
        object.__setattr__(self, 'high', high)
        object.__setattr__(self, 'normalizers', mass)

    @property
    def n_components(self):
        return len(self.weights)

    @property
    def action_dim(self):
        return self.means.shape[1]

    def mean_action(self):
        """Mean of the truncated mixture."""
        alpha = (self.low - self.means) / self.sds
        beta = (self.high - self.means) / self.sds
        shift = (norm.pdf(alpha) - norm.pdf(beta)) / self.normalizers
        return (self.weights[:, None] * (self.means + self.sds * shift)).sum(axis=0)

    def mode_actions(self):
        """Component means clipped into the box, heaviest component first."""
        order = np.argsort(-self.weights, kind='stable')
        return np.clip(self.means[order], self.low, self.high)


def default_bandit_behavior():
    """0.5 N(0.2, 0.08) + 0.5 N(-0.3, 0.10) on [-1, 1]."""
    return BehaviorPolicy(
        weights=[0.5, 0.5],
        means=[[0.2], [-0.3]],
        sds=[[0.08], [0.10]],
        low=[-1.0],
        high=[1.0],
    )


def _as_actions(pol, action):
    return np.asarray(action, dtype=np.float64).reshape(-1, pol.action_dim)


def behavior_density(pol, state, action):
    """
    Truncated-mixture density pi_beta(a|s); zero outside the action box.

    Args:
        pol: BehaviorPolicy
        state: Ignored (single-state mixture)
        action: One action or an (n, action_dim) batch

    Returns:
        float for a single action, otherwise an (n,) array
    """
    actions = _as_actions(pol, action)
    z = (actions[:, None, :] - pol.means[None]) / pol.sds[None]
    per_dim = norm.pdf(z) / (pol.sds[None] * pol.normalizers[None])
    density = (pol.weights[None] * per_dim.prod(axis=2)).sum(axis=1)
    inside = np.all((actions >= pol.low) & (actions <= pol.high), axis=1)
    density = np.where(inside, density, 0.0)
    return float(density[0]) if np.ndim(action) <= 1 and len(density) == 1 else density


def behavior_cdf(pol, action):
    """Analytic CDF of a one-dimensional truncated mixture."""
    if pol.action_dim != 1:
        raise ConfigError('behavior_cdf is defined for one-dimensional actions only')
    a = np.clip(np.asarray(action, dtype=np.float64), pol.low[0], pol.high[0])
    mu, sd, z = pol.means[:, 0], pol.sds[:, 0], pol.normalizers[:, 0]
    lower = ndtr((pol.low[0] - mu) / sd)
    values = (ndtr((a[..., None] - mu) / sd) - lower) / z
    return (values * pol.weights).sum(axis=-1)


def behavior_sample(pol, state, rng, n=None):
    """
    Draw actions: pick a component by weight, draw a Gaussian, redraw until inside.

    Args:
        pol: BehaviorPolicy
        state: Ignored (single-state mixture)
        rng: numpy Generator
        n: Number of actions; None returns a single (action_dim,) vector

    Returns:
        (n, action_dim) array, or (action_dim,) when n is None
    """
    count = 1 if n is None else int(n)
    components = rng.choice(pol.n_components, size=count, p=pol.weights)
    actions = rng.normal(pol.means[components], pol.sds[components])

    outside = ~np.all((actions >= pol.low) & (actions <= pol.high), axis=1)
    while np.any(outside):
        idx = np.flatnonzero(outside)
        actions[idx] = rng.normal(pol.means[components[idx]], pol.sds[components[idx]])
        outside[idx] = ~np.all((actions[idx] >= pol.low) & (actions[idx] <= pol.high), axis=1)

    return actions[0] if n is None else actions
