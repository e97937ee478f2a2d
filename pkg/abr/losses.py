"""
Critic and actor losses with their analytic gradients.

Critic loss per critic, for a minibatch of B transitions and M uniform
actions a'_ij per transition:

    mean_i (Q(s_i, a_i) - y_i)^2
      + alpha / (B * M) * sum_ij (Q(s_i, a'_ij) - (y_i - lambda * ||a_i - a'_ij||^2))^2

y and lambda are constants for the gradient. With alpha = 0 the second term is
skipped entirely (no uniform actions are drawn), which leaves the plain TD3
critic regression.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from core.exceptions import NonFiniteError
from data.dataset import mean_abs_q
from nn.network import Gradients, mlp_backward, mlp_forward

from .agent import action_scale, actor_actions, critic_action_grad, critic_values

logger = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-3


@dataclass
class LossResult:
    """A scalar loss, one Gradients per trained network and diagnostics."""

    loss: float
    grads: List[Gradients]
    info: Dict[str, float] = field(default_factory=dict)


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f'{what} is not finite')


def td_target(batch, agent, cfg, rng, r_max=None):
    """
    Clipped double-Q target with target policy smoothing.

    Args:
        batch: Batch
        agent: AbrAgent (its target networks are used)
        cfg: Td3Config
        rng: Generator for the smoothing noise
        r_max: Largest |reward| in the dataset; targets are clipped to
            +-r_max / (1 - gamma) when cfg.clip_targets is set

    Returns:
        (B,) vector y
    """
    low, high = agent.action_low, agent.action_high
    _, half = action_scale(low, high)
    next_actions, _ = actor_actions(agent.actor_target, batch.next_states, low, high)
    noise = rng.normal(0.0, 1.0, size=next_actions.shape) * (cfg.policy_noise_sd * half)
    noise = np.clip(noise, -cfg.noise_clip * half, cfg.noise_clip * half)
    smoothed = np.clip(next_actions + noise, low, high)

    q1, _ = critic_values(agent.critic1_target, batch.next_states, smoothed)
    q2, _ = critic_values(agent.critic2_target, batch.next_states, smoothed)
    y = batch.rewards + cfg.gamma * (1.0 - batch.dones) * np.minimum(q1, q2)

    if cfg.clip_targets and r_max is not None:
        bound = r_max / (1.0 - cfg.gamma)
        y = np.clip(y, -bound, bound)
    _check_finite(y, 'TD target')
    return y


def lambda_coeff(batch, agent, cfg):
    """beta * (a_max - a_min)^2 / max(1e-3, mean |Q1(s, a)|) over the batch."""
    span = float(agent.action_high[0] - agent.action_low[0])
    scale = mean_abs_q(batch, agent.critic1)
    if scale < LAMBDA_FLOOR:
        logger.debug(f'mean |Q| = {scale:.3g} below floor, lambda denominator floored')
    return cfg.beta * span ** 2 / max(LAMBDA_FLOOR, scale)


def uniform_actions(rng, batch_size, num_samples, low, high):
    """(B, M, action_dim) actions uniform over the box."""
    return rng.uniform(low, high, size=(batch_size, num_samples, len(low)))


def regularized_critic_loss(critic, states, actions, y, uniform, lam, alpha):
    """
    Loss and gradients of a single critic with every random input fixed.

    Args:
        critic: Critic network
        states, actions: (B, .) dataset columns
        y: (B,) TD targets
        uniform: (B, M, action_dim) uniform actions, or None when alpha == 0
        lam: lambda
        alpha: Regularizer weight

    Returns:
        (loss, Gradients, info) where info holds q_data and regularizer
    """
    q, cache = critic_values(critic, states, actions)
    diff = q - y
    batch_size = len(q)
    data_term = float(np.mean(diff * diff))
    grads, _ = mlp_backward(critic, cache, (2.0 * diff / batch_size)[:, None])
    info = {'q_data': float(np.mean(q)), 'regularizer': 0.0}
    if alpha == 0:
        return data_term, grads, info

    _, num_samples, action_dim = uniform.shape
    flat_uniform = uniform.reshape(-1, action_dim)
    repeated_actions = np.repeat(actions, num_samples, axis=0)
    surrogate = np.repeat(y, num_samples) - lam * np.sum((repeated_actions - flat_uniform) ** 2, axis=1)

    q_u, cache_u = critic_values(critic, np.repeat(states, num_samples, axis=0), flat_uniform)
    diff_u = q_u - surrogate
    count = batch_size * num_samples
    regularizer = float(np.sum(diff_u * diff_u) / count)
    grads_u, _ = mlp_backward(critic, cache_u, (alpha * 2.0 * diff_u / count)[:, None])

    info['regularizer'] = regularizer
    info['q_uniform'] = float(np.mean(q_u))
    return data_term + alpha * regularizer, grads + grads_u, info


def twin_critic_loss(batch, agent, y, uniform, lam, alpha):
    """Sum of the two critics' losses; both share the same uniform actions."""
    loss1, grads1, info = regularized_critic_loss(
        agent.critic1, batch.states, batch.actions, y, uniform, lam, alpha)
    loss2, grads2, _ = regularized_critic_loss(
        agent.critic2, batch.states, batch.actions, y, uniform, lam, alpha)
    loss = loss1 + loss2
    _check_finite(loss, 'critic loss')
    info = dict(info, critic1_loss=loss1, critic2_loss=loss2)
    return LossResult(loss, [grads1, grads2], info)


def abr_critic_loss(batch, agent, cfg, rng, r_max=None):
    """
    Adaptively regularized twin-critic loss.

    Random draws happen in a fixed order: smoothing noise for the target,
    then the uniform actions (only when alpha > 0).

    Returns:
        LossResult with grads [critic1, critic2] and info lambda, q_data,
        regularizer
    """
    y = td_target(batch, agent, cfg, rng, r_max)
    lam = lambda_coeff(batch, agent, cfg)
    uniform = None
    if cfg.alpha > 0:
        uniform = uniform_actions(rng, batch.size, cfg.num_samples, agent.action_low, agent.action_high)
    result = twin_critic_loss(batch, agent, y, uniform, lam, cfg.alpha)
    result.info['lambda'] = lam
    return result


# =============================================================================
# ACTOR
# =============================================================================


def policy_gradient(actor, states, low, high, objective):
    """
    Chain an action-space objective through the actor.

    Args:
        actor: Actor network (tanh head)
        states: (B, state_dim)
        low, high: Action bounds
        objective: Callable (states, actions) -> (scalar, d scalar / d actions)

    Returns:
        (scalar, Gradients for the actor, actions)
    """
    actions, cache = actor_actions(actor, states, low, high)
    value, action_grads = objective(states, actions)
    _, half = action_scale(low, high)
    grads, _ = mlp_backward(actor, cache, np.asarray(action_grads) * half)
    return float(value), grads, actions


def actor_loss(batch, agent):
    """-mean Q1(s, actor(s)); the gradient flows through the critic's action input."""

    def objective(states, actions):
        q, dq_da = critic_action_grad(agent.critic1, states, actions)
        return -float(np.mean(q)), -dq_da / len(q)

    loss, grads, _ = policy_gradient(agent.actor, batch.states, agent.action_low,
                                     agent.action_high, objective)
    _check_finite(loss, 'actor loss')
    return LossResult(loss, [grads], {'q_policy': -loss})


def uniform_q(batch, critic, rng, low, high):
    """Mean Q over one uniform action per batch state (metrics only)."""
    actions = rng.uniform(low, high, size=(batch.size, len(low)))
    q, _ = mlp_forward(critic, np.hstack([batch.states, actions]))
    return float(np.mean(q))
