"""
Losses of the comparison agents.

All actor losses go through abr.losses.policy_gradient, so the action-space
gradient is chained through the scaled tanh head the same way everywhere.
"""
import numpy as np

from abr.agent import critic_action_grad
from abr.losses import LAMBDA_FLOOR, LossResult, policy_gradient, td_target, twin_critic_loss


def bc_loss(batch, actor, action_low, action_high):
    """mean_i ||actor(s_i) - a_i||^2"""

    def objective(states, actions):
        diff = actions - batch.actions
        return float(np.mean(np.sum(diff * diff, axis=1))), 2.0 * diff / len(diff)

    loss, grads, _ = policy_gradient(actor, batch.states, action_low, action_high, objective)
    return LossResult(loss, [grads], {'bc': loss})


def td3bc_objective(critic, batch_actions, alpha_fixed):
    """
    Action-space objective -lambda_n * mean Q + alpha * mean ||a - a_data||^2.

    lambda_n = 1 / mean |Q(s, a)| is evaluated at the current actions and held
    constant for the gradient. The returned callable also records the two
    terms and lambda_n in `parts`.
    """
    parts = {}

    def objective(states, actions):
        q, dq_da = critic_action_grad(critic, states, actions)
        n = len(q)
        lam_n = 1.0 / max(LAMBDA_FLOOR, float(np.mean(np.abs(q))))
        diff = actions - batch_actions
        bc = float(np.mean(np.sum(diff * diff, axis=1)))
        value = float(np.mean(q))
        parts.update(lambda_n=lam_n, value=value, bc=bc,
                     value_grad=-lam_n * dq_da / n, penalty_grad=alpha_fixed * 2.0 * diff / n)
        return -lam_n * value + alpha_fixed * bc, parts['value_grad'] + parts['penalty_grad']

    return objective, parts


def td3bc_actor_loss(batch, agent, alpha_fixed):
    """
    TD3+BC actor loss with Q-scale normalization.

    Returns:
        LossResult with info lambda_n, value (mean Q) and bc (mean squared
        distance to the dataset actions)
    """
    objective, parts = td3bc_objective(agent.critic1, batch.actions, alpha_fixed)
    loss, grads, _ = policy_gradient(agent.actor, batch.states, agent.action_low,
                                     agent.action_high, objective)
    info = {k: parts[k] for k in ('lambda_n', 'value', 'bc')}
    return LossResult(loss, [grads], info)


def td3_critic_loss(batch, agent, cfg, rng, r_max=None):
    """Unregularized twin-critic TD regression."""
    y = td_target(batch, agent, cfg, rng, r_max)
    return twin_critic_loss(batch, agent, y, None, 0.0, 0.0)
