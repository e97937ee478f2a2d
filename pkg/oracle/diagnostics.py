"""
Split of the TD3+BC actor gradient into its value and penalty parts.
"""
from dataclasses import dataclass

import numpy as np

from abr.agent import action_scale
from baselines.losses import td3bc_objective
from nn.network import Gradients, mlp_backward, mlp_forward


@dataclass
class GradientDecomposition:
    """Per-sample parameter-gradient norms plus the two summed gradients."""

    value_norms: np.ndarray
    penalty_norms: np.ndarray
    value_grads: Gradients
    penalty_grads: Gradients
    lambda_n: float

    @property
    def total(self):
        return self.value_grads + self.penalty_grads


def _per_sample_norms(actor, cache, upstream):
    norms = np.zeros(len(upstream))
    for i in range(len(upstream)):
        row = np.zeros_like(upstream)
        row[i] = upstream[i]
        grads, _ = mlp_backward(actor, cache, row)
        norms[i] = np.linalg.norm(grads.flat())
    return norms


def gradient_decomposition(agent, batch, alpha_fixed):
    """
    Value term (lambda_n grad_a Q . grad_theta actor) and penalty term
    (alpha grad_a f . grad_theta actor) of the TD3+BC actor gradient.

    Both are gradients of the loss being minimized, so their sum is exactly
    the gradient td3bc_actor_loss returns.
    """
    out, cache = mlp_forward(agent.actor, batch.states)
    center, half = action_scale(agent.action_low, agent.action_high)
    actions = center + half * out
    objective, parts = td3bc_objective(agent.critic1, batch.actions, alpha_fixed)
    objective(batch.states, actions)

    value_up = parts['value_grad'] * half
    penalty_up = parts['penalty_grad'] * half
    value_grads, _ = mlp_backward(agent.actor, cache, value_up)
    penalty_grads, _ = mlp_backward(agent.actor, cache, penalty_up)
    return GradientDecomposition(
        value_norms=_per_sample_norms(agent.actor, cache, value_up),
        penalty_norms=_per_sample_norms(agent.actor, cache, penalty_up),
        value_grads=value_grads,
        penalty_grads=penalty_grads,
        lambda_n=parts['lambda_n'],
    )
