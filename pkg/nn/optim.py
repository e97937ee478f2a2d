"""
Adam optimizer and the parameter-update plumbing around it.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from core.exceptions import NonFiniteError, ShapeError

DEFAULT_LR = 3e-4


@dataclass
class AdamState:
    """First/second moments laid out like Mlp.parameters()."""

    first_moment: List[np.ndarray] = field(default_factory=list)
    second_moment: List[np.ndarray] = field(default_factory=list)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def copy(self):
        return AdamState(
            first_moment=[m.copy() for m in self.first_moment],
            second_moment=[v.copy() for v in self.second_moment],
            step_count=self.step_count,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )


def adam_init(net, beta1=0.9, beta2=0.999, eps=1e-8):
    params = net.parameters()
    return AdamState(
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(net, grads, state, lr=DEFAULT_LR):
    """
    One bias-corrected Adam update.

    Args:
        net: Mlp to update
        grads: Gradients for net
        state: AdamState matching net
        lr: Learning rate

    Returns:
        (new_net, new_state); the inputs are left untouched
    """
    grad_arrays = grads.arrays()
    params = net.parameters()
    if len(grad_arrays) != len(params) or len(state.first_moment) != len(params):
        raise ShapeError('gradients/optimizer state do not match the network')
    if not grads.is_finite():
        raise NonFiniteError('non-finite gradient passed to adam_step')

    new_state = state.copy()
    new_state.step_count += 1
    t = new_state.step_count
    b1, b2 = state.beta1, state.beta2

    updated = []
    for i, (p, g) in enumerate(zip(params, grad_arrays)):
        if g.shape != p.shape:
            raise ShapeError(f'gradient {i} has shape {g.shape}, parameter has {p.shape}')
        m = b1 * state.first_moment[i] + (1.0 - b1) * g
        v = b2 * state.second_moment[i] + (1.0 - b2) * g * g
        new_state.first_moment[i] = m
        new_state.second_moment[i] = v
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        updated.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))

    new_net = net.copy()
    new_net.weights = updated[0::2]
    new_net.biases = updated[1::2]
    return new_net, new_state
