"""
Actor and twin critics with their target copies and optimizer states.

The actor network ends in tanh; its output is mapped affinely onto the action
box here, so every action it proposes lies inside the bounds.
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from core.exceptions import ShapeError
from core.io import dump_json, load_json
from core.seeding import derive_seed
from nn.network import Mlp, mlp_backward, mlp_forward, mlp_init
from nn.optim import AdamState, adam_init
from nn.serialization import mlp_load, mlp_save

logger = logging.getLogger(__name__)

NETWORKS = ('actor', 'actor_target', 'critic1', 'critic2', 'critic1_target', 'critic2_target')


@dataclass
class AbrAgent:
    actor: Mlp
    actor_target: Mlp
    critic1: Mlp
    critic2: Mlp
    critic1_target: Mlp
    critic2_target: Mlp
    actor_opt: AdamState
    critic1_opt: AdamState
    critic2_opt: AdamState
    action_low: np.ndarray
    action_high: np.ndarray
    step: int = 0

    @property
    def state_dim(self):
        return self.actor.input_size

    @property
    def action_dim(self):
        return self.actor.output_size

    def copy(self):
        return replace(
            self,
            **{name: getattr(self, name).copy() for name in NETWORKS},
            actor_opt=self.actor_opt.copy(),
            critic1_opt=self.critic1_opt.copy(),
            critic2_opt=self.critic2_opt.copy(),
            action_low=self.action_low.copy(),
            action_high=self.action_high.copy(),
        )

    def with_networks(self, **networks):
        """Shallow copy with some networks swapped (used by gradient checks)."""
        return replace(self, **networks)


def build_agent(state_dim, action_dim, action_low, action_high, cfg):
    """
    Initialize an agent; targets start as exact copies of the online networks.

    Each network draws its weights from its own stream of cfg.seed.
    """
    hidden = [int(n) for n in cfg.hidden_sizes]
    actor = mlp_init([state_dim, *hidden, action_dim], cfg.hidden_activation, 'tanh',
                     seed=derive_seed(cfg.seed, 'init', 'actor'))
    critic1 = mlp_init([state_dim + action_dim, *hidden, 1], cfg.hidden_activation, 'identity',
                       seed=derive_seed(cfg.seed, 'init', 'critic1'))
    critic2 = mlp_init([state_dim + action_dim, *hidden, 1], cfg.hidden_activation, 'identity',
                       seed=derive_seed(cfg.seed, 'init', 'critic2'))
    low = np.asarray(action_low, dtype=np.float64).reshape(-1)
    high = np.asarray(action_high, dtype=np.float64).reshape(-1)
    if low.shape != (action_dim,) or high.shape != (action_dim,):
        raise ShapeError(f'action bounds must have {action_dim} entries')

    return AbrAgent(
        actor=actor,
        actor_target=actor.copy(),
        critic1=critic1,
        critic2=critic2,
        critic1_target=critic1.copy(),
        critic2_target=critic2.copy(),
        actor_opt=adam_init(actor),
        critic1_opt=adam_init(critic1),
        critic2_opt=adam_init(critic2),
        action_low=low,
        action_high=high,
    )


def action_scale(low, high):
    """(center, half_range) of the action box."""
    return (high + low) / 2.0, (high - low) / 2.0


def actor_actions(actor, states, low, high):
    """
    Actions proposed by an actor network for a batch of states.

    Returns:
        (actions, cache) with actions = center + half_range * tanh_output
    """
    out, cache = mlp_forward(actor, states)
    center, half = action_scale(low, high)
    return center + half * out, cache


def act(agent, states):
    """Deterministic actions of the online actor."""
    return actor_actions(agent.actor, states, agent.action_low, agent.action_high)[0]


def critic_values(critic, states, actions):
    """Q(s, a) as an (n,) vector plus the forward cache."""
    q, cache = mlp_forward(critic, np.hstack([states, actions]))
    return q[:, 0], cache


def critic_action_grad(critic, states, actions):
    """
    Q(s, a) and its gradient with respect to the action columns.

    Returns:
        (q of shape (n,), dq_da of shape (n, action_dim))
    """
    states = np.asarray(states, dtype=np.float64)
    q, cache = critic_values(critic, states, actions)
    _, input_grads = mlp_backward(critic, cache, np.ones((len(q), 1)))
    return q, input_grads[:, states.shape[1]:]


# =============================================================================
# CHECKPOINTS
# =============================================================================


def agent_save(agent, directory):
    """Write the six networks plus the action bounds into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in NETWORKS:
        mlp_save(getattr(agent, name), directory / f'{name}.json')
    dump_json(directory / 'agent.json', {
        'action_low': agent.action_low,
        'action_high': agent.action_high,
        'step': agent.step,
    })
    logger.info(f'Saved agent checkpoint to {directory}')
    return directory


def agent_load(directory):
    """
    Load a checkpoint written by agent_save.

    Optimizer moments are not part of the checkpoint; they restart from zero.
    """
    directory = Path(directory)
    meta = load_json(directory / 'agent.json')
    nets = {name: mlp_load(directory / f'{name}.json') for name in NETWORKS}
    return AbrAgent(
        **nets,
        actor_opt=adam_init(nets['actor']),
        critic1_opt=adam_init(nets['critic1']),
        critic2_opt=adam_init(nets['critic2']),
        action_low=np.asarray(meta['action_low'], dtype=np.float64),
        action_high=np.asarray(meta['action_high'], dtype=np.float64),
        step=int(meta.get('step', 0)),
    )
