import logging

from abr.losses import actor_loss
from abr.training import run_training

from .losses import bc_loss, td3_critic_loss, td3bc_actor_loss

logger = logging.getLogger(__name__)


def _bc_actor(batch, agent, cfg):
    return bc_loss(batch, agent.actor, agent.action_low, agent.action_high)


def _td3_actor(batch, agent, cfg):
    return actor_loss(batch, agent)


def _td3bc_actor(batch, agent, cfg):
    return td3bc_actor_loss(batch, agent, cfg.alpha_fixed)


def train_baseline(dataset, cfg, evaluator=None):
    """
    Train a baseline agent.

    bc trains the actor alone on every step; td3 and td3bc share the ABR
    training loop with the unregularized critic loss.

    Returns:
        (AbrAgent, list of TrainMetrics)
    """
    cfg.validate()
    logger.info(f'Training baseline {cfg.method}')
    if cfg.method == 'bc':
        return run_training(dataset, cfg, None, _bc_actor, actor_every=1, evaluator=evaluator,
                            label='bc')
    actor = _td3_actor if cfg.method == 'td3' else _td3bc_actor
    return run_training(dataset, cfg, td3_critic_loss, actor, evaluator=evaluator, label=cfg.method)
