"""
The offline actor-critic training loop.

Critics are updated every step; the actor and all target networks every
policy_delay steps. ABR and the TD3-family baselines share this loop and
differ only in the loss callables handed to it.
"""
import logging
import math

import numpy as np

from core.exceptions import DivergenceError
from core.seeding import make_rng
from data.dataset import sample_batch
from nn.network import polyak_update
from nn.optim import adam_step

from .agent import build_agent
from .losses import abr_critic_loss, actor_loss, uniform_q
from .metrics import TrainMetrics

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e8


def _guard(value, what, step):
    if not math.isfinite(value) or abs(value) > DIVERGENCE_LIMIT:
        logger.error(f'{what} diverged at step {step}: {value}')
        raise DivergenceError(f'{what} diverged at step {step} (|loss| = {abs(value):.3g})')


def run_training(dataset, cfg, critic_loss, actor_loss_fn, actor_every=None, evaluator=None,
                 label='abr'):
    """
    Generic training loop.

    Args:
        dataset: Dataset
        cfg: Td3Config (or a subclass)
        critic_loss: Callable (batch, agent, cfg, rng, r_max) -> LossResult, or
            None to train the actor only
        actor_loss_fn: Callable (batch, agent, cfg) -> LossResult
        actor_every: Actor update period; defaults to cfg.policy_delay
        evaluator: Optional callable agent -> mean return, run every
            cfg.eval_every steps and at the last step
        label: Name used in log lines

    Returns:
        (agent, list of TrainMetrics)
    """
    cfg.validate()
    agent = build_agent(dataset.state_dim, dataset.action_dim, dataset.action_low,
                        dataset.action_high, cfg)
    if cfg.total_steps == 0:
        return agent, []

    actor_every = actor_every or cfg.policy_delay
    rng = make_rng(cfg.seed, 'train')
    r_max = float(np.abs(dataset.rewards).max())
    metrics = []
    last_actor = math.nan
    logger.info(f'[{label}] training for {cfg.total_steps} steps on {len(dataset)} transitions '
                f'(seed {cfg.seed})')

    for step in range(1, cfg.total_steps + 1):
        batch = sample_batch(dataset, cfg.batch_size, rng)

        critic_info = {}
        critic_value = math.nan
        if critic_loss is not None:
            result = critic_loss(batch, agent, cfg, rng, r_max)
            _guard(result.loss, 'critic loss', step)
            agent.critic1, agent.critic1_opt = adam_step(
                agent.critic1, result.grads[0], agent.critic1_opt, cfg.lr_critic)
            agent.critic2, agent.critic2_opt = adam_step(
                agent.critic2, result.grads[1], agent.critic2_opt, cfg.lr_critic)
            critic_value, critic_info = result.loss, result.info

        if step % actor_every == 0:
            result = actor_loss_fn(batch, agent, cfg)
            _guard(result.loss, 'actor loss', step)
            agent.actor, agent.actor_opt = adam_step(
                agent.actor, result.grads[0], agent.actor_opt, cfg.lr_actor)
            agent.actor_target = polyak_update(agent.actor_target, agent.actor, cfg.tau)
            if critic_loss is not None:
                agent.critic1_target = polyak_update(agent.critic1_target, agent.critic1, cfg.tau)
                agent.critic2_target = polyak_update(agent.critic2_target, agent.critic2, cfg.tau)
            last_actor = result.loss

        agent.step = step
        last = step == cfg.total_steps
        if step % cfg.log_every == 0 or last:
            eval_return = None
            if evaluator is not None and (last or (cfg.eval_every and step % cfg.eval_every == 0)):
                eval_return = float(evaluator(agent))
            q_uniform = math.nan
            if critic_loss is not None:
                # Separate stream, so metrics never perturb the training draws
                q_uniform = uniform_q(batch, agent.critic1, make_rng(cfg.seed, 'metrics', step),
                                      agent.action_low, agent.action_high)
            row = TrainMetrics(
                step=step,
                critic_loss=critic_value,
                actor_loss=last_actor,
                lam=critic_info.get('lambda', math.nan),
                q_data=critic_info.get('q_data', math.nan),
                q_uniform=q_uniform,
                eval_return=eval_return,
            )
            metrics.append(row)
            logger.info(f'[{label}] step {step}: critic {row.critic_loss:.4g} '
                        f'actor {row.actor_loss:.4g} lambda {row.lam:.4g}')

    return agent, metrics


def _abr_actor_loss(batch, agent, cfg):
    return actor_loss(batch, agent)


def train(dataset, cfg, evaluator=None):
    """
    Train an ABR agent on an offline dataset.

    Returns:
        (AbrAgent, list of TrainMetrics); identical for identical (dataset, cfg)
    """
    return run_training(dataset, cfg, abr_critic_loss, _abr_actor_loss, evaluator=evaluator,
                        label='abr')
