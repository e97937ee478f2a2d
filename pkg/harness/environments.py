"""
Environment lookup and reference returns stored next to datasets.
"""
import logging
from pathlib import Path

from core.exceptions import ConfigError
from core.io import dump_json, load_json
from envs.bandit import BanditEnv
from envs.generation import reference_returns
from envs.pointmass import PointMassEnv

logger = logging.getLogger(__name__)

ENVIRONMENTS = {
    'bandit': BanditEnv,
    'pointmass': PointMassEnv,
}
ENV_KINDS = tuple(ENVIRONMENTS)
DEFAULT_BEHAVIORS = {
    'bandit': 'default',
    'pointmass': 'mixed',
}


def make_env(kind):
    try:
        return ENVIRONMENTS[kind]()
    except KeyError:
        raise ConfigError(f'must be one of {", ".join(ENV_KINDS)}', 'env.kind') from None


def default_behavior(kind):
    return DEFAULT_BEHAVIORS[kind]


def references_path(dataset_path):
    """d.jsonl -> d.refs.json"""
    path = Path(dataset_path)
    return path.with_name(f'{path.stem}.refs.json')


def check_dataset_matches(env, dataset):
    if dataset.state_dim != env.state_dim or dataset.action_dim != env.action_dim:
        raise ConfigError(
            f'dataset has state/action dims {dataset.state_dim}/{dataset.action_dim}, '
            f'{env.kind} expects {env.state_dim}/{env.action_dim}',
            'dataset.path',
        )


def write_references(dataset_path, env, episodes):
    """Measure random/expert returns for env and store them beside the dataset."""
    refs = reference_returns(env, episodes=episodes)
    dump_json(references_path(dataset_path), {'env': env.kind, **refs})
    return refs


def load_references(dataset_path, env, episodes):
    """
    Reference returns for a dataset's environment.

    The sidecar is reused when it was measured on the same environment with
    the same number of episodes; otherwise it is recomputed and rewritten.
    """
    path = references_path(dataset_path)
    if path.exists():
        refs = load_json(path)
        if refs.get('env') == env.kind and refs.get('episodes') == episodes:
            return {k: refs[k] for k in ('random', 'expert', 'episodes')}
        logger.warning(f'Reference returns in {path} do not match {env.kind}/{episodes}; recomputing')
    return write_references(dataset_path, env, episodes)
