"""
Run services behind the management commands.

Every artifact written here is a pure function of (configuration, seed);
wall-clock details go to the run_meta.json sidecar only.
"""
import itertools
import logging
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import django
import numpy as np
import scipy
from django.utils import timezone

from abr.agent import act, agent_load, agent_save
from abr.config import AbrConfig
from abr.evaluation import evaluate_policy, normalized_score
from abr.metrics import final_eval_return, write_metrics
from abr.training import train
from baselines.config import BaselineConfig
from baselines.training import train_baseline
from core.exceptions import ConfigError, IncompleteRunError
from core.io import dump_json, load_json, write_csv
from core.seeding import make_rng
from data.dataset import dataset_load, dataset_save, energy_distance
from envs.generation import generate_dataset

from .environments import check_dataset_matches, load_references, make_env, write_references

logger = logging.getLogger(__name__)

RESULT_FILE = 'result.json'
META_FILE = 'run_meta.json'
METRICS_FILE = 'metrics.csv'
AGENT_DIR = 'agent'
DATASET_FILE = 'dataset.jsonl'
AGGREGATE_FILE = 'aggregate.csv'
AGGREGATE_COLUMNS = ('method', 'alpha', 'beta', 'num_samples', 'seeds', 'mean_score', 'sd_score')
ENERGY_SAMPLE = 2000


def seed_dir(out_dir, seed):
    return Path(out_dir) / f'seed_{seed}'


def write_run_meta(run_dir, started, **extra):
    """Wall-clock and host details, kept out of the reproducible artifacts."""
    return dump_json(Path(run_dir) / META_FILE, {
        'started': started.isoformat(),
        'finished': timezone.now().isoformat(),
        'host': platform.node(),
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'django': django.get_version(),
        **extra,
    })


# =============================================================================
# DATASETS
# =============================================================================


def gen_data(kind, behavior, n_transitions, seed, out_path, reference_episodes):
    """
    Generate a dataset file plus its reference-returns sidecar.

    Returns:
        (dataset path, reference returns dict)
    """
    env = make_env(kind)
    dataset = generate_dataset(env, behavior, n_transitions, seed)
    path = dataset_save(dataset, out_path)
    refs = write_references(path, env, reference_episodes)
    return path, refs


def prepare_dataset(run, out_dir, reference_episodes):
    """
    Dataset file and reference returns for a run configuration.

    A configured path is loaded as is; otherwise the dataset is generated into
    the run's output directory.
    """
    env = make_env(run['env']['kind'])
    section = run['dataset']
    episodes = run['evaluation'].get('reference_episodes', reference_episodes)
    if 'path' in section:
        path = Path(section['path'])
        if not path.exists():
            raise ConfigError(f'{path} does not exist', 'dataset.path')
        check_dataset_matches(env, dataset_load(path))
        return path, load_references(path, env, episodes)
    return gen_data(env.kind, run['env']['behavior'], section['n_transitions'], section['seed'],
                    Path(out_dir) / DATASET_FILE, episodes)


# =============================================================================
# TRAINING
# =============================================================================


def method_config(run, method, seed, **overrides):
    """Validated AbrConfig/BaselineConfig for one method and seed."""
    common = dict(seed=seed, eval_episodes=run['evaluation']['episodes'])
    if method == 'abr':
        cfg = AbrConfig(**run['abr'])
    else:
        cfg = replace(BaselineConfig(**run['baseline']), method=method)
    return replace(cfg, **common, **overrides).validate()


def _point_keys(method, cfg):
    if method == 'abr':
        return {'alpha': cfg.alpha, 'beta': cfg.beta, 'num_samples': cfg.num_samples}
    alpha = cfg.alpha_fixed if method == 'td3bc' else None
    return {'alpha': alpha, 'beta': None, 'num_samples': None}


def run_point(run, method, seed, run_dir, dataset_path, references, overrides=None):
    """
    Train one (method, hyperparameters, seed) point and write its artifacts.

    Writes metrics.csv, the agent checkpoint, result.json and run_meta.json
    into run_dir.

    Returns:
        The result.json contents
    """
    started = timezone.now()
    cfg = method_config(run, method, seed, **(overrides or {}))
    env = make_env(run['env']['kind'])
    dataset = dataset_load(dataset_path)

    def evaluator(agent):
        return evaluate_policy(env, agent.actor, cfg.eval_episodes, make_rng(seed, 'eval', agent.step))

    if method == 'abr':
        agent, metrics = train(dataset, cfg, evaluator=evaluator)
    else:
        agent, metrics = train_baseline(dataset, cfg, evaluator=evaluator)

    raw = final_eval_return(metrics)
    if raw is None:
        raw = evaluator(agent)
    score = normalized_score(raw, references['random'], references['expert'])

    run_dir = Path(run_dir)
    write_metrics(run_dir / METRICS_FILE, metrics)
    agent_save(agent, run_dir / AGENT_DIR)
    result = {
        'method': method,
        'seed': seed,
        **_point_keys(method, cfg),
        'raw_return': raw,
        'normalized_score': score,
        'references': references,
        'dataset': dataset.provenance,
        'config': cfg.to_dict(),
    }
    dump_json(run_dir / RESULT_FILE, result)
    write_run_meta(run_dir, started, dataset_path=str(dataset_path))
    logger.info(f'{method} seed {seed}: return {raw:.4f}, normalized score {score:.2f}')
    return result


def train_run(run, out_dir, reference_episodes):
    """Train the configured method once per seed under out_dir/seed_<n>/."""
    method_config(run, run['method'], run['seeds'][0])
    dataset_path, refs = prepare_dataset(run, out_dir, reference_episodes)
    return [
        run_point(run, run['method'], seed, seed_dir(out_dir, seed), dataset_path, refs)
        for seed in run['seeds']
    ]


# =============================================================================
# EVALUATION
# =============================================================================


def evaluate_checkpoint(checkpoint, kind, dataset_path, episodes, seed, reference_episodes):
    """
    Evaluate a saved agent.

    Returns:
        dict with raw_return, normalized_score and the energy distance between
        actor actions on dataset states and the dataset actions
    """
    env = make_env(kind)
    agent = agent_load(checkpoint)
    dataset = dataset_load(dataset_path)
    check_dataset_matches(env, dataset)
    refs = load_references(dataset_path, env, reference_episodes)

    raw = evaluate_policy(env, agent.actor, episodes, make_rng(seed, 'eval', 'checkpoint'))
    rows = np.arange(len(dataset))
    if len(rows) > ENERGY_SAMPLE:
        rows = np.sort(make_rng(seed, 'energy').choice(rows, ENERGY_SAMPLE, replace=False))
    distance = energy_distance(act(agent, dataset.states[rows]), dataset.actions[rows])
    return {
        'raw_return': raw,
        'normalized_score': normalized_score(raw, refs['random'], refs['expert']),
        'energy_distance': distance,
        'episodes': episodes,
        'references': refs,
    }


# =============================================================================
# SWEEPS
# =============================================================================


def _label(value):
    return f'{value:g}'


def sweep_points(run):
    """
    (directory name, method, config overrides) for every point of a sweep.

    ABR is crossed over alphas x betas x num_samples; each baseline runs once
    with its configured section.
    """
    grid = run['grid']
    points = []
    for method in grid['methods']:
        if method != 'abr':
            points.append((method, method, {}))
            continue
        for alpha, beta, m in itertools.product(grid['alphas'], grid['betas'], grid['num_samples']):
            name = f'abr_alpha{_label(alpha)}_beta{_label(beta)}_m{m}'
            points.append((name, 'abr', {'alpha': alpha, 'beta': beta, 'num_samples': m}))
    return points


def expected_run_dirs(run, out_dir):
    return [
        seed_dir(Path(out_dir) / name, seed)
        for name, _, _ in sweep_points(run)
        for seed in run['seeds']
    ]


def _run_point_task(kwargs):
    return run_point(**kwargs)


def run_sweep(run, out_dir, workers, reference_episodes):
    """
    Run every sweep point and aggregate the results.

    Points are independent; with workers > 1 they run in a process pool.
    Returns the aggregate rows (also written to out_dir/aggregate.csv).
    """
    out_dir = Path(out_dir)
    # Fail on a bad point config before anything is written
    for method in run['grid']['methods']:
        method_config(run, method, run['seeds'][0])
    dataset_path, refs = prepare_dataset(run, out_dir, reference_episodes)

    tasks = [
        dict(run=run, method=method, seed=seed, run_dir=seed_dir(out_dir / name, seed),
             dataset_path=dataset_path, references=refs, overrides=overrides)
        for name, method, overrides in sweep_points(run)
        for seed in run['seeds']
    ]
    logger.info(f'Sweep of {len(tasks)} runs with {workers} worker(s) into {out_dir}')
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_run_point_task, tasks))
    else:
        for task in tasks:
            _run_point_task(task)
    return aggregate_sweep(run, out_dir)


def aggregate_sweep(run, out_dir):
    rows = sweep_aggregate(expected_run_dirs(run, out_dir))
    write_aggregate(Path(out_dir) / AGGREGATE_FILE, rows)
    return rows


def sweep_aggregate(run_dirs):
    """
    Mean and sample standard deviation of the final normalized score per
    (method, alpha, beta, num_samples).

    Raises:
        IncompleteRunError: listing every directory without a result
    """
    run_dirs = [Path(d) for d in run_dirs]
    missing = [d for d in run_dirs if not (d / RESULT_FILE).exists()]
    if missing:
        raise IncompleteRunError(missing)

    groups = {}
    for d in run_dirs:
        result = load_json(d / RESULT_FILE)
        key = (result['method'], result['alpha'], result['beta'], result['num_samples'])
        groups.setdefault(key, []).append(result['normalized_score'])

    rows = []
    for (method, alpha, beta, m), scores in groups.items():
        scores = np.asarray(scores, dtype=np.float64)
        sd = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
        rows.append({
            'method': method,
            'alpha': alpha,
            'beta': beta,
            'num_samples': m,
            'seeds': len(scores),
            'mean_score': float(scores.mean()),
            'sd_score': sd,
        })
    return rows


def write_aggregate(path, rows):
    return write_csv(path, AGGREGATE_COLUMNS, [[row[c] for c in AGGREGATE_COLUMNS] for row in rows])
