"""
Offline dataset container, file format and minibatch sampling.

Transitions are stored column-wise (one array per field) so batches are plain
fancy-indexing; Transition objects are materialized on request only.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from core.exceptions import DatasetError, NonFiniteError
from core.io import json_line
from nn.network import mlp_forward

logger = logging.getLogger(__name__)

FORMAT_TAG = 'abrlab-dataset/1'
BOUNDS_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(eq=False)
class Dataset:
    """Static offline experience D = {(s, a, r, s', done)}."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    action_low: np.ndarray
    action_high: np.ndarray
    provenance: str = ''

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64).reshape(-1)
        self.next_states = np.asarray(self.next_states, dtype=np.float64)
        self.dones = np.asarray(self.dones, dtype=bool).reshape(-1)
        self.action_low = np.asarray(self.action_low, dtype=np.float64).reshape(-1)
        self.action_high = np.asarray(self.action_high, dtype=np.float64).reshape(-1)
        self.validate()

    @classmethod
    def from_transitions(cls, transitions, action_low, action_high, provenance=''):
        transitions = list(transitions)
        if not transitions:
            raise DatasetError('dataset must contain at least one transition')
        return cls(
            states=np.array([t.state for t in transitions], dtype=np.float64),
            actions=np.array([t.action for t in transitions], dtype=np.float64),
            rewards=np.array([t.reward for t in transitions], dtype=np.float64),
            next_states=np.array([t.next_state for t in transitions], dtype=np.float64),
            dones=np.array([t.done for t in transitions], dtype=bool),
            action_low=action_low,
            action_high=action_high,
            provenance=provenance,
        )

    def validate(self):
        n = len(self.rewards)
        if n == 0:
            raise DatasetError('dataset must contain at least one transition')
        if self.states.ndim != 2 or self.actions.ndim != 2 or self.next_states.ndim != 2:
            raise DatasetError('states, actions and next states must be 2-D')
        if len(self.states) != n or len(self.actions) != n or len(self.next_states) != n \
                or len(self.dones) != n:
            raise DatasetError('field lengths disagree')
        if self.next_states.shape[1] != self.states.shape[1]:
            raise DatasetError('state and next-state dimensions differ')
        if self.action_low.shape != (self.actions.shape[1],) or self.action_high.shape != self.action_low.shape:
            raise DatasetError('action bounds do not match the action dimension')
        if np.any(self.action_low >= self.action_high):
            raise DatasetError('action bounds must be ordered')

        for name in ('states', 'actions', 'rewards', 'next_states'):
            bad = ~np.all(np.isfinite(getattr(self, name)).reshape(n, -1), axis=1)
            if np.any(bad):
                raise DatasetError(f'non-finite {name}', row=int(np.flatnonzero(bad)[0]))

        outside = ~np.all((self.actions >= self.action_low - BOUNDS_SLACK)
                          & (self.actions <= self.action_high + BOUNDS_SLACK), axis=1)
        if np.any(outside):
            row = int(np.flatnonzero(outside)[0])
            raise DatasetError(f'action {self.actions[row].tolist()} outside declared bounds', row=row)

    def __len__(self):
        return len(self.rewards)

    @property
    def state_dim(self):
        return self.states.shape[1]

    @property
    def action_dim(self):
        return self.actions.shape[1]

    def transition(self, index):
        return Transition(
            state=self.states[index].copy(),
            action=self.actions[index].copy(),
            reward=float(self.rewards[index]),
            next_state=self.next_states[index].copy(),
            done=bool(self.dones[index]),
        )

    @property
    def transitions(self):
        return [self.transition(i) for i in range(len(self))]

    def equals(self, other):
        """Exact (bitwise on values) equality of every field."""
        return (
            self.provenance == other.provenance
            and all(np.array_equal(getattr(self, f), getattr(other, f)) for f in (
                'states', 'actions', 'rewards', 'next_states', 'dones', 'action_low', 'action_high'))
        )


@dataclass(eq=False)
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    indices: np.ndarray = None

    @property
    def size(self):
        return len(self.rewards)


def sample_batch(ds, batch_size, rng):
    """
    Uniform-with-replacement minibatch.

    Args:
        ds: Dataset
        batch_size: B >= 1
        rng: numpy Generator; the same state always yields the same batch

    Returns:
        Batch with done flags as 0.0/1.0 floats
    """
    if len(ds) == 0:
        raise DatasetError('cannot sample from an empty dataset')
    if batch_size < 1:
        raise ValueError(f'batch size must be at least 1, got {batch_size}')
    idx = rng.integers(0, len(ds), size=int(batch_size))
    return Batch(
        states=ds.states[idx],
        actions=ds.actions[idx],
        rewards=ds.rewards[idx],
        next_states=ds.next_states[idx],
        dones=ds.dones[idx].astype(np.float64),
        indices=idx,
    )


def full_batch(ds):
    """The whole dataset as one Batch, in order."""
    return Batch(ds.states, ds.actions, ds.rewards, ds.next_states,
                 ds.dones.astype(np.float64), np.arange(len(ds)))


def mean_abs_q(batch, critic):
    """Mean of |Q(s, a)| over the batch; the denominator of the lambda scale."""
    q, _ = mlp_forward(critic, np.hstack([batch.states, batch.actions]))
    if not np.all(np.isfinite(q)):
        raise NonFiniteError('critic produced non-finite values')
    return float(np.mean(np.abs(q)))


# =============================================================================
# FILE FORMAT
# =============================================================================


def dataset_save(ds, path):
    """
    Write a header line followed by one JSON object per transition.

    The output is byte-deterministic for a given dataset.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        'format': FORMAT_TAG,
        'state_dim': ds.state_dim,
        'action_dim': ds.action_dim,
        'action_low': ds.action_low,
        'action_high': ds.action_high,
        'provenance': ds.provenance,
        'count': len(ds),
    }
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(json_line(header) + '\n')
        for i in range(len(ds)):
            handle.write(json_line({
                's': ds.states[i],
                'a': ds.actions[i],
                'r': ds.rewards[i],
                's2': ds.next_states[i],
                'd': bool(ds.dones[i]),
            }) + '\n')
    logger.info(f'Wrote {len(ds)} transitions to {path}')
    return path


def dataset_load(path):
    """
    Read a dataset file; any structural problem raises DatasetError.

    A file cut short (fewer rows than the header's count, or a partial last
    line) is an error, never a partial dataset.
    """
    try:
        with open(path, encoding='utf-8') as handle:
            lines = handle.read().split('\n')
    except OSError as e:
        raise DatasetError(f'cannot read {path}: {e}') from e

    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise DatasetError(f'{path} is empty')

    try:
        header = json.loads(lines[0])
        state_dim, action_dim = int(header['state_dim']), int(header['action_dim'])
        count = int(header['count'])
        low, high = header['action_low'], header['action_high']
    except (ValueError, KeyError, TypeError) as e:
        raise DatasetError(f'malformed header: {e}') from e
    if header.get('format') != FORMAT_TAG:
        raise DatasetError(f'unknown dataset format {header.get("format")!r}')
    if count < 0 or state_dim < 1 or action_dim < 1:
        raise DatasetError(
            f'bad header sizes: count={count} state_dim={state_dim} action_dim={action_dim}'
        )
    if len(lines) - 1 != count:
        raise DatasetError(f'header declares {count} transitions, file holds {len(lines) - 1}')

    states = np.empty((count, state_dim))
    actions = np.empty((count, action_dim))
    rewards = np.empty(count)
    next_states = np.empty((count, state_dim))
    dones = np.empty(count, dtype=bool)

    for i, line in enumerate(lines[1:]):
        try:
            row = json.loads(line)
            s, a, s2 = row['s'], row['a'], row['s2']
            if len(s) != state_dim or len(s2) != state_dim or len(a) != action_dim:
                raise DatasetError('dimension mismatch with header', row=i)
            states[i], actions[i], next_states[i] = s, a, s2
            rewards[i] = float(row['r'])
            dones[i] = bool(row['d'])
        except DatasetError:
            raise
        except (ValueError, KeyError, TypeError) as e:
            raise DatasetError(f'malformed transition: {e}', row=i) from e

    return Dataset(states, actions, rewards, next_states, dones, low, high,
                   provenance=header.get('provenance', ''))


# =============================================================================
# STATISTICS
# =============================================================================


def episode_returns(ds):
    """Undiscounted returns of the complete episodes (split on done flags)."""
    ends = np.flatnonzero(ds.dones)
    returns = []
    start = 0
    for end in ends:
        returns.append(float(ds.rewards[start:end + 1].sum()))
        start = end + 1
    return returns


def dataset_summary(ds):
    """
    Summary statistics of a dataset.

    Returns:
        dict with count, reward range, r_max (= max |r|), action mean/std and
        the returns of complete episodes
    """
    returns = episode_returns(ds)
    return {
        'count': len(ds),
        'provenance': ds.provenance,
        'reward_min': float(ds.rewards.min()),
        'reward_max': float(ds.rewards.max()),
        'r_max': float(np.abs(ds.rewards).max()),
        'action_mean': ds.actions.mean(axis=0).tolist(),
        'action_std': ds.actions.std(axis=0).tolist(),
        'n_episodes': len(returns),
        'episode_returns': returns,
    }


def energy_distance(x, y):
    """
    Generalized energy distance 2E|X - Y| - E|X - X'| - E|Y - Y'|.

    Args:
        x, y: (n, d) and (m, d) samples; keep them to a few thousand rows

    Returns:
        Non-negative float (zero iff the empirical distributions coincide)
    """
    x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
    y = np.asarray(y, dtype=np.float64).reshape(len(y), -1)
    cross = cdist(x, y).mean()
    within_x = cdist(x, x).mean()
    within_y = cdist(y, y).mean()
    return float(max(0.0, 2.0 * cross - within_x - within_y))
