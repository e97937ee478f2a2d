"""
Training metrics rows and their CSV form.
"""
import math
from dataclasses import dataclass
from typing import Optional

from core.io import read_csv, write_csv

METRIC_COLUMNS = ('step', 'critic_loss', 'actor_loss', 'lambda', 'q_data', 'q_uniform', 'eval_return')


@dataclass(frozen=True)
class TrainMetrics:
    step: int
    critic_loss: float
    actor_loss: float
    lam: float
    q_data: float
    q_uniform: float
    eval_return: Optional[float] = None

    def as_row(self):
        return (self.step, self.critic_loss, self.actor_loss, self.lam, self.q_data,
                self.q_uniform, self.eval_return)


def write_metrics(path, metrics):
    """Write a metrics series; absent values (NaN/None) become empty cells."""
    return write_csv(path, METRIC_COLUMNS, [m.as_row() for m in metrics])


def _cell(text):
    return math.nan if text == '' else float(text)


def read_metrics(path):
    rows = []
    for row in read_csv(path):
        eval_return = row['eval_return']
        rows.append(TrainMetrics(
            step=int(row['step']),
            critic_loss=_cell(row['critic_loss']),
            actor_loss=_cell(row['actor_loss']),
            lam=_cell(row['lambda']),
            q_data=_cell(row['q_data']),
            q_uniform=_cell(row['q_uniform']),
            eval_return=None if eval_return == '' else float(eval_return),
        ))
    return rows


def final_eval_return(metrics):
    """Last recorded evaluation return, or None when the run never evaluated."""
    for m in reversed(metrics):
        if m.eval_return is not None:
            return m.eval_return
    return None
