"""
Variance of the regression target under the regularized objective.

At one (s, a) the regularized objective regresses Q onto a two-point target
y: Q_pi with probability p = pi_beta / (pi_beta + alpha u) and Q~ otherwise.
"""
from dataclasses import dataclass

import numpy as np

from core.exceptions import PreconditionError

from .grid import behavior_mean


def _check_alpha_u(alpha_u):
    if np.any(np.asarray(alpha_u) <= 0):
        raise PreconditionError('alpha * u must be positive')


def variance_y(density, alpha_u, q_pi, q_tilde):
    """(alpha u pi_beta / (pi_beta + alpha u)) (Q_pi - Q~)^2"""
    _check_alpha_u(alpha_u)
    return alpha_u * density / (density + alpha_u) * (q_pi - q_tilde) ** 2


def mixture_variance(density, alpha_u, q_pi, q_tilde):
    """Exact variance p (1 - p) (Q_pi - Q~)^2 of the two-point target."""
    _check_alpha_u(alpha_u)
    p = density / (density + alpha_u)
    return p * (1.0 - p) * (q_pi - q_tilde) ** 2


def sample_y(rng, density, alpha_u, q_pi, q_tilde, n):
    """n draws of the two-point target."""
    p = density / (density + alpha_u)
    return np.where(rng.random(n) < p, q_pi, q_tilde)


def sample_variance_se(density, alpha_u, q_pi, q_tilde, n):
    """Exact standard deviation of the unbiased sample variance over n draws."""
    p = density / (density + alpha_u)
    pq = p * (1.0 - p)
    d4 = (q_pi - q_tilde) ** 4
    var = d4 * (pq * (1.0 - 3.0 * pq) / n - pq * pq * (n - 3) / (n * (n - 1)))
    return float(np.sqrt(max(var, 0.0)))


@dataclass(frozen=True)
class ExpectedVariance:
    c: float
    expectation: float
    bound: float
    value_term: float
    penalty_term: float
    cross_term: float

    @property
    def within_bound(self):
        return self.expectation <= self.bound


def resolve_c(p, c_choice):
    if c_choice in ('mean', 'optimal'):
        return behavior_mean(p.grid, p.behavior_density, p.backup)
    if c_choice == 'zero':
        return 0.0
    return float(c_choice)


def expected_variance(p, c_choice='mean'):
    """
    (alpha u / 2) * integral of pi_beta [(Q_pi - c)^2 + f^2 + 2 f (Q_pi - c)]
    and the bound that drops the cross term.

    The grid problem's backup plays Q_pi and its penalty plays f.

    Args:
        p: GridProblem
        c_choice: 'mean' (E_{pi_beta}[Q_pi]), 'zero' or a number

    Returns:
        ExpectedVariance with both sides and each term
    """
    c = resolve_c(p, c_choice)
    scale = p.alpha * p.u / 2.0
    weights = p.behavior_density
    centered = p.backup - c
    value_term = scale * p.grid.integrate(weights * centered ** 2)
    penalty_term = scale * p.grid.integrate(weights * p.penalty ** 2)
    cross_term = scale * p.grid.integrate(weights * 2.0 * p.penalty * centered)
    return ExpectedVariance(
        c=c,
        expectation=value_term + penalty_term + cross_term,
        bound=value_term + penalty_term,
        value_term=value_term,
        penalty_term=penalty_term,
        cross_term=cross_term,
    )
