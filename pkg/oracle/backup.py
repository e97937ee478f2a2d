"""
Regularized policy evaluation solved per cell.

Minimizing pi_beta (Q - BQ)^2 + alpha u (Q - Q~)^2 cell by cell gives

    Q^ = (1 - w) BQ + w Q~,    w = alpha u / (pi_beta + alpha u)

closed_form_backup evaluates that expression; objective_minimizer finds the
same minimizer by bisection on the derivative without using it.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConvergenceError, PreconditionError

logger = logging.getLogger(__name__)

MINIMIZER_TOL = 1e-10
PRECONDITION_SLACK = 1e-12


def adaptive_weight(density, alpha, u):
    """
    w = alpha u / (pi_beta + alpha u); 1 where pi_beta = 0, 0 for alpha = 0.
    """
    density = np.asarray(density, dtype=np.float64)
    if alpha == 0:
        return np.zeros_like(density)
    au = alpha * u
    return au / (density + au)


def closed_form_backup(p):
    """Regularized backup value of every cell of a GridProblem."""
    w = adaptive_weight(p.behavior_density, p.alpha, p.u)
    return (1.0 - w) * p.backup + w * p.surrogate


def objective_minimizer(p, tol=MINIMIZER_TOL, max_iter=200):
    """
    Per-cell minimizer of pi_beta (Q - BQ)^2 + alpha u (Q - Q~)^2.

    Vectorized bisection on the derivative over the bracket [min(BQ, Q~),
    max(BQ, Q~)], which always contains the minimizer. Cells where both
    weights vanish have no unique minimizer; BQ is returned there.

    Raises:
        ConvergenceError: the bracket is still wider than tol after max_iter
    """
    a = p.behavior_density
    b = p.alpha * p.u
    lo = np.minimum(p.backup, p.surrogate)
    hi = np.maximum(p.backup, p.surrogate)

    def slope(q):
        return 2.0 * a * (q - p.backup) + 2.0 * b * (q - p.surrogate)

    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        rising = slope(mid) > 0
        hi = np.where(rising, mid, hi)
        lo = np.where(rising, lo, mid)
    else:
        if not np.all(hi - lo <= tol):
            raise ConvergenceError(f'bisection did not reach {tol} in {max_iter} iterations')

    q = 0.5 * (lo + hi)
    flat = (a == 0) & (b == 0)
    return np.where(flat, p.backup, q)


@dataclass(frozen=True)
class BiasReport:
    max_bias: float
    bound: float
    holds: bool
    supported_cells: int


def check_preconditions(p):
    """Raise PreconditionError unless |BQ| <= R_max/(1-gamma) and |Q~| <= delta."""
    if np.max(np.abs(p.backup)) > p.value_bound + PRECONDITION_SLACK:
        raise PreconditionError(f'|BQ| exceeds R_max/(1-gamma) = {p.value_bound:.6g}; clip the backup first')
    if np.max(np.abs(p.surrogate)) > p.delta + PRECONDITION_SLACK:
        raise PreconditionError(f'|Q~| exceeds delta = {p.delta:.6g}')
    if p.sigma <= 0:
        raise PreconditionError('sigma must be positive')


def bias_bound_check(p):
    """
    Largest |Q^ - BQ| over cells with pi_beta > sigma against
    (alpha u / sigma) (R_max / (1 - gamma) + delta).

    With alpha = 0 both sides are 0 and the bound counts as holding.
    """
    check_preconditions(p)
    supported = p.behavior_density > p.sigma
    bias = np.abs(closed_form_backup(p) - p.backup)
    max_bias = float(bias[supported].max()) if np.any(supported) else 0.0
    bound = p.alpha * p.u / p.sigma * (p.value_bound + p.delta)
    holds = max_bias < bound or (p.alpha == 0 and max_bias == 0.0)
    if not holds:
        logger.warning(f'bias bound violated: {max_bias:.6g} >= {bound:.6g}')
    return BiasReport(max_bias, float(bound), bool(holds), int(supported.sum()))
