"""
The oracle-check suite: every closed-form claim verified on random problems.
"""
import logging

import numpy as np

from core.seeding import make_rng

from .backup import adaptive_weight, bias_bound_check, closed_form_backup, objective_minimizer
from .grid import DEFAULT_CELLS, GridProblem, action_grid, random_grid_problem
from .variance import (
    expected_variance, mixture_variance, sample_variance_se, sample_y, variance_y,
)

logger = logging.getLogger(__name__)

EQUIVALENCE_TOL = 1e-8
VARIANCE_PARAMS = 100
VARIANCE_DRAWS = 1_000_000
# Per-draw z-scores are screened loosely; the 3-sigma criterion applies to
# their aggregate, since 100 independent 3-sigma tests fail by chance often
PER_DRAW_Z = 4.5
AGGREGATE_Z = 3.0
ALTERNATIVE_CS = 20


def check_equivalence(problems):
    worst = max(float(np.max(np.abs(objective_minimizer(p) - closed_form_backup(p))))
                for p in problems)
    return {'max_abs_diff': worst, 'tolerance': EQUIVALENCE_TOL, 'holds': worst <= EQUIVALENCE_TOL}


def check_bias_bound(problems):
    reports = [bias_bound_check(p) for p in problems]
    halving = all(
        bias_bound_check(p.with_alpha(p.alpha / 2)).max_bias <= r.max_bias
        for p, r in zip(problems, reports)
    )
    worst = max(reports, key=lambda r: r.max_bias / r.bound if r.bound else 0.0)
    return {
        'max_bias': worst.max_bias,
        'bound': worst.bound,
        'max_ratio': worst.max_bias / worst.bound if worst.bound else 0.0,
        'all_hold': all(r.holds for r in reports),
        'alpha_halving_holds': halving,
        'holds': all(r.holds for r in reports) and halving,
    }


def check_piecewise_limits(grid, rng):
    density = np.where(rng.random(grid.n_bins) < 0.3, 0.0, rng.uniform(0.1, 2.0, grid.n_bins))
    backup = rng.uniform(-5.0, 5.0, grid.n_bins)
    surrogate = rng.uniform(-5.0, 5.0, grid.n_bins)
    p = GridProblem(grid, density, backup, surrogate, alpha=0.3)
    q = closed_form_backup(p)
    off_support = density == 0
    off_exact = bool(np.array_equal(q[off_support], surrogate[off_support]))
    zero_alpha_exact = bool(np.array_equal(closed_form_backup(p.with_alpha(0.0)), backup))
    return {
        'off_support_equals_surrogate': off_exact,
        'zero_alpha_equals_backup': zero_alpha_exact,
        'holds': off_exact and zero_alpha_exact,
    }


def check_weight_monotonicity(grid):
    densities = np.linspace(0.0, 5.0, 101)
    w = adaptive_weight(densities, 0.2, grid.u)
    w_more = adaptive_weight(densities, 0.4, grid.u)
    decreasing = bool(np.all(np.diff(w) < 0))
    increasing_in_alpha = bool(np.all(w_more > w))
    at_zero = bool(w[0] == 1.0)
    return {
        'decreasing_in_density': decreasing,
        'increasing_in_alpha': increasing_in_alpha,
        'one_off_support': at_zero,
        'holds': decreasing and increasing_in_alpha and at_zero,
    }


def check_variance(rng, params=VARIANCE_PARAMS, draws=VARIANCE_DRAWS):
    z_scores = []
    identity_err = 0.0
    for _ in range(params):
        density = float(rng.uniform(0.0, 3.0))
        alpha_u = float(rng.uniform(0.01, 1.0))
        q_pi, q_tilde = rng.uniform(-10.0, 10.0, size=2)
        exact = mixture_variance(density, alpha_u, q_pi, q_tilde)
        identity_err = max(identity_err, abs(
            variance_y(density, alpha_u, q_pi, q_tilde) - (density + alpha_u) * exact))
        sample = sample_y(rng, density, alpha_u, q_pi, q_tilde, draws)
        se = sample_variance_se(density, alpha_u, q_pi, q_tilde, draws)
        if se == 0.0:
            z_scores.append(0.0 if np.var(sample, ddof=1) == exact else np.inf)
        else:
            z_scores.append((np.var(sample, ddof=1) - exact) / se)
    z = np.array(z_scores)
    aggregate = float(np.sum(z) / np.sqrt(len(z)))
    holds = bool(np.all(np.abs(z) <= PER_DRAW_Z) and abs(aggregate) <= AGGREGATE_Z
                 and identity_err <= 1e-9)
    return {
        'params': params,
        'draws': draws,
        'max_abs_z': float(np.max(np.abs(z))),
        'aggregate_z': aggregate,
        'identity_error': identity_err,
        'holds': holds,
    }


def check_optimal_c(problems, rng):
    holds = True
    for p in problems:
        best = expected_variance(p, 'mean').value_term
        for c in rng.uniform(p.backup.min() - 1.0, p.backup.max() + 1.0, size=ALTERNATIVE_CS):
            other = expected_variance(p, float(c)).value_term
            holds &= best <= other * (1.0 + 1e-12) + 1e-12
    return {'alternatives': ALTERNATIVE_CS, 'holds': bool(holds)}


def run_oracle_suite(problems=1000, seed=0, grid_cells=DEFAULT_CELLS, variance_draws=VARIANCE_DRAWS):
    """
    Run every oracle check.

    Returns:
        JSON-ready dict {holds, max_bias, bound, problems, seed, checks}
    """
    grid = action_grid(grid_cells)
    problem_rng = make_rng(seed, 'oracle', 'problems')
    sample = [random_grid_problem(problem_rng, grid) for _ in range(int(problems))]
    logger.info(f'Running oracle checks on {len(sample)} grid problems ({grid_cells} cells)')

    bias = check_bias_bound(sample)
    checks = {
        'closed_form_equivalence': check_equivalence(sample),
        'bias_bound': bias,
        'piecewise_limits': check_piecewise_limits(grid, make_rng(seed, 'oracle', 'piecewise')),
        'weight_monotonicity': check_weight_monotonicity(grid),
        'variance': check_variance(make_rng(seed, 'oracle', 'variance'), draws=variance_draws),
        'optimal_c': check_optimal_c(sample[:50], make_rng(seed, 'oracle', 'c')),
    }
    holds = all(c['holds'] for c in checks.values())
    for name, check in checks.items():
        level = logging.INFO if check['holds'] else logging.ERROR
        logger.log(level, f'{name}: holds={check["holds"]}')
    return {
        'holds': holds,
        'max_bias': bias['max_bias'],
        'bound': bias['bound'],
        'problems': len(sample),
        'seed': int(seed),
        'checks': checks,
    }
