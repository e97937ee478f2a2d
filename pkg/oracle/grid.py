"""
Discretized action spaces and the per-cell problems the oracle solves.

Cells are the midpoints of a regular partition of the action box, so every
quadrature here is the midpoint rule with weight cell_volume.
"""
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ConfigError, PreconditionError
from envs.behavior import BehaviorPolicy, behavior_density

DEFAULT_CELLS = 401
MAX_GRID_DIM = 2


@dataclass(frozen=True, eq=False)
class ActionGrid:
    centers: np.ndarray
    cell_volume: float
    low: np.ndarray
    high: np.ndarray
    bins_per_axis: int

    @property
    def n_bins(self):
        return len(self.centers)

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def volume(self):
        return float(np.prod(self.high - self.low))

    @property
    def u(self):
        """Uniform density over the box."""
        return 1.0 / self.volume

    def integrate(self, values):
        """Midpoint-rule integral of per-cell values over the box."""
        return float(np.sum(values) * self.cell_volume)


def action_grid(n_bins=DEFAULT_CELLS, low=-1.0, high=1.0, dim=1):
    """
    Regular grid of cell midpoints over [low, high]^dim.

    Args:
        n_bins: Cells per axis
        dim: 1 or 2; a 2-D grid is the cartesian product of two 1-D grids

    Returns:
        ActionGrid with n_bins ** dim cells
    """
    if n_bins < 1:
        raise ConfigError('need at least one cell', 'grid.n_bins')
    if dim not in range(1, MAX_GRID_DIM + 1):
        raise ConfigError(f'grids support 1 to {MAX_GRID_DIM} dimensions', 'grid.dim')
    low_v = np.broadcast_to(np.asarray(low, dtype=np.float64), (dim,)).copy()
    high_v = np.broadcast_to(np.asarray(high, dtype=np.float64), (dim,)).copy()
    if np.any(low_v >= high_v):
        raise ConfigError('bounds must be ordered', 'grid.low')

    widths = (high_v - low_v) / n_bins
    axes = [low_v[d] + widths[d] * (np.arange(n_bins) + 0.5) for d in range(dim)]
    mesh = np.meshgrid(*axes, indexing='ij')
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    return ActionGrid(centers, float(np.prod(widths)), low_v, high_v, int(n_bins))


@dataclass(eq=False)
class GridProblem:
    """
    Per-cell data of one regularized policy-evaluation step at a single state.

    backup is B Q (the Bellman backup), surrogate is Q~ = c - f and penalty
    holds f when it is known.
    """

    grid: ActionGrid
    behavior_density: np.ndarray
    backup: np.ndarray
    surrogate: np.ndarray
    alpha: float
    r_max: float = 1.0
    gamma: float = 0.9
    sigma: float = 0.1
    delta: float = 1.0
    penalty: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.grid.n_bins
        self.behavior_density = np.asarray(self.behavior_density, dtype=np.float64).reshape(n)
        self.backup = np.asarray(self.backup, dtype=np.float64).reshape(n)
        self.surrogate = np.asarray(self.surrogate, dtype=np.float64).reshape(n)
        if self.penalty is None:
            self.penalty = np.zeros(n)
        self.penalty = np.asarray(self.penalty, dtype=np.float64).reshape(n)
        if np.any(self.behavior_density < 0):
            raise PreconditionError('behavior densities must be non-negative')
        if self.alpha < 0:
            raise PreconditionError('alpha must be non-negative')

    @property
    def u(self):
        return self.grid.u

    @property
    def value_bound(self):
        """R_max / (1 - gamma)"""
        return self.r_max / (1.0 - self.gamma)

    def with_alpha(self, alpha):
        return GridProblem(self.grid, self.behavior_density, self.backup, self.surrogate, alpha,
                           self.r_max, self.gamma, self.sigma, self.delta, self.penalty)


def behavior_on_grid(pol, grid):
    """Exact behavior density at every cell midpoint."""
    return np.asarray(behavior_density(pol, None, grid.centers), dtype=np.float64).reshape(-1)


def penalty_values(grid, density, lam):
    """
    f(a) = lam * E_{b ~ pi_beta} ||a - b||^2 by quadrature over the grid.

    Expanded as lam * (m ||a||^2 - 2 a.mu + s) with the density's mass m,
    first moment mu and second moment s, so the cost stays linear in cells.
    """
    weights = density * grid.cell_volume
    mass = weights.sum()
    first = weights @ grid.centers
    second = float(weights @ np.sum(grid.centers ** 2, axis=1))
    sq = np.sum(grid.centers ** 2, axis=1)
    return lam * (mass * sq - 2.0 * grid.centers @ first + second)


def behavior_mean(grid, density, values):
    """E_{pi_beta}[values] with the density renormalized on the grid."""
    weights = density * grid.cell_volume
    return float(weights @ values / weights.sum())


def surrogate_values(grid, density, backup, lam, c_choice='mean'):
    """
    Surrogate Q~(a) = c - f(a).

    Args:
        grid: ActionGrid
        density: Behavior density per cell
        backup: B Q per cell
        lam: Scale of the squared-distance penalty
        c_choice: 'mean' for c = E_{pi_beta}[B Q], 'zero', or a number

    Returns:
        (q_tilde, c, f)
    """
    f = penalty_values(grid, density, lam)
    if c_choice == 'mean':
        c = behavior_mean(grid, density, backup)
    elif c_choice == 'zero':
        c = 0.0
    elif isinstance(c_choice, (int, float)):
        c = float(c_choice)
    else:
        raise ConfigError(f'unknown c choice {c_choice!r}', 'c_choice')
    return c - f, c, f


def random_behavior(rng, grid):
    """Random truncated mixture with one to three components."""
    k = int(rng.integers(1, 4))
    span = grid.high - grid.low
    means = grid.low + span * rng.uniform(0.1, 0.9, size=(k, grid.dim))
    sds = span * rng.uniform(0.03, 0.25, size=(k, grid.dim))
    return BehaviorPolicy(weights=rng.dirichlet(np.ones(k)), means=means, sds=sds,
                          low=grid.low, high=grid.high)


def random_grid_problem(rng, grid=None, alpha=None):
    """
    Random problem satisfying the bias-bound preconditions.

    The backup is a random smooth curve clipped to +-R_max / (1 - gamma) and
    the surrogate is built from the behavior density; delta is max |Q~|.
    """
    grid = grid or action_grid()
    density = behavior_on_grid(random_behavior(rng, grid), grid)
    gamma = float(rng.uniform(0.5, 0.99))
    r_max = float(rng.uniform(0.1, 2.0))
    bound = r_max / (1.0 - gamma)

    # Sum of a few random bumps, then clipped as the proof allows
    backup = np.zeros(grid.n_bins)
    for _ in range(int(rng.integers(1, 4))):
        center = rng.uniform(grid.low, grid.high)
        width = float(rng.uniform(0.05, 0.5))
        height = float(rng.uniform(-2.0, 2.0)) * bound
        backup += height * np.exp(-np.sum((grid.centers - center) ** 2, axis=1) / (2 * width ** 2))
    backup = np.clip(backup, -bound, bound)

    lam = float(rng.uniform(0.0, 2.0))
    q_tilde, _, f = surrogate_values(grid, density, backup, lam)
    alpha = float(rng.uniform(0.01, 1.0)) if alpha is None else float(alpha)
    sigma = float(rng.uniform(0.05, 0.9)) * float(density.max())
    delta = float(np.max(np.abs(q_tilde)))
    return GridProblem(grid, density, backup, q_tilde, alpha, r_max, gamma, sigma, delta, f)
