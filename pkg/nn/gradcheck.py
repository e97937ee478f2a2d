"""
Central finite-difference gradient checks.

Used by the tests of every loss in abrlab: analytic gradients from the manual
backward passes are compared against (L(p + h) - L(p - h)) / 2h on a
deterministic sample of parameters.
"""
import numpy as np

from core.exceptions import NonFiniteError
from core.seeding import make_rng

from .network import mlp_backward, mlp_forward

DEFAULT_STEP = 1e-5


def _sum_loss(y):
    return float(np.sum(y)), np.ones_like(y)


def _squared_loss(y):
    rows = y.shape[0]
    return float(np.sum(y * y) / rows), 2.0 * y / rows


def _tanh_loss(y):
    t = np.tanh(y)
    return float(np.sum(t)), 1.0 - t * t


# tag -> function(output) returning (loss, dLoss/dOutput)
LOSSES = {
    'sum': _sum_loss,
    'squared': _squared_loss,
    'tanh': _tanh_loss,
}


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def _sample_coordinates(nets, sample, seed):
    """Deterministic (net, array, flat index) triples, spread over every array."""
    rng = make_rng(seed, 'grad_check')
    slots = [(k, j) for k, net in enumerate(nets) for j in range(len(net.parameters()))]
    coords = []
    for n in range(sample):
        k, j = slots[n % len(slots)]
        size = nets[k].parameters()[j].size
        coords.append((k, j, int(rng.integers(size))))
    return coords


def _perturbed(net, array_index, flat_index, delta):
    twin = net.copy()
    params = twin.parameters()
    params[array_index].reshape(-1)[flat_index] += delta
    return twin


def grad_check_fn(loss_fn, nets, analytic, sample=40, step=DEFAULT_STEP, seed=0):
    """
    Max relative error between analytic gradients and central differences.

    Args:
        loss_fn: Callable taking a list of networks and returning a scalar loss
        nets: Networks the loss depends on
        analytic: List of Gradients, one per network
        sample: Number of parameter coordinates to probe
        step: Finite-difference step h
        seed: Seed for choosing the coordinates

    Returns:
        max over sampled coordinates of |a - n| / max(1e-8, |a| + |n|)
    """
    nets = list(nets)
    worst = 0.0
    for k, j, idx in _sample_coordinates(nets, sample, seed):
        plus = list(nets)
        minus = list(nets)
        plus[k] = _perturbed(nets[k], j, idx, step)
        minus[k] = _perturbed(nets[k], j, idx, -step)
        l_plus, l_minus = float(loss_fn(plus)), float(loss_fn(minus))
        if not (np.isfinite(l_plus) and np.isfinite(l_minus)):
            raise NonFiniteError('loss became non-finite during the gradient check')
        numeric = (l_plus - l_minus) / (2.0 * step)
        exact = float(analytic[k].arrays()[j].reshape(-1)[idx])
        worst = max(worst, relative_error(exact, numeric))
    return worst


def grad_check(net, inputs, loss_tag='squared', sample=40, step=DEFAULT_STEP, seed=0,
               backward=mlp_backward):
    """
    Check mlp_backward (or a substitute) for a scalar loss of the network output.

    Args:
        net: Network under test
        inputs: Input batch
        loss_tag: Key of LOSSES
        backward: Backward implementation to verify; tests pass broken ones

    Returns:
        Maximum relative error over parameters and the input gradient
    """
    loss_of_output = LOSSES[loss_tag]

    def loss_fn(nets):
        y, _ = mlp_forward(nets[0], inputs)
        return loss_of_output(y)[0]

    y, cache = mlp_forward(net, inputs)
    loss, upstream = loss_of_output(y)
    if not np.isfinite(loss):
        raise NonFiniteError(f'{loss_tag} loss is not finite')
    grads, input_grads = backward(net, cache, upstream)
    worst = grad_check_fn(loss_fn, [net], [grads], sample=sample, step=step, seed=seed)

    # Input gradient, probed at every coordinate of the first row
    x = np.array(inputs, dtype=np.float64).reshape(-1, net.input_size)
    for col in range(x.shape[1]):
        x_plus, x_minus = x.copy(), x.copy()
        x_plus[0, col] += step
        x_minus[0, col] -= step
        numeric = (loss_of_output(mlp_forward(net, x_plus)[0])[0]
                   - loss_of_output(mlp_forward(net, x_minus)[0])[0]) / (2.0 * step)
        worst = max(worst, relative_error(float(input_grads[0, col]), numeric))

    return worst
