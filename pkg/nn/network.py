"""
Dense feed-forward networks with analytic backpropagation.

A network is a plain value object: weights are float64 arrays of shape
(fan_in, fan_out), a batch is a 2-D float64 array with one row per sample.
Nothing here mutates a network in place; updates return new networks.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from core.exceptions import NonFiniteError, ShapeError
from core.seeding import make_rng


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z, a):
    return (z > 0.0).astype(np.float64)


def _tanh_grad(z, a):
    return 1.0 - a * a


def _identity(z):
    return z


def _identity_grad(z, a):
    return np.ones_like(z)


# tag -> (activation, derivative given pre-activation z and activation a)
ACTIVATIONS = {
    'relu': (_relu, _relu_grad),
    'tanh': (np.tanh, _tanh_grad),
    'identity': (_identity, _identity_grad),
}
HIDDEN_ACTIVATIONS = ('relu', 'tanh')
OUTPUT_ACTIVATIONS = ('identity', 'tanh')


def as_mat(values, cols=None, name='input'):
    """
    Coerce values into a finite 2-D float64 matrix.

    Args:
        values: Array-like of shape (rows, cols) or (cols,) for a single row
        cols: Expected column count, checked when given
        name: Used in error messages

    Returns:
        numpy.ndarray of dtype float64 and ndim 2
    """
    mat = np.asarray(values, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.ndim != 2:
        raise ShapeError(f'{name} must be 2-D, got shape {mat.shape}')
    if cols is not None and mat.shape[1] != cols:
        raise ShapeError(f'{name} has {mat.shape[1]} columns, expected {cols}')
    if not np.all(np.isfinite(mat)):
        raise NonFiniteError(f'{name} contains non-finite entries')
    return mat


@dataclass
class Mlp:
    """Multi-layer perceptron; weights[i] maps layer i to layer i + 1."""

    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    hidden_activation: str = 'relu'
    output_activation: str = 'identity'

    def __post_init__(self):
        self.layer_sizes = [int(n) for n in self.layer_sizes]
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError('number of weight/bias arrays does not match layer_sizes')
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ShapeError(f'layer {i} has shapes {w.shape}/{b.shape}, expected {expected}')
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ShapeError(f'unknown hidden activation {self.hidden_activation!r}')
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ShapeError(f'unknown output activation {self.output_activation!r}')

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def input_size(self):
        return self.layer_sizes[0]

    @property
    def output_size(self):
        return self.layer_sizes[-1]

    def architecture(self):
        return (tuple(self.layer_sizes), self.hidden_activation, self.output_activation)

    def parameter_count(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self):
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def is_finite(self):
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def copy(self):
        return Mlp(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            hidden_activation=self.hidden_activation,
            output_activation=self.output_activation,
        )


@dataclass
class ForwardCache:
    """Per-layer pre-activations and activations; activations[0] is the input."""

    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)
    architecture: tuple = ()

    @property
    def output(self):
        return self.activations[-1]


@dataclass
class Gradients:
    """Gradient arrays laid out like an Mlp's weights and biases."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @classmethod
    def zeros_like(cls, net):
        return cls([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])

    def arrays(self):
        arrays = []
        for w, b in zip(self.weights, self.biases):
            arrays.extend([w, b])
        return arrays

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def scaled(self, factor):
        return Gradients([w * factor for w in self.weights], [b * factor for b in self.biases])

    def __add__(self, other):
        return Gradients(
            [w + o for w, o in zip(self.weights, other.weights)],
            [b + o for b, o in zip(self.biases, other.biases)],
        )


def mlp_init(layer_sizes, hidden_activation='relu', output_activation='identity', seed=0):
    """
    Build a network with weights and biases uniform in +-1/sqrt(fan_in).

    Args:
        layer_sizes: At least two positive sizes, input first
        hidden_activation: 'relu' or 'tanh'
        output_activation: 'identity' or 'tanh'
        seed: Integer seed; the same seed always gives the same network

    Returns:
        Mlp
    """
    sizes = list(layer_sizes or [])
    if len(sizes) < 2:
        raise ShapeError(f'need at least two layer sizes, got {sizes}')
    if any(int(n) <= 0 for n in sizes):
        raise ShapeError(f'layer sizes must be positive, got {sizes}')

    rng = make_rng(seed, 'mlp_init')
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))

    return Mlp(sizes, weights, biases, hidden_activation, output_activation)


def mlp_forward(net, inputs):
    """
    Run a batch through the network.

    Returns:
        (output, cache) where output has one row per input row
    """
    x = as_mat(inputs, cols=net.input_size)
    cache = ForwardCache(architecture=net.architecture())
    cache.activations.append(x)

    a = x
    last = net.n_layers - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        tag = net.output_activation if i == last else net.hidden_activation
        a = ACTIVATIONS[tag][0](z)
        cache.pre_activations.append(z)
        cache.activations.append(a)

    return a, cache


def mlp_backward(net, cache, upstream):
    """
    Gradients of sum(upstream * output) w.r.t. every parameter and the input.

    Args:
        net: The network that produced cache
        cache: ForwardCache from mlp_forward
        upstream: dLoss/dOutput, same shape as the forward output

    Returns:
        (Gradients, input_grads)
    """
    if cache.architecture != net.architecture():
        raise ShapeError('forward cache was produced by a different architecture')
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != cache.output.shape:
        raise ShapeError(f'upstream shape {upstream.shape} != output shape {cache.output.shape}')

    grads = Gradients.zeros_like(net)
    last = net.n_layers - 1
    tag = net.output_activation
    delta = upstream * ACTIVATIONS[tag][1](cache.pre_activations[last], cache.activations[last + 1])

    for i in range(last, -1, -1):
        a_in = cache.activations[i]
        grads.weights[i] = a_in.T @ delta
        grads.biases[i] = delta.sum(axis=0)
        d_in = delta @ net.weights[i].T
        if i > 0:
            deriv = ACTIVATIONS[net.hidden_activation][1]
            delta = d_in * deriv(cache.pre_activations[i - 1], cache.activations[i])

    return grads, d_in


def polyak_update(target, online, tau):
    """Return target blended toward online: tau * online + (1 - tau) * target."""
    if target.architecture() != online.architecture():
        raise ShapeError('polyak update between different architectures')
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f'tau must lie in [0, 1], got {tau}')

    blended = target.copy()
    blended.weights = [tau * o + (1.0 - tau) * t for t, o in zip(target.weights, online.weights)]
    blended.biases = [tau * o + (1.0 - tau) * t for t, o in zip(target.biases, online.biases)]
    return blended
