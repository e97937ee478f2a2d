"""
JSON checkpoints for networks.

Format: {"layer_sizes": [...], "activations": {"hidden": .., "output": ..},
"weights": [nested rows], "biases": [vectors]}. Floats use the shortest
round-trip repr, so save/load is bit-exact.
"""
import logging

import numpy as np

from core.exceptions import ShapeError
from core.io import dump_json, load_json

from .network import Mlp

logger = logging.getLogger(__name__)


def mlp_to_dict(net):
    return {
        'layer_sizes': list(net.layer_sizes),
        'activations': {'hidden': net.hidden_activation, 'output': net.output_activation},
        'weights': [w.tolist() for w in net.weights],
        'biases': [b.tolist() for b in net.biases],
    }


def mlp_from_dict(data):
    try:
        sizes = [int(n) for n in data['layer_sizes']]
        weights = [np.array(w, dtype=np.float64).reshape(a, b)
                   for w, a, b in zip(data['weights'], sizes[:-1], sizes[1:])]
        biases = [np.array(b, dtype=np.float64) for b in data['biases']]
        activations = data['activations']
        return Mlp(sizes, weights, biases, activations['hidden'], activations['output'])
    except (KeyError, TypeError, ValueError) as e:
        raise ShapeError(f'malformed network checkpoint: {e}') from e


def mlp_save(net, path):
    path = dump_json(path, mlp_to_dict(net), indent=None)
    logger.debug(f'Saved network {net.layer_sizes} to {path}')
    return path


def mlp_load(path):
    return mlp_from_dict(load_json(path))
