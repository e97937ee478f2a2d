import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import NonFiniteError, ShapeError
from .factories import MlpFactory
from .gradcheck import grad_check
from .network import Mlp, mlp_backward, mlp_forward, mlp_init, polyak_update
from .optim import adam_init, adam_step
from .serialization import mlp_load, mlp_save


def _linear(w, b):
    return Mlp([1, 1], [np.array([[w]], dtype=float)], [np.array([b], dtype=float)])


class MlpInitTestCase(SimpleTestCase):
    """Construction, determinism and shape validation"""

    def test_single_linear_layer_is_finite(self):
        net = mlp_init([1, 1], seed=0)
        self.assertEqual(net.weights[0].shape, (1, 1))
        self.assertTrue(net.is_finite())

    def test_same_seed_gives_identical_parameters(self):
        a = mlp_init([3, 8, 1], seed=11)
        b = mlp_init([3, 8, 1], seed=11)
        for p, q in zip(a.parameters(), b.parameters()):
            self.assertTrue(np.array_equal(p, q))

    def test_different_seed_gives_different_parameters(self):
        a = mlp_init([3, 8, 1], seed=1)
        b = mlp_init([3, 8, 1], seed=2)
        self.assertFalse(np.array_equal(a.weights[0], b.weights[0]))

    def test_default_critic_parameter_count(self):
        net = mlp_init([3, 256, 256, 1], seed=0)
        self.assertEqual(net.parameter_count(), 67329)

    def test_init_bounds_follow_fan_in(self):
        net = mlp_init([16, 4], seed=3)
        self.assertTrue(np.all(np.abs(net.weights[0]) <= 0.25))

    def test_invalid_layer_sizes_rejected(self):
        with self.assertRaises(ShapeError):
            mlp_init([], seed=0)
        with self.assertRaises(ShapeError):
            mlp_init([3], seed=0)
        with self.assertRaises(ShapeError):
            mlp_init([3, 0, 1], seed=0)


class MlpForwardTestCase(SimpleTestCase):

    def test_linear_layer_arithmetic(self):
        y, _ = mlp_forward(_linear(2.0, 1.0), [[3.0]])
        self.assertEqual(y[0, 0], 7.0)

    def test_tanh_output_of_zero_network(self):
        net = Mlp([2, 1], [np.zeros((2, 1))], [np.zeros(1)], output_activation='tanh')
        y, _ = mlp_forward(net, [[0.0, 0.0]])
        self.assertEqual(y[0, 0], 0.0)

    def test_batch_rows_preserved(self):
        net = MlpFactory()
        y, cache = mlp_forward(net, np.ones((4, 3)))
        self.assertEqual(y.shape, (4, 1))
        self.assertEqual(len(cache.activations), net.n_layers + 1)

    def test_forward_is_deterministic(self):
        net = MlpFactory()
        x = np.random.default_rng(0).normal(size=(5, 3))
        self.assertTrue(np.array_equal(mlp_forward(net, x)[0], mlp_forward(net, x)[0]))

    def test_shape_mismatch_raises(self):
        with self.assertRaises(ShapeError):
            mlp_forward(MlpFactory(), np.ones((2, 5)))

    def test_non_finite_input_raises(self):
        with self.assertRaises(NonFiniteError):
            mlp_forward(MlpFactory(), [[np.nan, 0.0, 0.0]])


class MlpBackwardTestCase(SimpleTestCase):

    def test_product_rule_on_linear_layer(self):
        net = _linear(2.0, 0.0)
        y, cache = mlp_forward(net, [[3.0]])
        grads, dx = mlp_backward(net, cache, np.ones_like(y))
        self.assertEqual(grads.weights[0][0, 0], 3.0)
        self.assertEqual(grads.biases[0][0], 1.0)
        self.assertEqual(dx[0, 0], 2.0)

    def test_zero_upstream_gives_zero_gradients(self):
        net = MlpFactory()
        y, cache = mlp_forward(net, np.ones((3, 3)))
        grads, dx = mlp_backward(net, cache, np.zeros_like(y))
        self.assertEqual(np.abs(grads.flat()).max(), 0.0)
        self.assertEqual(np.abs(dx).max(), 0.0)

    def test_upstream_shape_checked(self):
        net = MlpFactory()
        y, cache = mlp_forward(net, np.ones((3, 3)))
        with self.assertRaises(ShapeError):
            mlp_backward(net, cache, np.ones((2, 1)))

    def test_cache_from_other_network_rejected(self):
        net = MlpFactory()
        _, cache = mlp_forward(net, np.ones((1, 3)))
        other = mlp_init([3, 4, 1], seed=0)
        with self.assertRaises(ShapeError):
            mlp_backward(other, cache, np.ones((1, 1)))

    def test_input_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        net = mlp_init([4, 32, 1], hidden_activation='tanh', seed=5)
        x = rng.normal(size=(1, 4))
        y, cache = mlp_forward(net, x)
        _, dx = mlp_backward(net, cache, np.ones_like(y))
        h = 1e-5
        for col in range(4):
            xp, xm = x.copy(), x.copy()
            xp[0, col] += h
            xm[0, col] -= h
            numeric = (mlp_forward(net, xp)[0][0, 0] - mlp_forward(net, xm)[0][0, 0]) / (2 * h)
            self.assertLessEqual(abs(dx[0, col] - numeric) / max(1e-8, abs(dx[0, col]) + abs(numeric)), 1e-4)


class GradCheckTestCase(SimpleTestCase):

    def test_linear_net_squared_loss(self):
        net = mlp_init([3, 1], seed=0)
        x = np.random.default_rng(0).normal(size=(8, 3))
        self.assertLessEqual(grad_check(net, x, 'squared'), 1e-6)

    def test_wide_relu_net(self):
        net = mlp_init([3, 256, 256, 1], seed=1)
        x = np.random.default_rng(1).normal(size=(4, 3))
        self.assertLessEqual(grad_check(net, x, 'sum'), 1e-4)

    def test_every_default_architecture_over_seeds(self):
        shapes = [
            ([3, 64, 64, 1], 'relu', 'identity'),
            ([2, 64, 64, 1], 'relu', 'tanh'),
            ([6, 32, 32, 1], 'tanh', 'identity'),
            ([4, 32, 32, 2], 'tanh', 'tanh'),
        ]
        for seed in range(5):
            for sizes, hidden, output in shapes:
                net = mlp_init(sizes, hidden, output, seed=seed)
                x = np.random.default_rng(seed).normal(size=(3, sizes[0]))
                with self.subTest(seed=seed, sizes=sizes, hidden=hidden):
                    self.assertLessEqual(grad_check(net, x, 'tanh', seed=seed), 1e-4)

    def test_corrupted_backward_is_detected(self):
        def broken_backward(net, cache, upstream):
            grads, dx = mlp_backward(net, cache, upstream)
            grads.weights[0] = grads.weights[0] * 1.5
            return grads, dx

        net = mlp_init([3, 8, 1], hidden_activation='tanh', seed=2)
        x = np.random.default_rng(2).normal(size=(4, 3))
        error = grad_check(net, x, 'squared', sample=8, backward=broken_backward)
        self.assertGreater(error, 1e-2)


class AdamTestCase(SimpleTestCase):

    def test_first_step_moves_by_learning_rate(self):
        net = _linear(1.0, 0.0)
        y, cache = mlp_forward(net, [[2.0]])
        grads, _ = mlp_backward(net, cache, np.ones_like(y))
        new_net, state = adam_step(net, grads, adam_init(net), lr=0.01)
        self.assertAlmostEqual(new_net.weights[0][0, 0], 1.0 - 0.01, places=6)
        self.assertAlmostEqual(new_net.biases[0][0], -0.01, places=6)
        self.assertEqual(state.step_count, 1)

    def test_zero_gradient_leaves_parameters_unchanged(self):
        net = MlpFactory()
        y, cache = mlp_forward(net, np.ones((2, 3)))
        grads, _ = mlp_backward(net, cache, np.zeros_like(y))
        new_net, _ = adam_step(net, grads, adam_init(net), lr=0.1)
        for p, q in zip(net.parameters(), new_net.parameters()):
            self.assertTrue(np.array_equal(p, q))

    def test_scalar_quadratic_converges(self):
        # f(w) = (w - 5)^2 on the bias of a network with a zero input
        net = Mlp([1, 1], [np.zeros((1, 1))], [np.zeros(1)])
        state = adam_init(net)
        for _ in range(200):
            w = net.biases[0][0]
            y, cache = mlp_forward(net, [[0.0]])
            g, _ = mlp_backward(net, cache, np.array([[2.0 * (w - 5.0)]]))
            net, state = adam_step(net, g, state, lr=0.1)
        self.assertLess(abs(net.biases[0][0] - 5.0), 0.1)
        self.assertEqual(state.step_count, 200)

    def test_non_finite_gradient_rejected(self):
        net = _linear(1.0, 0.0)
        y, cache = mlp_forward(net, [[1.0]])
        g, _ = mlp_backward(net, cache, np.array([[np.inf]]))
        with self.assertRaises(NonFiniteError):
            adam_step(net, g, adam_init(net))


class PolyakTestCase(SimpleTestCase):

    def setUp(self):
        self.online = Mlp([1, 1], [np.ones((1, 1))], [np.ones(1)])
        self.target = Mlp([1, 1], [np.zeros((1, 1))], [np.zeros(1)])

    def test_tau_one_copies_online(self):
        blended = polyak_update(self.target, self.online, 1.0)
        self.assertEqual(blended.weights[0][0, 0], 1.0)

    def test_tau_zero_keeps_target(self):
        blended = polyak_update(self.target, self.online, 0.0)
        self.assertEqual(blended.weights[0][0, 0], 0.0)

    def test_small_tau_arithmetic(self):
        blended = polyak_update(self.target, self.online, 0.005)
        self.assertEqual(blended.biases[0][0], 0.005)
        self.assertEqual(self.target.biases[0][0], 0.0)

    def test_convex_combination(self):
        online, target = MlpFactory(), MlpFactory()
        blended = polyak_update(target, online, 0.3)
        for t, o, b in zip(target.parameters(), online.parameters(), blended.parameters()):
            lo, hi = np.minimum(t, o), np.maximum(t, o)
            self.assertTrue(np.all((b >= lo - 1e-15) & (b <= hi + 1e-15)))

    def test_architecture_mismatch(self):
        with self.assertRaises(ShapeError):
            polyak_update(mlp_init([2, 1], seed=0), mlp_init([3, 1], seed=0), 0.5)


class SerializationTestCase(SimpleTestCase):

    def test_checkpoint_round_trip_is_bit_exact(self):
        net = mlp_init([3, 16, 1], 'relu', 'tanh', seed=9)
        with tempfile.TemporaryDirectory() as tmp:
            path = mlp_save(net, Path(tmp) / 'net.json')
            loaded = mlp_load(path)
        self.assertEqual(loaded.architecture(), net.architecture())
        for p, q in zip(net.parameters(), loaded.parameters()):
            self.assertTrue(np.array_equal(p, q))
