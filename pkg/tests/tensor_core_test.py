# Copyright 2026 The lite-diag Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Test cases for the tensor_core module."""

import unittest

import numpy as np

from lite_diag import tensor_core as tc
from lite_diag.errors import NumericalError, RecordingError, ShapeError
from lite_diag.tensor_core import Tensor

_TOLERANCE = 1e-4


def _row(values):
    """A (1, 1, T) tensor."""
    return Tensor(np.asarray(values, dtype=np.float64).reshape(1, 1, -1))


class TestForward(unittest.TestCase):
    """Closed-form forward values."""

    def test_conv1d_same_padding(self):
        out = tc.conv1d(_row([1, 2, 3]), _row([1, 1, 1]))
        np.testing.assert_allclose(out.data.reshape(-1), [3, 6, 5])

    def test_conv1d_delta_kernel_is_identity(self):
        x = Tensor(np.random.default_rng(0).normal(size=(2, 1, 9)))
        out = tc.conv1d(x, _row([0, 1, 0]))
        np.testing.assert_allclose(out.data, x.data, rtol=1e-6)

    def test_conv1d_rejects_channel_mismatch(self):
        x = Tensor(np.zeros((1, 2, 5)))
        w = Tensor(np.zeros((4, 3, 3)))
        with self.assertRaises(ShapeError):
            tc.conv1d(x, w)

    def test_conv1d_stride_and_valid_padding(self):
        x = _row(np.arange(8))
        same = tc.conv1d(x, _row([1]), stride=2)
        valid = tc.conv1d(x, _row([1, 1, 1]), padding="valid")
        np.testing.assert_allclose(same.data.reshape(-1), [0, 2, 4, 6])
        self.assertEqual(valid.shape, (1, 1, 6))

    def test_maxpool_padding_never_wins(self):
        np.testing.assert_allclose(
            tc.maxpool1d(_row([1, 3, 2, 5]), 3).data.reshape(-1), [3, 3, 5, 5]
        )
        np.testing.assert_allclose(
            tc.maxpool1d(_row([1, 2, 3, 4]), 3).data.reshape(-1), [2, 3, 4, 4]
        )

    def test_maxpool_of_negative_values(self):
        out = tc.maxpool1d(_row([-4, -1, -3]), 3)
        np.testing.assert_allclose(out.data.reshape(-1), [-1, -1, -1])

    def test_softmax_temperature(self):
        z = Tensor([2.0, 0.0])
        self.assertAlmostEqual(tc.softmax_t(z).data[0], 0.88080, places=4)
        self.assertAlmostEqual(tc.softmax_t(z, 2.0).data[0], 0.73106, places=4)

    def test_softmax_is_shift_invariant_and_stable(self):
        z = Tensor([1000.0, 1001.0, 999.0], dtype=np.float64)
        p = tc.softmax_t(z).data
        q = tc.softmax_t(Tensor([1.0, 2.0, 0.0], dtype=np.float64)).data
        np.testing.assert_allclose(p, q, rtol=1e-12)
        self.assertAlmostEqual(float(p.sum()), 1.0, places=12)

    def test_softmax_rejects_nan(self):
        with self.assertRaises(NumericalError):
            tc.softmax_t(Tensor([np.nan, 0.0]))

    def test_sigmoid(self):
        out = tc.sigmoid(Tensor([0.0, 10.0], dtype=np.float64)).data
        self.assertEqual(out[0], 0.5)
        self.assertAlmostEqual(out[1], 0.9999546, places=7)

    def test_pointwise(self):
        x = Tensor([-1.0, 2.0], dtype=np.float64)
        np.testing.assert_array_equal(tc.pointwise(x, "relu").data, [0, 2])
        self.assertEqual(tc.pointwise(Tensor([0.0]), "sigmoid").item(), 0.5)
        with self.assertRaises(ValueError):
            tc.pointwise(x, "tanh")

    def test_gap(self):
        self.assertEqual(tc.gap(_row([1, 2, 3, 4])).item(), 2.5)

    def test_dense(self):
        out = tc.dense(
            Tensor([1.0, 2.0, 3.0]), Tensor([[1.0, 2.0, 3.0]]), Tensor([-2.0])
        )
        np.testing.assert_allclose(out.data, [12.0])

    def test_dense_rejects_mismatch(self):
        with self.assertRaises(ShapeError):
            tc.dense(Tensor(np.zeros(3)), Tensor(np.zeros((2, 4))))

    def test_matmul(self):
        out = tc.matmul(
            Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[1.0], [1.0]])
        )
        np.testing.assert_allclose(out.data, [[3.0], [7.0]])
        with self.assertRaises(ShapeError):
            tc.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_batchnorm_train_mode(self):
        x = Tensor(np.array([[0.0], [2.0]]))
        stats = tc.RunningStats.initial(1)
        out = tc.batchnorm1d(
            x, Tensor(np.ones(1)), Tensor(np.zeros(1)), stats, training=True
        )
        np.testing.assert_allclose(out.data.reshape(-1), [-1.0, 1.0], atol=1e-4)
        self.assertAlmostEqual(float(stats.mean[0]), 0.1, places=6)

    def test_batchnorm_eval_uses_running_stats(self):
        x = Tensor(np.array([[0.0], [2.0]]))
        stats = tc.RunningStats.initial(1)
        out = tc.batchnorm1d(
            x, Tensor(np.ones(1)), Tensor(np.zeros(1)), stats, training=False
        )
        np.testing.assert_allclose(out.data, x.data, atol=1e-4)

    def test_layer_norm(self):
        out = tc.layer_norm(
            Tensor([[1.0, 2.0, 3.0]]), Tensor(np.ones(3)), Tensor(np.zeros(3))
        )
        np.testing.assert_allclose(
            out.data.reshape(-1), [-1.22473, 0.0, 1.22473], atol=1e-4
        )

    def test_layer_norm_validation(self):
        ones, zeros = Tensor(np.ones(3)), Tensor(np.zeros(3))
        with self.assertRaises(ShapeError):
            tc.layer_norm(
                Tensor(np.zeros((2, 0))),
                Tensor(np.ones(0)),
                Tensor(np.zeros(0)),
            )
        with self.assertRaises(ShapeError):
            tc.layer_norm(Tensor(np.zeros((2, 3))), Tensor(np.ones(4)), zeros)
        with self.assertRaises(ValueError):
            tc.layer_norm(Tensor(np.zeros((2, 3))), ones, zeros, eps=0.0)

    def test_concat_channels(self):
        a = Tensor(np.zeros((2, 3, 5)))
        b = Tensor(np.ones((2, 4, 5)))
        self.assertEqual(tc.concat_channels(a, b).shape, (2, 7, 5))
        with self.assertRaises(ShapeError):
            tc.concat_channels(a, Tensor(np.ones((2, 4, 6))))

    def test_dropout_is_identity_in_eval(self):
        x = Tensor(np.ones((4, 4)))
        rng = np.random.default_rng(0)
        self.assertIs(tc.dropout(x, 0.5, rng, training=False), x)

    def test_layout_helpers(self):
        x = np.arange(24).reshape(2, 4, 3)
        self.assertEqual(tc.to_channel_major(x).shape, (2, 3, 4))
        np.testing.assert_array_equal(
            tc.to_time_major(tc.to_channel_major(x)), x
        )


class TestPrecision(unittest.TestCase):
    """Floating point width selection."""

    def test_default_is_single(self):
        self.assertEqual(Tensor([1.0]).dtype, np.float32)

    def test_precision_context(self):
        with tc.precision(64):
            self.assertEqual(Tensor([1.0]).dtype, np.float64)
        self.assertEqual(Tensor([1.0]).dtype, np.float32)

    def test_invalid_width(self):
        with self.assertRaises(ValueError):
            tc.set_default_precision(16)

    def test_single_and_double_agree(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 3, 16))
        w = rng.normal(size=(4, 3, 5))
        single = tc.conv1d(Tensor(x), Tensor(w)).data
        with tc.precision(64):
            double = tc.conv1d(Tensor(x), Tensor(w)).data
        np.testing.assert_allclose(single, double, atol=1e-4)


class TestRecording(unittest.TestCase):
    """Reverse-mode gradients."""

    def test_dense_over_gap(self):
        with tc.precision(64):
            x = Tensor([[[2.0, 4.0]]], requires_grad=True)
            w = tc.parameter([[1.0]])
            with tc.Recording() as recording:
                loss = tc.dense(tc.gap(x), w).sum()
                recording.backward(loss)
        np.testing.assert_allclose(x.grad, [[[0.5, 0.5]]])
        np.testing.assert_allclose(w.grad, [[3.0]])

    def test_reused_tensor_accumulates(self):
        x = Tensor([3.0], requires_grad=True)
        with tc.Recording() as recording:
            recording.backward((x * x + x).sum())
        np.testing.assert_allclose(x.grad, [7.0])

    def test_backward_twice_fails(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with tc.Recording() as recording:
            loss = (x * 2.0).sum()
            recording.backward(loss)
            with self.assertRaises(RecordingError):
                recording.backward(loss)

    def test_fresh_forward_after_backward(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with tc.Recording() as recording:
            recording.backward((x * 2.0).sum())
            recording.backward((x * 3.0).sum())
        np.testing.assert_allclose(x.grad, [3.0, 3.0])

    def test_non_scalar_loss_fails(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with tc.Recording() as recording:
            with self.assertRaises(RecordingError):
                recording.backward(x * 2.0)

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with tc.Recording() as recording:
            with tc.no_grad():
                x * 2.0
            self.assertEqual(len(recording), 0)

    def test_retained_intermediate(self):
        x = Tensor([1.0, -1.0], requires_grad=True)
        with tc.Recording() as recording:
            h = tc.relu(x * 2.0).retain_grad()
            recording.backward((h * 5.0).sum())
        np.testing.assert_allclose(h.grad, [5.0, 5.0])
        np.testing.assert_allclose(x.grad, [10.0, 0.0])

    def test_constants_get_no_gradient(self):
        x = Tensor([1.0], requires_grad=True)
        c = Tensor([4.0])
        with tc.Recording() as recording:
            recording.backward((x * c).sum())
        self.assertIsNone(c.grad)

    def test_linearity_of_backward(self):
        rng = np.random.default_rng(1)
        x0 = rng.normal(size=(1, 2, 8))
        w = rng.normal(size=(3, 2, 3))

        def grad_of(scale):
            with tc.precision(64):
                x = Tensor(x0, requires_grad=True)
                with tc.Recording() as recording:
                    out = tc.conv1d(x, Tensor(w))
                    recording.backward((out * scale).sum())
            return x.grad

        np.testing.assert_allclose(grad_of(3.0), 3.0 * grad_of(1.0))


class TestGradCheck(unittest.TestCase):
    """Backward passes against central finite differences, 64-bit."""

    def setUp(self):
        self.rng = np.random.default_rng(42)

    def assertGradient(self, f, x0, h=1e-4):
        self.assertLess(tc.grad_check(f, x0, h), _TOLERANCE)

    def weights(self, shape):
        return self.rng.normal(size=shape)

    def test_conv1d_input(self):
        w = self.weights((4, 3, 5))
        r = self.weights((2, 4, 10))
        self.assertGradient(
            lambda x: (tc.conv1d(x, Tensor(w)) * Tensor(r)).sum(),
            self.weights((2, 3, 10)),
        )

    def test_conv1d_kernel(self):
        x = self.weights((2, 3, 10))
        r = self.weights((2, 4, 5))
        self.assertGradient(
            lambda w: (tc.conv1d(Tensor(x), w, stride=2) * Tensor(r)).sum(),
            self.weights((4, 3, 3)),
        )

    def test_conv1d_bias(self):
        x = self.weights((2, 3, 6))
        w = self.weights((2, 3, 3))
        r = self.weights((2, 2, 6))
        self.assertGradient(
            lambda b: (tc.conv1d(Tensor(x), Tensor(w), b) * Tensor(r)).sum(),
            self.weights((2,)),
        )

    def test_maxpool(self):
        x0 = self.rng.permutation(24).reshape(2, 3, 4) * 0.5
        r = self.weights((2, 3, 2))
        self.assertGradient(
            lambda x: (tc.maxpool1d(x, 3, stride=2) * Tensor(r)).sum(), x0
        )

    def test_relu(self):
        signs = self.rng.choice([-1, 1], (3, 4))
        x0 = self.rng.uniform(0.2, 1.0, (3, 4)) * signs
        r = self.weights((3, 4))
        self.assertGradient(lambda x: (tc.relu(x) * Tensor(r)).sum(), x0)

    def test_sigmoid(self):
        r = self.weights((5,))
        self.assertGradient(
            lambda x: (tc.sigmoid(x) * Tensor(r)).sum(), self.weights((5,))
        )

    def test_softmax_and_log_softmax(self):
        r = self.weights((2, 4))
        for tau in (1.0, 2.0):
            self.assertGradient(
                lambda z: (tc.softmax_t(z, tau) * Tensor(r)).sum(),
                self.weights((2, 4)),
            )
            self.assertGradient(
                lambda z: (tc.log_softmax(z, tau) * Tensor(r)).sum(),
                self.weights((2, 4)),
            )

    def test_batchnorm_train(self):
        r = self.weights((3, 2, 4))
        gamma = self.weights((2,))

        def f(x):
            stats = tc.RunningStats.initial(2)
            out = tc.batchnorm1d(
                x, Tensor(gamma), Tensor(np.zeros(2)), stats, training=True
            )
            return (out * Tensor(r)).sum()

        self.assertGradient(f, self.weights((3, 2, 4)))

    def test_batchnorm_affine(self):
        x = self.weights((3, 2, 4))
        r = self.weights((3, 2, 4))

        def f(gamma):
            stats = tc.RunningStats.initial(2)
            out = tc.batchnorm1d(
                Tensor(x), gamma, Tensor(np.zeros(2)), stats, training=True
            )
            return (out * Tensor(r)).sum()

        self.assertGradient(f, self.weights((2,)))

    def test_layer_norm(self):
        r = self.weights((2, 3, 5))
        gamma = self.weights((5,))
        self.assertGradient(
            lambda x: (
                tc.layer_norm(x, Tensor(gamma), Tensor(np.zeros(5))) * Tensor(r)
            ).sum(),
            self.weights((2, 3, 5)),
        )

    def test_dense(self):
        w = self.weights((3, 4))
        b = self.weights((3,))
        r = self.weights((2, 5, 3))
        self.assertGradient(
            lambda x: (tc.dense(x, Tensor(w), Tensor(b)) * Tensor(r)).sum(),
            self.weights((2, 5, 4)),
        )
        x = self.weights((2, 4))
        self.assertGradient(
            lambda w: (tc.dense(Tensor(x), w) * Tensor(r[0, :2])).sum(),
            self.weights((3, 4)),
        )

    def test_batched_matmul(self):
        b = self.weights((2, 4, 3))
        r = self.weights((2, 5, 3))
        self.assertGradient(
            lambda a: (tc.matmul(a, Tensor(b)) * Tensor(r)).sum(),
            self.weights((2, 5, 4)),
        )

    def test_shape_ops(self):
        r = self.weights((4, 3))
        self.assertGradient(
            lambda x: (x.reshape(4, 3) * Tensor(r)).sum(), self.weights((2, 6))
        )
        self.assertGradient(
            lambda x: (x.transpose(1, 0) * Tensor(r)).sum(),
            self.weights((3, 4)),
        )
        self.assertGradient(
            lambda x: (x[1:, ::2] * Tensor(r[:2, :2])).sum(),
            self.weights((3, 4)),
        )
        self.assertGradient(
            lambda x: (x.mean(axis=1) * Tensor(r[:, 0])).sum(),
            self.weights((4, 5)),
        )

    def test_concat(self):
        other = self.weights((2, 2, 3))
        r = self.weights((2, 5, 3))
        self.assertGradient(
            lambda x: (tc.concat([x, Tensor(other)], axis=1) * Tensor(r)).sum(),
            self.weights((2, 3, 3)),
        )

    def test_dropout(self):
        r = self.weights((4, 6))

        def f(x):
            rng = np.random.default_rng(7)
            return (tc.dropout(x, 0.3, rng, training=True) * Tensor(r)).sum()

        self.assertGradient(f, self.weights((4, 6)))


if __name__ == "__main__":
    unittest.main()
