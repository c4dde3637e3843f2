"""Weighted cross-entropy loss and the Adam update rule."""

import numpy as np
import pytest

from fdcheck import FD_TOL, rel_error
from symevent.exceptions import ShapeMismatch
from symevent.neuralcore.loss import CLAMP_EPS, weighted_bce, weighted_bce_backward
from symevent.neuralcore.optim import Adam


class TestWeightedBce:
    def test_coin_flip_is_log_two(self):
        loss = weighted_bce(np.array([1.0]), np.array([0.5]), np.array([1.0]))
        np.testing.assert_allclose(loss, np.log(2.0))

    def test_symmetric_in_label(self):
        p = np.array([0.2])
        w = np.array([1.0])
        pos = weighted_bce(np.array([1.0]), p, w)
        neg = weighted_bce(np.array([0.0]), 1.0 - p, w)
        np.testing.assert_allclose(pos, neg, rtol=1e-12)

    def test_weights_average_not_sum(self):
        y = np.array([1.0, 0.0])
        p = np.array([0.7, 0.4])
        base = weighted_bce(y, p, np.array([1.0, 1.0]))
        scaled = weighted_bce(y, p, np.array([5.0, 5.0]))
        np.testing.assert_allclose(scaled, base, rtol=1e-12)

    def test_heavier_sample_dominates(self):
        y = np.array([1.0, 1.0])
        p = np.array([0.9, 0.1])
        tilted = weighted_bce(y, p, np.array([1.0, 9.0]))
        expected = (1.0 * -np.log(0.9) + 9.0 * -np.log(0.1)) / 10.0
        np.testing.assert_allclose(tilted, expected, rtol=1e-12)

    def test_perfect_prediction_is_tiny(self):
        loss = weighted_bce(np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert 0.0 <= loss < 1e-6

    def test_clamp_keeps_loss_finite(self):
        loss = weighted_bce(np.array([1.0]), np.array([0.0]), np.array([1.0]))
        assert np.isfinite(loss)
        np.testing.assert_allclose(loss, -np.log(CLAMP_EPS), rtol=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            weighted_bce(np.array([1.0]), np.array([0.5, 0.5]), np.array([1.0]))


class TestWeightedBceBackward:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        y = (rng.random(8) < 0.5).astype(float)
        p = rng.uniform(0.05, 0.95, size=8)
        w = rng.uniform(0.5, 3.0, size=8)
        grad = weighted_bce_backward(y, p, w)

        step = 1e-6
        numeric = np.zeros_like(p)
        for i in range(8):
            saved = p[i]
            p[i] = saved + step
            hi = weighted_bce(y, p, w)
            p[i] = saved - step
            lo = weighted_bce(y, p, w)
            p[i] = saved
            numeric[i] = (hi - lo) / (2.0 * step)
        assert rel_error(grad, numeric) < FD_TOL

    def test_gradient_zero_inside_clamp(self):
        y = np.array([1.0, 0.0])
        p = np.array([1.0, 0.0])
        grad = weighted_bce_backward(y, p, np.array([1.0, 1.0]))
        np.testing.assert_array_equal(grad, [0.0, 0.0])

    def test_sign_pushes_toward_label(self):
        grad = weighted_bce_backward(np.array([1.0, 0.0]), np.array([0.5, 0.5]), np.array([1.0, 1.0]))
        assert grad[0] < 0.0  # raising p lowers loss for a positive
        assert grad[1] > 0.0


def single_param_adam(value, **kwargs):
    param = np.array([value], dtype=np.float64)
    grad = np.zeros_like(param)
    opt = Adam([("p", param, grad)], **kwargs)
    return param, grad, opt


class TestAdam:
    def test_zero_gradient_keeps_param(self):
        param, _, opt = single_param_adam(1.5)
        opt.step()
        np.testing.assert_array_equal(param, [1.5])

    def test_first_step_is_signed_learning_rate(self):
        param, grad, opt = single_param_adam(0.0, lr=0.01)
        grad[0] = 3.7
        opt.step()
        np.testing.assert_allclose(param, [-0.01], rtol=1e-6)

    def test_constant_gradient_steps_at_learning_rate(self):
        param, grad, opt = single_param_adam(0.0, lr=0.05)
        for _ in range(50):
            grad[0] = 2.0
            opt.step()
        # with an unchanging gradient every bias-corrected step is close to lr
        assert -0.05 * 51 < param[0] < -0.05 * 49 * 0.9

    def test_direction_opposes_gradient(self):
        rng = np.random.default_rng(1)
        param = rng.normal(size=(3, 2))
        grad = np.zeros_like(param)
        opt = Adam([("W", param, grad)], lr=0.1)
        grad[...] = rng.normal(size=(3, 2))
        before = param.copy()
        opt.step()
        assert np.all(np.sign(before - param) == np.sign(grad))

    def test_updates_in_place(self):
        param, grad, opt = single_param_adam(0.0)
        ref = param
        grad[0] = 1.0
        opt.step()
        assert ref is param and ref[0] != 0.0

    def test_zero_grads_clears_buffers(self):
        param, grad, opt = single_param_adam(0.0)
        grad[0] = 9.0
        opt.zero_grads()
        np.testing.assert_array_equal(grad, [0.0])

    def test_two_optimizers_same_trajectory(self):
        a_param, a_grad, a_opt = single_param_adam(0.3, lr=0.02)
        b_param, b_grad, b_opt = single_param_adam(0.3, lr=0.02)
        rng = np.random.default_rng(2)
        for _ in range(20):
            g = rng.normal()
            a_grad[0] = g
            b_grad[0] = g
            a_opt.step()
            b_opt.step()
        np.testing.assert_array_equal(a_param, b_param)
