import numpy as np
from django.test import SimpleTestCase
from scipy.special import softmax

from amc.exceptions import InvalidArgumentError, InvalidInputError
from amc.frames import prepare_features
from amc.nn import (
    AdamState, Model, TrainConfig, adam_step, backward, batch_loss, count_params, cross_entropy,
    cross_entropy_logits, draw_masks, fit, forward, forward_batch, gradient_check, inference_macs, init_params,
    lr_schedule, zero_params,
)


def features(batch, steps, seed=0):
    frames = np.random.default_rng(seed).standard_normal((batch, steps, 2))
    return prepare_features(frames)


class SizeTests(SimpleTestCase):
    def test_parameter_counts(self):
        self.assertEqual(count_params(128, 11), 201099)
        self.assertEqual(count_params(64, 11), 51403)
        self.assertEqual(init_params(8, 3).size, count_params(8, 3))

    def test_smallest_network(self):
        self.assertEqual(count_params(1, 1, input_dim=1), 34)
        self.assertEqual(zero_params(1, 1, input_dim=1).size, 34)

    def test_count_matches_stored_tensors(self):
        self.assertEqual(count_params(128, 11), init_params(128, 11).size)

    def test_inference_cost(self):
        self.assertEqual(inference_macs(128, 11), (4 * 128 * 130 + 8 * 128 * 128, 128 * 11))

    def test_initial_biases(self):
        params = init_params(4, 3, seed=1)
        np.testing.assert_array_equal(params.layer1.b_ih[4:8], np.ones(4))
        np.testing.assert_array_equal(params.layer2.b_hh[4:8], np.zeros(4))
        np.testing.assert_array_equal(params.head_b, np.zeros(3))
        self.assertEqual(params.head_w.shape, (4, 3))


class ForwardTests(SimpleTestCase):
    def setUp(self):
        self.params = init_params(6, 4, seed=2)

    def test_probabilities(self):
        probs = forward(self.params, features(1, 10)[0])
        self.assertEqual(probs.shape, (4,))
        self.assertAlmostEqual(float(probs.sum()), 1.0, places=5)
        self.assertTrue(np.all(probs > 0))

    def test_cross_entropy_forms_agree(self):
        x = features(3, 10)
        logits, _ = forward_batch(self.params, x)
        probs = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs /= probs.sum(axis=1, keepdims=True)
        labels = np.array([0, 3, 1])
        expected = [cross_entropy(p, y) for p, y in zip(probs, labels)]
        np.testing.assert_allclose(cross_entropy_logits(logits, labels), expected, rtol=1e-5)

    def test_zero_weights_give_uniform_output(self):
        probs = forward(zero_params(5, 11), features(1, 10)[0])
        np.testing.assert_array_equal(probs, np.full(11, 1.0 / 11))

    def test_probabilities_do_not_saturate(self):
        params = zero_params(4, 3)
        params.head_b[:] = [0.0, 20.0, -5.0]
        probs = forward(params, features(1, 10)[0])
        self.assertEqual(probs.dtype, np.float64)
        self.assertLess(probs.max(), 1.0)
        self.assertGreater(probs.min(), 0.0)

    def test_cross_entropy_values(self):
        self.assertAlmostEqual(cross_entropy(np.full(11, 1.0 / 11), 4), np.log(11), places=12)
        self.assertAlmostEqual(cross_entropy(np.array([0.2, 0.5, 0.3]), 1), np.log(2), places=12)

    def test_eval_mode_is_deterministic(self):
        x = features(1, 10)[0]
        np.testing.assert_array_equal(forward(self.params, x), forward(self.params, x))

    def test_train_mode_needs_rng(self):
        with self.assertRaises(InvalidArgumentError):
            forward(self.params, features(1, 10)[0], mode='train')
        with self.assertRaises(InvalidArgumentError):
            forward(self.params, features(1, 10)[0], mode='predict')

    def test_train_mode_uses_dropout(self):
        x = features(1, 10)[0]
        dropped = forward(self.params, x, mode='train', rng=np.random.default_rng(0), dropout=0.5)
        self.assertFalse(np.array_equal(dropped, forward(self.params, x)))

    def test_rejects_wrong_input_width(self):
        with self.assertRaises(InvalidInputError):
            forward_batch(self.params, np.zeros((2, 5, 3)))

    def test_mask_rate(self):
        masks = draw_masks(np.random.default_rng(0), 64, 32, 16, 0.5)
        self.assertAlmostEqual(float((masks.layer1 == 0).mean()), 0.5, delta=0.02)
        self.assertEqual(set(np.unique(masks.layer2)), {0.0, 2.0})


class GradientTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(4)
        self.params = init_params(8, 3, seed=4, dtype=np.float64).map(lambda t: t + 0.1 * rng.standard_normal(t.shape))
        self.x = rng.standard_normal((2, 16, 2))
        self.labels = np.array([0, 2])

    def test_bptt_matches_finite_differences(self):
        errors = gradient_check(self.params, self.x, self.labels)
        self.assertEqual(len(errors), 10)
        self.assertLess(max(errors.values()), 1e-4)

    def test_bptt_matches_finite_differences_with_dropout(self):
        masks = draw_masks(np.random.default_rng(5), 2, 16, 8, 0.5, dtype=np.float64)
        errors = gradient_check(self.params, self.x, self.labels, masks)
        self.assertLess(max(errors.values()), 1e-4)

    def test_single_sample_batch(self):
        x = self.x.astype(np.float64)
        one = backward(self.params, x[:1], self.labels[:1])
        self.assertAlmostEqual(one.loss, cross_entropy(forward(self.params, x[0]), self.labels[0]), places=10)
        other = backward(self.params, x[1:], self.labels[1:])
        both = backward(self.params, x, self.labels)
        for a, b, mean in zip(one.grads.tensors(), other.grads.tensors(), both.grads.tensors()):
            np.testing.assert_allclose(mean, (a + b) / 2, rtol=1e-10, atol=1e-14)

    def test_head_gradient_is_outer_product(self):
        x = self.x[:1].astype(np.float64)
        logits, cache = forward_batch(self.params, x)
        residual = softmax(logits, axis=1)[0] - np.eye(3)[self.labels[0]]
        grads = backward(self.params, x, self.labels[:1]).grads
        np.testing.assert_allclose(grads.head_w, np.outer(cache.last[0], residual), rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(grads.head_b, residual, rtol=1e-10, atol=1e-14)

    def test_thread_count_does_not_change_gradients(self):
        params = init_params(8, 3, seed=0)
        x = features(100, 12)
        labels = np.arange(100) % 3
        one = backward(params, x, labels, workers=1)
        four = backward(params, x, labels, workers=4)
        self.assertEqual(one.loss, four.loss)
        for a, b in zip(one.grads.tensors(), four.grads.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_label_out_of_range(self):
        with self.assertRaises(InvalidInputError):
            backward(self.params, self.x, np.array([0, 3]))


class OptimizerTests(SimpleTestCase):
    def test_first_adam_step(self):
        params = zero_params(1, 1, input_dim=1, dtype=np.float64).map(lambda t: t + 1.0)
        grads = zero_params(1, 1, input_dim=1, dtype=np.float64).map(lambda t: t + 0.5)
        state = AdamState.for_params(params)
        adam_step(state, params, grads, lr=0.1)
        self.assertEqual(state.t, 1)
        for tensor in params.tensors():
            np.testing.assert_allclose(tensor, 0.9, rtol=1e-6)
        np.testing.assert_allclose(state.m[0], 0.05)
        np.testing.assert_allclose(state.v[0], 0.00025)

    def test_zero_gradient_leaves_weights(self):
        params = init_params(3, 2, seed=1, dtype=np.float64)
        before = params.copy()
        adam_step(AdamState.for_params(params), params, zero_params(3, 2, dtype=np.float64), lr=0.1)
        for a, b in zip(params.tensors(), before.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_lr_halves_after_patience_flat_epochs(self):
        self.assertEqual(lr_schedule([0.5, 0.6, 0.6, 0.6], 0.001), 0.001)
        self.assertEqual(lr_schedule([0.5, 0.6, 0.6, 0.6, 0.6], 0.001), 0.0005)
        self.assertEqual(lr_schedule([0.5, 0.6, 0.6, 0.6, 0.6, 0.6], 0.0005), 0.0005)
        self.assertEqual(lr_schedule([0.5, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6], 0.0005), 0.00025)
        self.assertEqual(lr_schedule([0.1, 0.2, 0.3], 0.001), 0.001)

    def test_lr_schedule_needs_history(self):
        with self.assertRaises(InvalidArgumentError):
            lr_schedule([], 0.001)

    def test_full_batch_loss_decreases(self):
        decreasing = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            params = init_params(16, 4, seed=seed, dtype=np.float64)
            x = features(32, 24, seed=seed).astype(np.float64)
            labels = rng.integers(0, 4, size=32)
            state = AdamState.for_params(params)
            losses = [batch_loss(params, x, labels)]
            for _ in range(20):
                adam_step(state, params, backward(params, x, labels).grads, lr=0.001)
                losses.append(batch_loss(params, x, labels))
            decreasing += all(b < a for a, b in zip(losses, losses[1:]))
        self.assertGreaterEqual(decreasing, 9)


class FitTests(SimpleTestCase):
    def setUp(self):
        self.x = features(40, 8)
        self.labels = np.arange(40) % 2
        self.cfg = TrainConfig(epochs=3, batch_size=16, seed=7)

    def test_history(self):
        history = fit(init_params(4, 2), self.x, self.labels, self.cfg)
        self.assertEqual([s.epoch for s in history], [1, 2, 3])
        self.assertEqual(history[0].lr, 0.001)
        for stats in history:
            self.assertTrue(0 <= stats.train_acc <= 1)

    def test_same_seed_same_weights(self):
        a, b = init_params(4, 2), init_params(4, 2)
        fit(a, self.x, self.labels, self.cfg)
        fit(b, self.x, self.labels, self.cfg, workers=3)
        for ta, tb in zip(a.tensors(), b.tensors()):
            np.testing.assert_array_equal(ta, tb)

    def test_bad_config(self):
        with self.assertRaises(InvalidArgumentError):
            TrainConfig(dropout=1.0)
        with self.assertRaises(InvalidArgumentError):
            TrainConfig(epochs=0)


class ModelTests(SimpleTestCase):
    def test_chunking_and_threads_agree(self):
        model = Model(init_params(8, 3, seed=1), ('A', 'B', 'C'), 16)
        frames = np.random.default_rng(0).standard_normal((600, 16, 2)).astype(np.float32)
        probs = model.predict_proba(frames)
        self.assertEqual(probs.shape, (600, 3))
        np.testing.assert_array_equal(probs, model.predict_proba(frames, workers=3))

    def test_class_table_must_match_head(self):
        with self.assertRaises(InvalidInputError):
            Model(init_params(8, 3), ('A', 'B'), 16)
