import numpy as np
from django.test import SimpleTestCase

from amc.augment import builtin_policy
from amc.exceptions import ClassTableMismatchError, DegenerateInputError, InvalidArgumentError, InvalidInputError
from amc.experiments import (
    ExperimentConfig, Metrics, Phase, confusion_by_snr, evaluate, fuse_predictions, parse_regimes,
    predict_dataset, run_experiment, split_dataset, stratum_quotas, subsample, tta_predict,
)
from amc.frames import Dataset
from amc.modem import GenConfig, ModClass, generate_dataset
from amc.nn import Model, TrainConfig, init_params

from .test_frames import make_dataset


class SplitTests(SimpleTestCase):
    def test_stratified_halves(self):
        ds = make_dataset(n_per_stratum=6)
        train, test = split_dataset(ds, seed=1)
        self.assertEqual(len(train), len(test))
        for key in ds.strata():
            self.assertEqual(train.strata()[key].size, 3)
            self.assertEqual(test.strata()[key].size, 3)
        rows = {tuple(frame.ravel()) for frame in np.concatenate([train.iq, test.iq])}
        self.assertEqual(len(rows), len(ds))

    def test_seeded(self):
        ds = make_dataset(n_per_stratum=6)
        np.testing.assert_array_equal(split_dataset(ds, 2)[0].iq, split_dataset(ds, 2)[0].iq)
        self.assertFalse(np.array_equal(split_dataset(ds, 2)[0].iq, split_dataset(ds, 3)[0].iq))

    def test_odd_stratum(self):
        with self.assertRaises(InvalidInputError):
            split_dataset(make_dataset(n_per_stratum=3))


class SubsampleTests(SimpleTestCase):
    def test_quota_total_and_spread(self):
        quotas = stratum_quotas([500] * 220, 0.125, np.random.default_rng(0))
        self.assertEqual(int(quotas.sum()), 13750)
        self.assertEqual(set(quotas.tolist()), {62, 63})

    def test_exact_quotas(self):
        quotas = stratum_quotas([8, 8, 8], 0.25, np.random.default_rng(0))
        self.assertEqual(quotas.tolist(), [2, 2, 2])

    def test_subsample_keeps_every_stratum(self):
        ds = make_dataset(n_per_stratum=8)
        small = subsample(ds, 0.25, seed=3)
        self.assertEqual(len(small), 8)
        self.assertEqual(sorted(small.strata()), sorted(ds.strata()))

    def test_full_fraction_is_identity(self):
        ds = make_dataset()
        self.assertIs(subsample(ds, 1.0), ds)

    def test_empty_stratum(self):
        with self.assertRaises(DegenerateInputError):
            subsample(make_dataset(n_per_stratum=2), 0.1)
        with self.assertRaises(InvalidArgumentError):
            subsample(make_dataset(), 0.0)


class FusionTests(SimpleTestCase):
    def test_hand_computed_example(self):
        label, mean = fuse_predictions([[0.6, 0.4], [0.3, 0.7]])
        self.assertEqual(label, 1)
        np.testing.assert_allclose(mean, [0.45, 0.55])

    def test_ties_go_to_lowest_index(self):
        self.assertEqual(fuse_predictions([[0.5, 0.5], [0.5, 0.5]])[0], 0)

    def test_identity_policy_matches_plain_forward(self):
        model = Model(init_params(8, 3, seed=2), ('A', 'B', 'C'), 16)
        frame = np.random.default_rng(0).standard_normal((16, 2)).astype(np.float32)
        label, mean = tta_predict(model, frame, builtin_policy('none'))
        plain = model.predict_proba(frame[None])[0]
        np.testing.assert_array_equal(mean, plain)
        self.assertEqual(label, int(np.argmax(plain)))

    def test_rotation_fusion_is_mean_of_variants(self):
        model = Model(init_params(8, 3, seed=2), ('A', 'B', 'C'), 16)
        frame = np.random.default_rng(0).standard_normal((16, 2)).astype(np.float32)
        _, mean = tta_predict(model, frame, builtin_policy('rotation'))
        self.assertAlmostEqual(float(mean.sum()), 1.0, places=5)


class MetricsTests(SimpleTestCase):
    def test_oracle_is_perfect(self):
        labels = np.array([0, 1, 2, 0, 1, 2])
        snrs = np.array([0, 0, 0, 10, 10, 10])
        metrics = Metrics(('A', 'B', 'C'), confusion_by_snr(labels, labels, snrs, 3))
        self.assertEqual(metrics.snrs, [0, 10])
        self.assertEqual(metrics.accuracy_by_snr, {0: 1.0, 10: 1.0})
        np.testing.assert_array_equal(metrics.confusion[0], np.eye(3, dtype=int))

    def test_constant_model_on_balanced_set(self):
        labels = np.tile(np.arange(4), 4)
        snrs = np.repeat([0, 10], 8)
        metrics = Metrics(tuple("ABCD"), confusion_by_snr(labels, np.zeros_like(labels), snrs, 4))
        self.assertEqual(metrics.accuracy_by_snr, {0: 0.25, 10: 0.25})
        np.testing.assert_array_equal(metrics.confusion[0].sum(axis=1), [2, 2, 2, 2])

    def test_accuracy_and_per_class(self):
        confusion = {0: np.array([[3, 1], [0, 0]])}
        metrics = Metrics(('A', 'B'), confusion)
        self.assertEqual(metrics.accuracy(0), 0.75)
        self.assertEqual(metrics.count(0), 4)
        per_class = metrics.per_class_accuracy(0)
        self.assertEqual(per_class[0], 0.75)
        self.assertTrue(np.isnan(per_class[1]))

    def test_class_table_mismatch(self):
        model = Model(init_params(4, 2), ('A', 'C'), 8)
        with self.assertRaises(ClassTableMismatchError):
            predict_dataset(model, make_dataset())

    def test_evaluate_counts_every_frame(self):
        model = Model(init_params(4, 2), ('A', 'B'), 8)
        ds = make_dataset(n_per_stratum=5)
        metrics = evaluate(model, ds, builtin_policy('flip'))
        self.assertEqual(sum(metrics.count(snr) for snr in metrics.snrs), len(ds))

    def test_noise_fusion_is_seeded(self):
        model = Model(init_params(4, 2), ('A', 'B'), 8)
        ds = make_dataset(n_per_stratum=5)
        noise = builtin_policy('noise')
        np.testing.assert_array_equal(predict_dataset(model, ds, noise, seed=1), predict_dataset(model, ds, noise, seed=1))


class ConfigTests(SimpleTestCase):
    def test_phase_names(self):
        self.assertIs(Phase.parse('train-test'), Phase.TRAIN_TEST)
        self.assertTrue(Phase.TRAIN_TEST.augments_train and Phase.TRAIN_TEST.augments_test)
        with self.assertRaises(InvalidArgumentError):
            Phase.parse('always')

    def test_phase_needs_policy(self):
        with self.assertRaises(InvalidArgumentError):
            ExperimentConfig(aug_phase='train', policy='none')

    def test_derived_seeds(self):
        cfg = ExperimentConfig(seed=10, train=TrainConfig(seed=3))
        self.assertEqual(cfg.seeds, {'split': 10, 'subsample': 11, 'augment': 12, 'init': 13, 'tta': 14, 'train': 3})

    def test_regimes(self):
        regimes = parse_regimes('none,train,test:flip,train-test:joint')
        self.assertEqual([r.label for r in regimes], ['baseline', 'train:rotation', 'test:flip', 'train_test:joint'])
        with self.assertRaises(InvalidArgumentError):
            parse_regimes('train:mixup')


class RunExperimentTests(SimpleTestCase):
    def setUp(self):
        self.data = generate_dataset(GenConfig(
            classes=(ModClass.BPSK, ModClass.QPSK), snr_grid=(10,), frames_per_class_per_snr=8, seq_len=16, seed=1,
        ))
        self.train = TrainConfig(epochs=2, batch_size=8)

    def test_end_to_end(self):
        cfg = ExperimentConfig(aug_phase='train_test', policy='rotation', seq_len=16, hidden=4, train=self.train)
        result = run_experiment(cfg, self.data)
        self.assertEqual(len(result.test), 8)
        self.assertEqual(len(result.train), 32)
        self.assertEqual(len(result.history), 2)
        self.assertEqual(result.metrics.count(10), 8)
        self.assertEqual(result.model.provenance['policy'], 'rotation[rot0, rot1, rot2, rot3]')

    def test_short_frames_by_halving(self):
        for split_first in (False, True):
            cfg = ExperimentConfig(seq_len=8, hidden=4, split_before_halve=split_first, train=self.train)
            result = run_experiment(cfg, self.data)
            self.assertEqual((len(result.train), len(result.test)), (16, 16))
            self.assertEqual(result.test.seq_len, 8)

    def test_incompatible_length(self):
        with self.assertRaises(InvalidArgumentError):
            run_experiment(ExperimentConfig(seq_len=6, hidden=4, train=self.train), self.data)

    def test_repeatable(self):
        cfg = ExperimentConfig(aug_phase='train', policy='noise', seq_len=16, hidden=4, train=self.train, seed=2)
        a, b = run_experiment(cfg, self.data), run_experiment(cfg, self.data, workers=2)
        self.assertEqual(a.history, b.history)
        for ta, tb in zip(a.model.params.tensors(), b.model.params.tensors()):
            np.testing.assert_array_equal(ta, tb)

    def test_empty_dataset(self):
        empty = Dataset(iq=np.zeros((0, 16, 2)), labels=np.zeros(0, dtype=int), snrs=np.zeros(0, dtype=int),
                        class_names=('BPSK', 'QPSK'))
        with self.assertRaises(InvalidInputError):
            run_experiment(ExperimentConfig(seq_len=16, hidden=4, train=self.train), empty)
