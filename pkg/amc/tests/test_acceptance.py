"""Desk-scale training runs; run with ``manage.py test --tag slow``."""
import numpy as np
from django.test import SimpleTestCase, tag

from amc.experiments import ExperimentConfig, Phase, run_experiment
from amc.modem import GenConfig, ModClass, generate_dataset
from amc.nn import TrainConfig

DESK_CLASSES = (ModClass.BPSK, ModClass.QPSK, ModClass.PAM4, ModClass.QAM16)
SEEDS = (0, 1, 2)


@tag('slow')
class DeskScaleTests(SimpleTestCase):
    def test_learns_four_classes_at_high_snr(self):
        data = generate_dataset(GenConfig(
            classes=DESK_CLASSES, snr_grid=range(10, 20, 2), frames_per_class_per_snr=500, seq_len=128, seed=0,
        ))
        accuracies = []
        for seed in SEEDS:
            cfg = ExperimentConfig(hidden=32, train=TrainConfig(epochs=20, seed=seed), seed=seed)
            accuracies.append(run_experiment(cfg, data, workers=4).metrics.overall_accuracy)
        self.assertGreaterEqual(sum(acc >= 0.9 for acc in accuracies), 2, accuracies)

    def test_joint_augmentation_helps_on_a_small_subset(self):
        data = generate_dataset(GenConfig(
            classes=DESK_CLASSES, snr_grid=range(0, 10, 2), frames_per_class_per_snr=500, seq_len=128, seed=1,
        ))
        baseline, augmented = [], []
        for seed in SEEDS:
            train = TrainConfig(epochs=20, seed=seed)
            common = {'train_fraction': 0.125, 'hidden': 32, 'train': train, 'seed': seed}
            baseline.append(run_experiment(ExperimentConfig(**common), data, workers=4).metrics.overall_accuracy)
            joint = ExperimentConfig(aug_phase=Phase.TRAIN_TEST, policy='joint', **common)
            augmented.append(run_experiment(joint, data, workers=4).metrics.overall_accuracy)
        self.assertGreaterEqual(np.mean(augmented), np.mean(baseline) - 0.01, (baseline, augmented))
        self.assertGreaterEqual(sum(a > b for a, b in zip(augmented, baseline)), 2, (baseline, augmented))
