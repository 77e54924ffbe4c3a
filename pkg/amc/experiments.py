"""Experiment protocol: stratified split, partial-data subsampling, augmentation
regimes, test-time fusion and per-SNR metrics."""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .augment import augment_dataset, augment_frame, augment_frames, resolve_policy
from .exceptions import ClassTableMismatchError, DegenerateInputError, InvalidArgumentError, InvalidInputError
from .frames import halve_dataset, prepare_features
from .nn import Model, TrainConfig, fit, init_params

logger = logging.getLogger(__name__)

# Test frames per evaluation step; a multiple of nn.EVAL_CHUNK
EVAL_FRAMES = 1024


class Phase(str, Enum):
    NONE = 'none'
    TRAIN = 'train'
    TEST = 'test'
    TRAIN_TEST = 'train_test'

    @classmethod
    def parse(cls, text):
        try:
            return cls(str(text).strip().lower().replace('-', '_'))
        except ValueError as exc:
            raise InvalidArgumentError(f"unknown augmentation phase {text!r}") from exc

    @property
    def augments_train(self):
        return self in (Phase.TRAIN, Phase.TRAIN_TEST)

    @property
    def augments_test(self):
        return self in (Phase.TEST, Phase.TRAIN_TEST)


@dataclass(frozen=True)
class ExperimentConfig:
    aug_phase: Phase = Phase.NONE
    policy: str = 'none'
    noise_sigmas: Optional[tuple] = None
    train_fraction: float = 1.0
    seq_len: int = 128
    hidden: int = 128
    split_before_halve: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'aug_phase', Phase.parse(self.aug_phase))
        if self.policy == 'none' and self.aug_phase is not Phase.NONE:
            raise InvalidArgumentError(f"augmentation phase {self.aug_phase.value!r} needs a policy other than 'none'")
        if not 0 < self.train_fraction <= 1:
            raise InvalidArgumentError(f"train fraction must lie in (0, 1], got {self.train_fraction}")
        if self.seq_len < 2 or self.hidden < 1:
            raise InvalidArgumentError("seq_len must be >= 2 and hidden >= 1")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be non-negative")
        # fail early on a bad policy name
        self.resolved_policy()

    def resolved_policy(self):
        return resolve_policy(self.policy, self.noise_sigmas)

    @property
    def seeds(self):
        return {
            'split': self.seed,
            'subsample': self.seed + 1,
            'augment': self.seed + 2,
            'init': self.seed + 3,
            'tta': self.seed + 4,
            'train': self.train.seed,
        }

    def describe(self):
        return {
            'aug_phase': self.aug_phase.value,
            'policy': self.resolved_policy().describe(),
            'train_fraction': self.train_fraction,
            'seq_len': self.seq_len,
            'hidden': self.hidden,
            'split_before_halve': self.split_before_halve,
            'epochs': self.train.epochs,
            'batch_size': self.train.batch_size,
            'initial_lr': self.train.initial_lr,
            'dropout': self.train.dropout,
            'plateau_patience': self.train.plateau_patience,
            'seeds': self.seeds,
        }


def split_dataset(ds, seed=0):
    """Stratified 50/50 split by (class, SNR); both sides keep source order."""
    if len(ds) == 0:
        raise InvalidInputError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for (label, snr), indices in ds.strata().items():
        if indices.size % 2:
            raise InvalidInputError(
                f"stratum {ds.class_names[label]} @ {snr} dB has {indices.size} frames; an even count is required"
            )
        shuffled = rng.permutation(indices)
        train.append(shuffled[:indices.size // 2])
        test.append(shuffled[indices.size // 2:])
    train_idx, test_idx = np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
    logger.info("Split %d frames into %d train / %d test", len(ds), train_idx.size, test_idx.size)
    return (
        ds.take(train_idx, provenance=f"{ds.provenance} | split train seed={seed}"),
        ds.take(test_idx, provenance=f"{ds.provenance} | split test seed={seed}"),
    )


def stratum_quotas(sizes, fraction, rng):
    """Per-stratum sample counts: floors, plus one for the largest remainders.

    The total is ``round(fraction * sum(sizes))`` (round half to even);
    equal remainders are ordered by a seeded permutation.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    exact = fraction * sizes
    quotas = np.floor(exact).astype(np.int64)
    extra = int(round(fraction * int(sizes.sum()))) - int(quotas.sum())
    if extra > 0:
        remainder = exact - quotas
        tie_break = rng.permutation(sizes.size)
        order = np.lexsort((tie_break, -remainder))
        quotas[order[:extra]] += 1
    return quotas


def subsample(ds, fraction, seed=0):
    if not 0 < fraction <= 1:
        raise InvalidArgumentError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1:
        return ds
    rng = np.random.default_rng(seed)
    strata = ds.strata()
    quotas = stratum_quotas([indices.size for indices in strata.values()], fraction, rng)
    kept = []
    for ((label, snr), indices), quota in zip(strata.items(), quotas):
        if quota == 0:
            raise DegenerateInputError(
                f"fraction {fraction} leaves stratum {ds.class_names[label]} @ {snr} dB empty"
            )
        kept.append(rng.choice(indices, size=int(quota), replace=False))
    index = np.sort(np.concatenate(kept))
    logger.info("Subsampled %d of %d frames (fraction %g)", index.size, len(ds), fraction)
    return ds.take(index, provenance=f"{ds.provenance} | subsample fraction={fraction} seed={seed}")


def fuse_predictions(probs):
    """Sum the N distributions; argmax of the sum (lowest index on ties) and the mean."""
    probs = np.asarray(probs)
    total = probs.sum(axis=0)
    return int(np.argmax(total)), total / probs.shape[0]


def tta_predict(model, frame, policy, rng=None, workers=1):
    variants = augment_frame(frame, policy, rng)
    return fuse_predictions(model.predict_proba(variants, workers))


@dataclass(frozen=True)
class Metrics:
    """Confusion matrices per SNR (rows true class, columns predicted)."""

    class_names: tuple
    confusion: dict

    @property
    def snrs(self):
        return sorted(self.confusion)

    def count(self, snr):
        return int(self.confusion[snr].sum())

    def accuracy(self, snr):
        matrix = self.confusion[snr]
        total = matrix.sum()
        return float(np.trace(matrix) / total) if total else 0.0

    @property
    def accuracy_by_snr(self):
        return {snr: self.accuracy(snr) for snr in self.snrs}

    @property
    def overall_accuracy(self):
        correct = sum(int(np.trace(m)) for m in self.confusion.values())
        total = sum(int(m.sum()) for m in self.confusion.values())
        return correct / total if total else 0.0

    def per_class_accuracy(self, snr):
        matrix = self.confusion[snr]
        rows = matrix.sum(axis=1)
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(rows > 0, np.diag(matrix) / np.maximum(rows, 1), np.nan)


def confusion_by_snr(labels, predictions, snrs, num_classes):
    confusion = {}
    for snr in sorted(int(s) for s in np.unique(snrs)):
        mask = snrs == snr
        matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(matrix, (labels[mask], predictions[mask]), 1)
        confusion[snr] = matrix
    return confusion


def predict_dataset(model, ds, policy=None, seed=0, workers=1):
    """Predicted class of every frame, fusing the policy's variants when one is given."""
    if tuple(model.class_names) != tuple(ds.class_names):
        raise ClassTableMismatchError(
            f"model classes {','.join(model.class_names)} differ from dataset classes {','.join(ds.class_names)}"
        )
    if model.seq_len != ds.seq_len:
        logger.warning("model was trained on %d-sample frames, dataset has %d", model.seq_len, ds.seq_len)
    policy = policy or resolve_policy('none')
    predictions = np.empty(len(ds), dtype=np.int64)
    for start in range(0, len(ds), EVAL_FRAMES):
        variants = augment_frames(ds.iq[start:start + EVAL_FRAMES], policy, seed, start=start)
        count, n_variants = variants.shape[:2]
        probs = model.predict_proba(variants.reshape((-1,) + variants.shape[2:]), workers)
        predictions[start:start + count] = np.argmax(probs.reshape(count, n_variants, -1).sum(axis=1), axis=1)
    return predictions


def evaluate(model, test, policy=None, seed=0, workers=1):
    predictions = predict_dataset(model, test, policy, seed, workers)
    metrics = Metrics(tuple(test.class_names), confusion_by_snr(test.labels, predictions, test.snrs, test.num_classes))
    logger.info(
        "Evaluated %d frames%s: overall accuracy %.4f",
        len(test), f" with {policy.describe()} fusion" if policy else '', metrics.overall_accuracy,
    )
    return metrics


class ExperimentResult(NamedTuple):
    model: Model
    metrics: Metrics
    history: list
    train: object
    test: object


def _halving(cfg, data):
    if data.seq_len == cfg.seq_len:
        return False
    if data.seq_len == 2 * cfg.seq_len:
        return True
    raise InvalidArgumentError(f"cannot run {cfg.seq_len}-sample experiments on {data.seq_len}-sample frames")


def run_experiment(cfg, data, workers=1):
    halve = _halving(cfg, data)
    seeds = cfg.seeds
    policy = cfg.resolved_policy()

    if halve and not cfg.split_before_halve:
        data = halve_dataset(data)
    train, test = split_dataset(data, seeds['split'])
    if halve and cfg.split_before_halve:
        train, test = halve_dataset(train), halve_dataset(test)
    train = subsample(train, cfg.train_fraction, seeds['subsample'])
    if cfg.aug_phase.augments_train:
        train = augment_dataset(train, policy, seeds['augment'], workers)

    params = init_params(cfg.hidden, data.num_classes, 2, seed=seeds['init'])
    logger.info(
        "Training %d-cell LSTM on %d frames (%s, phase %s)", cfg.hidden, len(train), policy.name, cfg.aug_phase.value
    )
    history = fit(params, prepare_features(train.iq), train.labels, cfg.train, workers)
    model = Model(params, data.class_names, cfg.seq_len, provenance=cfg.describe())
    tta = policy if cfg.aug_phase.augments_test else None
    metrics = evaluate(model, test, tta, seeds['tta'], workers)
    return ExperimentResult(model, metrics, history, train, test)


class Regime(NamedTuple):
    phase: Phase
    policy: str

    @property
    def label(self):
        return 'baseline' if self.phase is Phase.NONE else f"{self.phase.value}:{self.policy}"


def parse_regimes(text, default_policy='rotation'):
    """Comma list of ``phase`` or ``phase:policy`` items, e.g. ``none,train:rotation,train-test:joint``."""
    regimes = []
    for item in str(text).split(','):
        if not item.strip():
            continue
        phase_text, _, policy = item.strip().partition(':')
        phase = Phase.parse(phase_text)
        policy = 'none' if phase is Phase.NONE else (policy or default_policy)
        resolve_policy(policy)
        regimes.append(Regime(phase, policy))
    if not regimes:
        raise InvalidArgumentError("no regimes given")
    return regimes


def compare_regimes(base, regimes, seeds, data, workers=1, on_result=None):
    """Mean per-SNR test accuracy of every regime over ``seeds``."""
    summary = {}
    for regime in regimes:
        per_seed = []
        for seed in seeds:
            cfg = ExperimentConfig(
                aug_phase=regime.phase,
                policy=regime.policy,
                noise_sigmas=base.noise_sigmas if regime.policy == 'noise' else None,
                train_fraction=base.train_fraction,
                seq_len=base.seq_len,
                hidden=base.hidden,
                split_before_halve=base.split_before_halve,
                train=replace(base.train, seed=seed),
                seed=seed,
            )
            result = run_experiment(cfg, data, workers)
            if on_result is not None:
                on_result(regime, seed, result)
            per_seed.append(result.metrics.accuracy_by_snr)
        snrs = sorted(set().union(*per_seed))
        summary[regime.label] = {snr: float(np.mean([acc[snr] for acc in per_seed if snr in acc])) for snr in snrs}
        logger.info("%s: mean accuracy over %d seeds %s", regime.label, len(seeds), summary[regime.label])
    return summary
