"""CSV reports: accuracy vs SNR, per-SNR confusion matrices, training history.

All files are UTF-8, comma separated, LF line endings, reals with six decimals.
"""
import csv
import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def _real(value):
    return '' if value is None or np.isnan(value) else f'{value:.6f}'


def _write(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_accuracy(metrics, out_dir):
    rows = [[snr, _real(metrics.accuracy(snr)), metrics.count(snr)] for snr in metrics.snrs]
    return _write(Path(out_dir) / 'accuracy_vs_snr.csv', ['snr_db', 'accuracy', 'n'], rows)


def write_confusions(metrics, out_dir):
    paths = []
    for snr in metrics.snrs:
        matrix = metrics.confusion[snr]
        rows = [[name] + [int(v) for v in matrix[k]] for k, name in enumerate(metrics.class_names)]
        paths.append(_write(Path(out_dir) / f'confusion_{snr}.csv', [''] + list(metrics.class_names), rows))
    return paths


def write_per_class(metrics, out_dir):
    rows = [[snr] + [_real(v) for v in metrics.per_class_accuracy(snr)] for snr in metrics.snrs]
    return _write(Path(out_dir) / 'per_class_accuracy.csv', ['snr_db'] + list(metrics.class_names), rows)


def write_history(history, out_dir):
    rows = [[s.epoch, _real(s.train_loss), _real(s.train_acc), _real(s.lr)] for s in history]
    return _write(Path(out_dir) / 'history.csv', ['epoch', 'train_loss', 'train_acc', 'lr'], rows)


def write_summary(summary, out_dir, n_seeds):
    rows = [
        [label, snr, _real(accuracy), n_seeds]
        for label, by_snr in summary.items()
        for snr, accuracy in sorted(by_snr.items())
    ]
    return _write(Path(out_dir) / 'summary.csv', ['regime', 'snr_db', 'mean_accuracy', 'n_seeds'], rows)


def write_metrics(metrics, out_dir):
    """Accuracy, per-class accuracy and every confusion matrix; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [write_accuracy(metrics, out_dir), write_per_class(metrics, out_dir)]
    paths += write_confusions(metrics, out_dir)
    logger.info("Wrote %d report files to %s", len(paths), out_dir)
    return paths


def write_gradcheck(errors, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return _write(path, ['tensor', 'relative_error'], [[name, f'{error:.6e}'] for name, error in errors.items()])
