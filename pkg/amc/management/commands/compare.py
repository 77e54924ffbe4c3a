from pathlib import Path

from amc import reports, rsig
from amc.augment import POLICY_NAMES, parse_sigmas
from amc.config import Option, parse_bool, positive_float, positive_int, seed_list
from amc.experiments import ExperimentConfig, compare_regimes, parse_regimes
from amc.management.base import RadioCommand, RunOutcome, manifest_for
from amc.nn import TrainConfig


def regime_dir(out_dir, regime, seed):
    return Path(out_dir) / f"{regime.label.replace(':', '_')}_seed{seed}"


class Command(RadioCommand):
    help = 'Train and evaluate several augmentation regimes over several seeds; write mean accuracy per SNR.'

    options = {
        'data': Option(str, required=True),
        'out': Option(str, required=True, help='Report directory.'),
        'regimes': Option(str, default='none,train,test,train-test', help='Comma list of phase[:policy].'),
        'aug': Option(str, default='rotation', choices=POLICY_NAMES, help='Policy for regimes that name none.'),
        'noise_sigmas': Option(parse_sigmas, help='Comma-separated sigmas for the noise policy.'),
        'seeds': Option(seed_list, default=(0, 1, 2)),
        'fraction': Option(float, default=1.0),
        'epochs': Option(positive_int, default=80),
        'batch': Option(positive_int, default=128),
        'lr': Option(positive_float, default=0.001),
        'hidden': Option(positive_int, default=128),
        'dropout': Option(float, default=0.5),
        'patience': Option(positive_int, default=3),
        'len': Option(positive_int),
        'split_before_halve': Option(parse_bool, default=False, flag=True),
    }
    input_options = ('data',)

    def run(self, opts):
        data = rsig.read(opts['data'])
        regimes = parse_regimes(opts['regimes'], default_policy=opts['aug'])
        base = ExperimentConfig(
            noise_sigmas=opts['noise_sigmas'],
            train_fraction=opts['fraction'],
            seq_len=opts['len'] or data.seq_len,
            hidden=opts['hidden'],
            split_before_halve=opts['split_before_halve'],
            train=TrainConfig(
                epochs=opts['epochs'],
                batch_size=opts['batch'],
                initial_lr=opts['lr'],
                dropout=opts['dropout'],
                plateau_patience=opts['patience'],
            ),
        )
        out_dir = Path(opts['out'])
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = []

        def on_result(regime, seed, result):
            run_dir = regime_dir(out_dir, regime, seed)
            run_dir.mkdir(parents=True, exist_ok=True)
            outputs.append(reports.write_history(result.history, run_dir))
            outputs.extend(reports.write_metrics(result.metrics, run_dir))
            self.stdout.write(f"{regime.label} seed {seed}: overall accuracy {result.metrics.overall_accuracy:.4f}")

        summary = compare_regimes(base, regimes, opts['seeds'], data, workers=opts['threads'], on_result=on_result)
        outputs.append(reports.write_summary(summary, out_dir, len(opts['seeds'])))
        return RunOutcome(outputs, manifest_for(out_dir), {'seeds': list(opts['seeds'])})
