from pathlib import Path

from amc import reports, rmdl, rsig
from amc.augment import POLICY_NAMES, parse_sigmas
from amc.config import Option, non_negative_int, parse_bool, positive_float, positive_int
from amc.experiments import ExperimentConfig, Phase, run_experiment
from amc.management.base import RadioCommand, RunOutcome, manifest_for
from amc.manifest import sha256_file
from amc.nn import TrainConfig


class Command(RadioCommand):
    help = 'Split, optionally augment, train the two-layer LSTM and write an RMDL model plus reports.'

    options = {
        'data': Option(str, required=True, help='RSIG dataset (split 50/50 into train and test).'),
        'out': Option(str, required=True, help='Output RMDL model file.'),
        'aug': Option(str, default='none', choices=POLICY_NAMES, help='Augmentation policy.'),
        'phase': Option(Phase.parse, default=Phase.NONE, help='none | train | test | train-test'),
        'noise_sigmas': Option(parse_sigmas, help='Comma-separated sigmas for the noise policy.'),
        'fraction': Option(float, default=1.0, help='Fraction of the training split to keep.'),
        'epochs': Option(positive_int, default=80),
        'batch': Option(positive_int, default=128),
        'lr': Option(positive_float, default=0.001),
        'hidden': Option(positive_int, default=128, help='LSTM cells per layer.'),
        'dropout': Option(float, default=0.5),
        'patience': Option(positive_int, default=3, help='Flat epochs before the learning rate halves.'),
        'seed': Option(non_negative_int, default=0),
        'len': Option(positive_int, help='Frame length to train on; half the data length halves every frame.'),
        'split_before_halve': Option(parse_bool, default=False, flag=True),
        'reports': Option(str, help='Report directory (default: next to the model).'),
        'save_test': Option(str, help='Also write the held-out test split as RSIG.'),
    }
    input_options = ('data',)

    def run(self, opts):
        data = rsig.read(opts['data'])
        cfg = ExperimentConfig(
            aug_phase=opts['phase'],
            policy=opts['aug'],
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
                seed=opts['seed'],
            ),
            seed=opts['seed'],
        )
        result = run_experiment(cfg, data, workers=opts['threads'])
        result.model.provenance['data_sha256'] = sha256_file(opts['data'])

        model_path = rmdl.write(result.model, opts['out'])
        report_dir = Path(opts['reports'] or model_path.parent)
        report_dir.mkdir(parents=True, exist_ok=True)
        outputs = [model_path, reports.write_history(result.history, report_dir)]
        outputs += reports.write_metrics(result.metrics, report_dir)
        if opts['save_test']:
            outputs.append(rsig.write(result.test, opts['save_test']))

        self.stdout.write(
            f"trained on {len(result.train)} frames, tested on {len(result.test)}: "
            f"overall accuracy {result.metrics.overall_accuracy:.4f} -> {model_path}"
        )
        return RunOutcome(outputs, manifest_for(model_path), cfg.seeds)
