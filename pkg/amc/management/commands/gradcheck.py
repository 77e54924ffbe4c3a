import numpy as np

from amc import reports
from amc.config import Option, non_negative_int, positive_float, positive_int
from amc.exceptions import InvariantViolation
from amc.management.base import RadioCommand, RunOutcome, manifest_for
from amc.nn import count_params, draw_masks, gradient_check, inference_macs, init_params


class Command(RadioCommand):
    help = 'Compare analytic LSTM gradients with central differences on a small random network.'

    options = {
        'hidden': Option(positive_int, default=8),
        'classes': Option(positive_int, default=3),
        'len': Option(positive_int, default=16),
        'batch': Option(positive_int, default=2),
        'dropout': Option(float, default=0.0, help='Apply fixed dropout masks of this rate.'),
        'seed': Option(non_negative_int, default=0),
        'tolerance': Option(positive_float, default=1e-4),
        'out': Option(str, default='gradcheck.csv'),
    }

    def run(self, opts):
        hidden, classes = opts['hidden'], opts['classes']
        rng = np.random.default_rng(opts['seed'])
        params = init_params(hidden, classes, seed=opts['seed'], dtype=np.float64)
        # non-zero biases so every bias gradient is exercised
        params = params.map(lambda t: t + 0.1 * rng.standard_normal(t.shape))
        features = rng.standard_normal((opts['batch'], opts['len'], 2))
        labels = rng.integers(0, classes, size=opts['batch'])
        masks = None
        if opts['dropout'] > 0:
            masks = draw_masks(rng, opts['batch'], opts['len'], hidden, opts['dropout'], dtype=np.float64)

        errors = gradient_check(params, features, labels, masks)
        path = reports.write_gradcheck(errors, opts['out'])
        for name, error in errors.items():
            self.stdout.write(f"{name:>12}  {error:.3e}")
        per_step, head = inference_macs(hidden, classes)
        self.stdout.write(
            f"{count_params(hidden, classes)} parameters, {per_step * opts['len'] + head} "
            f"multiply-accumulates per {opts['len']}-sample frame"
        )
        worst = max(errors.values())
        if not worst <= opts['tolerance']:
            raise InvariantViolation(f"gradient check failed: worst relative error {worst:.3e} > {opts['tolerance']:g}")
        return RunOutcome([path], manifest_for(path), {'seed': opts['seed']})
