from amc import reports, rmdl, rsig
from amc.augment import POLICY_NAMES, parse_sigmas, resolve_policy
from amc.config import Option, non_negative_int
from amc.experiments import evaluate
from amc.management.base import RadioCommand, RunOutcome, manifest_for


class Command(RadioCommand):
    help = 'Evaluate an RMDL model on an RSIG dataset, optionally with test-time augmentation.'

    options = {
        'model': Option(str, required=True),
        'data': Option(str, required=True),
        'tta': Option(str, default='none', choices=POLICY_NAMES, help='Fusion policy for test-time augmentation.'),
        'noise_sigmas': Option(parse_sigmas, help='Comma-separated sigmas for the noise policy.'),
        'seed': Option(non_negative_int, default=0, help='Seed of the test-time noise draws.'),
        'out': Option(str, required=True, help='Report directory.'),
    }
    input_options = ('model', 'data')

    def run(self, opts):
        model = rmdl.read(opts['model'])
        data = rsig.read(opts['data'])
        policy = None
        if opts['tta'] != 'none' or opts['noise_sigmas'] is not None:
            policy = resolve_policy(opts['tta'], opts['noise_sigmas'])
        metrics = evaluate(model, data, policy, seed=opts['seed'], workers=opts['threads'])
        paths = reports.write_metrics(metrics, opts['out'])
        self.stdout.write(
            f"{len(data)} frames, {len(metrics.snrs)} SNRs: overall accuracy {metrics.overall_accuracy:.4f} -> {opts['out']}"
        )
        return RunOutcome(paths, manifest_for(opts['out']), {'tta': opts['seed']})
