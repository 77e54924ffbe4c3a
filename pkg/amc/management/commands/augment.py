from amc import rsig
from amc.augment import POLICY_NAMES, augment_dataset, parse_sigmas, resolve_policy
from amc.config import Option, non_negative_int
from amc.management.base import RadioCommand, RunOutcome, manifest_for


class Command(RadioCommand):
    help = 'Expand an RSIG dataset by an augmentation policy (N variants per frame).'

    options = {
        'data': Option(str, required=True),
        'policy': Option(str, default='rotation', choices=POLICY_NAMES),
        'noise_sigmas': Option(parse_sigmas, help='Comma-separated sigmas for the noise policy.'),
        'seed': Option(non_negative_int, default=0, help='Seed of the noise draws.'),
        'out': Option(str, required=True),
    }
    input_options = ('data',)

    def run(self, opts):
        data = rsig.read(opts['data'])
        policy = resolve_policy(opts['policy'], opts['noise_sigmas'])
        augmented = augment_dataset(data, policy, opts['seed'], workers=opts['threads'])
        path = rsig.write(augmented, opts['out'])
        self.stdout.write(f"{len(data)} frames x {policy.scale_factor} ({policy.describe()}) = {len(augmented)} -> {path}")
        return RunOutcome([path], manifest_for(path), {'augment': opts['seed']})
