from amc import rsig
from amc.config import Option
from amc.frames import halve_dataset
from amc.management.base import RadioCommand, RunOutcome, manifest_for


class Command(RadioCommand):
    help = 'Split every frame of an RSIG dataset into its two halves.'

    options = {
        'data': Option(str, required=True),
        'out': Option(str, required=True),
    }
    input_options = ('data',)

    def run(self, opts):
        data = rsig.read(opts['data'])
        halved = halve_dataset(data)
        path = rsig.write(halved, opts['out'])
        self.stdout.write(f"{len(data)} frames of length {data.seq_len} -> {len(halved)} of length {halved.seq_len} -> {path}")
        return RunOutcome([path], manifest_for(path))
