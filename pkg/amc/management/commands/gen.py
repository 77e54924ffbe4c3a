from amc import rsig
from amc.config import Option, non_negative_int, parse_bool, positive_int
from amc.exceptions import InvariantViolation
from amc.frames import SNR_GRID
from amc.management.base import RadioCommand, RunOutcome, manifest_for
from amc.modem import GenConfig, ImpairmentRanges, ModClass, generate_dataset, parse_classes, parse_snr_grid


class Command(RadioCommand):
    help = 'Synthesize labelled I/Q frames over a class x SNR grid and write them as RSIG v1.'

    options = {
        'classes': Option(parse_classes, default=tuple(ModClass), help="'all' or a comma list, e.g. bpsk,qpsk"),
        'snr': Option(parse_snr_grid, default=SNR_GRID, help='start:stop:step (stop inclusive) or a comma list'),
        'per_class': Option(positive_int, default=1000, help='Frames per class per SNR.'),
        'len': Option(positive_int, default=128, help='Samples per frame.'),
        'seed': Option(non_negative_int, default=0),
        'out': Option(str, required=True, help='Output RSIG file.'),
        'cfo_max': Option(float, default=1e-3, help='Carrier offset range, cycles per sample.'),
        'sro_max_ppm': Option(float, default=50.0, help='Sample-rate offset range, ppm.'),
        'fixed_phase': Option(parse_bool, default=False, flag=True, help='Disable the random phase offset.'),
        'multipath': Option(parse_bool, default=False, flag=True, help='Enable the random 3-tap multipath channel.'),
    }

    def run(self, opts):
        cfg = GenConfig(
            classes=opts['classes'],
            snr_grid=opts['snr'],
            frames_per_class_per_snr=opts['per_class'],
            seq_len=opts['len'],
            seed=opts['seed'],
            impairments=ImpairmentRanges(
                random_phase=not opts['fixed_phase'],
                max_cfo=opts['cfo_max'],
                max_sro_ppm=opts['sro_max_ppm'],
                multipath=opts['multipath'],
            ),
        )
        ds = generate_dataset(cfg, workers=opts['threads'])
        if len(ds) != cfg.total_frames:
            raise InvariantViolation(f"generated {len(ds)} frames, expected {cfg.total_frames}")
        path = rsig.write(ds, opts['out'])
        self.stdout.write(
            f"{len(ds)} frames ({len(cfg.classes)} classes x {len(cfg.snr_grid)} SNRs x "
            f"{cfg.frames_per_class_per_snr}), length {cfg.seq_len} -> {path}"
        )
        return RunOutcome([path], manifest_for(path), {'seed': cfg.seed})
