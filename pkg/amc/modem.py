"""Synthetic labelled I/Q frames for the eleven modulation categories.

Digital classes are random symbol streams pulse-shaped with a root-raised-
cosine filter; CPFSK/GFSK are continuous-phase; the analog classes modulate
a synthetic band-limited source. ``impair`` then applies the channel:
multipath, phase offset, carrier frequency offset, sample-rate offset and
AWGN, in that order.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
from scipy import signal

from .exceptions import InvalidArgumentError, InvalidInputError
from .frames import SNR_GRID, Dataset, check_frame, from_complex, to_complex

logger = logging.getLogger(__name__)

# Pulse shaping
ROLLOFF = 0.35
SAMPLES_PER_SYMBOL = 8
FILTER_SPAN = 8

# Continuous-phase and analog modulation parameters
CPFSK_INDEX = 0.5
GFSK_INDEX = 0.5
GFSK_BT = 0.3
AM_DEPTH = 0.5
WBFM_DEVIATION = 0.05  # peak deviation, cycles per sample
SOURCE_TONES = 3
SOURCE_BAND = (0.002, 0.02)  # cycles per sample
SOURCE_NOISE_LEVEL = 0.5


class ModClass(str, Enum):
    """Modulation categories in canonical (alphabetical) label order."""

    PSK8 = '8PSK'
    AM_DSB = 'AM-DSB'
    AM_SSB = 'AM-SSB'
    BPSK = 'BPSK'
    CPFSK = 'CPFSK'
    GFSK = 'GFSK'
    PAM4 = 'PAM4'
    QAM16 = 'QAM16'
    QAM64 = 'QAM64'
    QPSK = 'QPSK'
    WBFM = 'WBFM'

    @property
    def code(self):
        return list(ModClass).index(self)

    @property
    def is_analog(self):
        return self in (ModClass.AM_DSB, ModClass.AM_SSB, ModClass.WBFM)

    @classmethod
    def parse(cls, name):
        wanted = name.strip().upper().replace('_', '-')
        for member in cls:
            if member.value == wanted or member.value.replace('-', '') == wanted.replace('-', ''):
                return member
        raise InvalidArgumentError(f"unknown modulation class {name!r}")


def parse_classes(text):
    """``all`` or a comma-separated list of class names, in canonical order."""
    if str(text).strip().lower() == 'all':
        return tuple(ModClass)
    chosen = {ModClass.parse(part) for part in str(text).split(',') if part.strip()}
    if not chosen:
        raise InvalidArgumentError("class list is empty")
    return tuple(member for member in ModClass if member in chosen)


def parse_snr_grid(text):
    """``start:stop:step`` (stop inclusive), a single value, or a comma list."""
    text = str(text).strip()
    try:
        if ':' in text:
            start, stop, step = (int(part) for part in text.split(':'))
            if step <= 0 or stop < start:
                raise InvalidArgumentError(f"bad SNR range {text!r}")
            return tuple(range(start, stop + 1, step))
        return tuple(int(part) for part in text.split(',') if part.strip())
    except ValueError as exc:
        raise InvalidArgumentError(f"bad SNR grid {text!r}") from exc


def rrc_taps(rolloff=ROLLOFF, sps=SAMPLES_PER_SYMBOL, span=FILTER_SPAN):
    """Root-raised-cosine impulse response, unit energy, ``span * sps + 1`` taps."""
    t = (np.arange(span * sps + 1) - span * sps / 2) / sps
    taps = np.empty_like(t)
    at_zero = np.isclose(t, 0.0)
    at_edge = np.isclose(np.abs(t), 1 / (4 * rolloff)) if rolloff else np.zeros_like(at_zero)
    rest = ~(at_zero | at_edge)
    taps[at_zero] = 1.0 - rolloff + 4 * rolloff / np.pi
    taps[at_edge] = (rolloff / np.sqrt(2)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * rolloff)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * rolloff))
    )
    tr = t[rest]
    taps[rest] = (np.sin(np.pi * tr * (1 - rolloff)) + 4 * rolloff * tr * np.cos(np.pi * tr * (1 + rolloff))) / (
        np.pi * tr * (1 - (4 * rolloff * tr) ** 2)
    )
    return taps / np.sqrt(np.sum(taps ** 2))


def gaussian_taps(bt=GFSK_BT, sps=SAMPLES_PER_SYMBOL, span=4):
    t = np.arange(-span * sps // 2, span * sps // 2 + 1) / sps
    taps = np.exp(-2 * np.pi ** 2 * bt ** 2 * t ** 2 / np.log(2))
    return taps / taps.sum()


def constellation(mod):
    """Unit-average-power symbol alphabet of a linearly modulated class."""
    if mod is ModClass.BPSK:
        points = np.array([1.0, -1.0], dtype=complex)
    elif mod is ModClass.QPSK:
        points = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))
    elif mod is ModClass.PSK8:
        points = np.exp(2j * np.pi * np.arange(8) / 8)
    elif mod is ModClass.PAM4:
        points = np.array([-3.0, -1.0, 1.0, 3.0], dtype=complex)
    elif mod in (ModClass.QAM16, ModClass.QAM64):
        side = 4 if mod is ModClass.QAM16 else 8
        levels = np.arange(-side + 1, side, 2, dtype=float)
        points = (levels[:, None] + 1j * levels[None, :]).ravel()
    else:
        raise InvalidArgumentError(f"{mod.value} has no symbol constellation")
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


LINEAR_CLASSES = (ModClass.BPSK, ModClass.QPSK, ModClass.PSK8, ModClass.PAM4, ModClass.QAM16, ModClass.QAM64)


class Synthesis(NamedTuple):
    """A clean frame plus, for linear classes, the symbols behind it.

    Symbol ``k`` peaks at frame index ``first_peak + k * SAMPLES_PER_SYMBOL``.
    """

    frame: np.ndarray
    symbols: Optional[np.ndarray]
    first_peak: Optional[int]


def _unit_power(z):
    return z / np.sqrt(np.mean(np.abs(z) ** 2))


def _window_start(rng):
    return FILTER_SPAN * SAMPLES_PER_SYMBOL + int(rng.integers(SAMPLES_PER_SYMBOL))


def _linear(mod, seq_len, rng):
    n_sym = seq_len // SAMPLES_PER_SYMBOL + FILTER_SPAN + 2
    symbols = rng.choice(constellation(mod), size=n_sym)
    upsampled = np.zeros(n_sym * SAMPLES_PER_SYMBOL, dtype=complex)
    upsampled[::SAMPLES_PER_SYMBOL] = symbols
    shaped = np.convolve(upsampled, rrc_taps())
    start = _window_start(rng)
    first_peak = FILTER_SPAN * SAMPLES_PER_SYMBOL // 2 - start
    return Synthesis(_unit_power(shaped[start:start + seq_len]), symbols, first_peak)


def _continuous_phase(mod, seq_len, rng):
    n_sym = seq_len // SAMPLES_PER_SYMBOL + FILTER_SPAN + 2
    bits = rng.choice([-1.0, 1.0], size=n_sym)
    freq = np.repeat(bits, SAMPLES_PER_SYMBOL)
    index = CPFSK_INDEX
    if mod is ModClass.GFSK:
        freq = np.convolve(freq, gaussian_taps(), mode='same')
        index = GFSK_INDEX
    phase = np.pi * index * np.cumsum(freq) / SAMPLES_PER_SYMBOL
    start = _window_start(rng)
    return Synthesis(np.exp(1j * phase[start:start + seq_len]), None, None)


def analog_source(length, rng):
    """Band-limited message in [-1, 1]: random-phase tones plus low-passed noise."""
    n = np.arange(length)
    freqs = rng.uniform(*SOURCE_BAND, size=SOURCE_TONES)
    phases = rng.uniform(-np.pi, np.pi, size=SOURCE_TONES)
    tones = np.sin(2 * np.pi * freqs[:, None] * n[None, :] + phases[:, None]).sum(axis=0)
    lowpass = signal.firwin(65, SOURCE_BAND[1], fs=1.0)
    noise = signal.lfilter(lowpass, 1.0, rng.normal(size=length + lowpass.size))[lowpass.size:]
    message = tones + SOURCE_NOISE_LEVEL * SOURCE_TONES * noise
    return message / np.max(np.abs(message))


def _analog(mod, seq_len, rng):
    message = analog_source(seq_len, rng)
    if mod is ModClass.AM_DSB:
        z = (1.0 + AM_DEPTH * message).astype(complex)
    elif mod is ModClass.AM_SSB:
        z = signal.hilbert(message)
    else:
        z = np.exp(2j * np.pi * WBFM_DEVIATION * np.cumsum(message))
    return Synthesis(z, None, None)


def synthesize(mod, seq_len, rng):
    if seq_len < 2:
        raise InvalidInputError(f"seq_len must be >= 2, got {seq_len}")
    if mod in LINEAR_CLASSES:
        result = _linear(mod, seq_len, rng)
    elif mod in (ModClass.CPFSK, ModClass.GFSK):
        result = _continuous_phase(mod, seq_len, rng)
    else:
        result = _analog(mod, seq_len, rng)
    return result._replace(frame=_unit_power(result.frame))


def modulate(mod, seq_len, rng):
    """Clean baseband frame of unit average power, shape ``(seq_len, 2)``."""
    return from_complex(synthesize(ModClass(mod), seq_len, rng).frame)


@dataclass(frozen=True)
class ChannelConfig:
    """One channel realisation. ``snr_db=None`` means no AWGN."""

    snr_db: Optional[float] = None
    phase_offset: float = 0.0
    cfo_fraction: float = 0.0
    sro_ppm: float = 0.0
    multipath_taps: Optional[tuple] = None

    def __post_init__(self):
        if not abs(self.cfo_fraction) < 0.5:
            raise InvalidArgumentError(f"|cfo_fraction| must be < 0.5, got {self.cfo_fraction}")


@dataclass(frozen=True)
class ImpairmentRanges:
    random_phase: bool = True
    max_cfo: float = 1e-3
    max_sro_ppm: float = 50.0
    multipath: bool = False
    multipath_taps: int = 3

    def __post_init__(self):
        if not 0 <= self.max_cfo < 0.5:
            raise InvalidArgumentError("max_cfo must lie in [0, 0.5)")
        if self.max_sro_ppm < 0 or self.multipath_taps < 1:
            raise InvalidArgumentError("impairment ranges must be non-negative")


def random_fir(n_taps, rng):
    """Short complex multipath response: direct path plus decaying echoes, unit energy."""
    gains = np.concatenate([[1.0], rng.uniform(0.0, 0.5, size=n_taps - 1) * 0.5 ** np.arange(n_taps - 1)])
    taps = gains * np.exp(1j * np.concatenate([[0.0], rng.uniform(-np.pi, np.pi, size=n_taps - 1)]))
    return tuple(taps / np.sqrt(np.sum(np.abs(taps) ** 2)))


def draw_channel(snr_db, ranges, rng):
    return ChannelConfig(
        snr_db=snr_db,
        phase_offset=float(rng.uniform(-np.pi, np.pi)) if ranges.random_phase else 0.0,
        cfo_fraction=float(rng.uniform(-ranges.max_cfo, ranges.max_cfo)),
        sro_ppm=float(rng.uniform(-ranges.max_sro_ppm, ranges.max_sro_ppm)),
        multipath_taps=random_fir(ranges.multipath_taps, rng) if ranges.multipath else None,
    )


def impair(frame, ch, rng=None):
    frame = check_frame(frame, min_len=2)
    z = to_complex(frame)
    n = np.arange(z.size)
    if ch.multipath_taps is not None:
        z = np.convolve(z, np.asarray(ch.multipath_taps))[:z.size]
    if ch.phase_offset:
        z = z * np.exp(1j * ch.phase_offset)
    if ch.cfo_fraction:
        z = z * np.exp(2j * np.pi * ch.cfo_fraction * n)
    if ch.sro_ppm:
        t = n * (1.0 + ch.sro_ppm * 1e-6)
        z = np.interp(t, n, z.real) + 1j * np.interp(t, n, z.imag)
    if ch.snr_db is not None:
        if rng is None:
            raise InvalidArgumentError("AWGN needs a random generator")
        noise_var = np.mean(np.abs(z) ** 2) * 10.0 ** (-ch.snr_db / 10.0)
        z = z + np.sqrt(noise_var / 2) * (rng.normal(size=z.size) + 1j * rng.normal(size=z.size))
    return from_complex(z, dtype=frame.dtype)


@dataclass(frozen=True)
class GenConfig:
    classes: tuple = tuple(ModClass)
    snr_grid: tuple = SNR_GRID
    frames_per_class_per_snr: int = 1000
    seq_len: int = 128
    seed: int = 0
    impairments: ImpairmentRanges = field(default_factory=ImpairmentRanges)

    def __post_init__(self):
        classes = tuple(ModClass(c) for c in self.classes)
        object.__setattr__(self, 'classes', tuple(m for m in ModClass if m in classes))
        object.__setattr__(self, 'snr_grid', tuple(int(s) for s in self.snr_grid))
        if not self.classes:
            raise InvalidArgumentError("no modulation classes selected")
        if not self.snr_grid:
            raise InvalidArgumentError("SNR grid is empty")
        if any(not -128 <= snr <= 127 for snr in self.snr_grid):
            raise InvalidArgumentError("SNR values must fit in a signed byte")
        if self.frames_per_class_per_snr < 1:
            raise InvalidArgumentError("frames per class per SNR must be >= 1")
        if self.seq_len < 2:
            raise InvalidArgumentError("seq_len must be >= 2")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")

    @property
    def class_names(self):
        return tuple(m.value for m in self.classes)

    @property
    def total_frames(self):
        return len(self.classes) * len(self.snr_grid) * self.frames_per_class_per_snr

    def describe(self):
        return {
            'generator': 'amc.modem',
            'classes': list(self.class_names),
            'snr_grid': list(self.snr_grid),
            'frames_per_class_per_snr': self.frames_per_class_per_snr,
            'seq_len': self.seq_len,
            'seed': self.seed,
            'impairments': asdict(self.impairments),
            'shaping': {
                'rrc_rolloff': ROLLOFF,
                'samples_per_symbol': SAMPLES_PER_SYMBOL,
                'filter_span': FILTER_SPAN,
                'cpfsk_index': CPFSK_INDEX,
                'gfsk_index': GFSK_INDEX,
                'gfsk_bt': GFSK_BT,
                'am_depth': AM_DEPTH,
                'wbfm_deviation': WBFM_DEVIATION,
            },
        }


def _block(cfg, mod, snr_db):
    frames = np.empty((cfg.frames_per_class_per_snr, cfg.seq_len, 2), dtype=np.float32)
    for n in range(cfg.frames_per_class_per_snr):
        rng = np.random.default_rng([cfg.seed, mod.code, snr_db + 128, n])
        clean = modulate(mod, cfg.seq_len, rng)
        frames[n] = impair(clean, draw_channel(snr_db, cfg.impairments, rng), rng)
    logger.debug("Generated %d %s frames at %d dB", cfg.frames_per_class_per_snr, mod.value, snr_db)
    return frames


def generate_dataset(cfg, workers=1):
    """All frames of ``cfg`` ordered class-major, then SNR, then frame index."""
    blocks = [(label, mod, snr) for label, mod in enumerate(cfg.classes) for snr in cfg.snr_grid]

    def work(block):
        return _block(cfg, block[1], block[2])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, blocks))
    else:
        chunks = [work(block) for block in blocks]

    per_block = cfg.frames_per_class_per_snr
    ds = Dataset(
        iq=np.concatenate(chunks),
        labels=np.repeat([label for label, _, _ in blocks], per_block),
        snrs=np.repeat([snr for _, _, snr in blocks], per_block),
        class_names=cfg.class_names,
        provenance=json.dumps(cfg.describe(), sort_keys=True),
    )
    logger.info(
        "Generated %d frames: %d classes x %d SNRs x %d", len(ds), len(cfg.classes), len(cfg.snr_grid), per_block
    )
    return ds
