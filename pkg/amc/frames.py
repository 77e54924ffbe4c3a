"""Frames, labelled datasets and the amplitude/phase feature conversion.

A frame is a numpy array of shape ``(L, 2)`` holding ``L`` I/Q samples,
column 0 is I and column 1 is Q. Batches of frames are ``(n, L, 2)`` and every
function here accepts either.
"""
import logging
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .exceptions import DegenerateInputError, InvalidInputError

logger = logging.getLogger(__name__)

SNR_GRID = tuple(range(-20, 20, 2))

# Frames with RMS below this are treated as all-zero
_MIN_RMS = 1e-30


def check_frame(frame, min_len=1):
    """Return ``frame`` as a float array of shape ``(..., L, 2)`` or raise."""
    frame = np.asarray(frame)
    if frame.ndim < 2 or frame.shape[-1] != 2:
        raise InvalidInputError(f"expected I/Q samples of shape (..., L, 2), got {frame.shape}")
    if frame.shape[-2] < min_len:
        raise InvalidInputError(f"frame length {frame.shape[-2]} is below {min_len}")
    if not np.issubdtype(frame.dtype, np.floating):
        frame = frame.astype(np.float64)
    if not np.all(np.isfinite(frame)):
        raise InvalidInputError("frame contains non-finite samples")
    return frame


def from_complex(samples, dtype=np.float32):
    samples = np.asarray(samples)
    return np.stack([samples.real, samples.imag], axis=-1).astype(dtype)


def to_complex(frame):
    frame = np.asarray(frame)
    return frame[..., 0].astype(np.float64) + 1j * frame[..., 1].astype(np.float64)


def to_features(frame):
    """Convert I/Q samples to ``(amplitude, phase / pi)`` per time step.

    Phase is the four-quadrant arc tangent mapped into (-pi, pi] before
    scaling, so the second column lies in (-1, 1]. The phase of a zero sample
    is 0.
    """
    frame = check_frame(frame)
    i, q = frame[..., 0], frame[..., 1]
    amplitude = np.hypot(i, q)
    phase = np.arctan2(q, i)
    # arctan2 returns -pi on the negative real axis when Q is -0.0
    phase = np.where(phase <= -np.pi, np.pi, phase)
    phase = np.where(amplitude == 0, 0.0, phase)
    return np.stack([amplitude, phase / np.pi], axis=-1).astype(frame.dtype)


def halve_frame(frame):
    """Split a frame of length 2L into its first and second halves."""
    frame = check_frame(frame, min_len=2)
    length = frame.shape[-2]
    if length % 2:
        raise InvalidInputError(f"cannot halve a frame of odd length {length}")
    mid = length // 2
    return frame[..., :mid, :], frame[..., mid:, :]


def frame_rms(frame):
    frame = np.asarray(frame, dtype=np.float64)
    return np.sqrt(np.mean(np.sum(frame * frame, axis=-1), axis=-1))


def normalize_frame(frame):
    """Scale a frame (or each frame of a batch) to unit RMS complex magnitude."""
    frame = check_frame(frame)
    rms = frame_rms(frame)
    if np.any(rms < _MIN_RMS):
        raise DegenerateInputError("cannot normalise an all-zero frame")
    scaled = np.asarray(frame, dtype=np.float64) / rms[..., None, None]
    return scaled.astype(frame.dtype)


def prepare_features(frames):
    """Per-frame RMS normalisation followed by feature extraction."""
    return to_features(normalize_frame(frames))


class LabeledFrame(NamedTuple):
    frame: np.ndarray
    label: int
    snr_db: int


def _readonly(array, dtype):
    array = np.ascontiguousarray(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    """Labelled frames sharing one length, with their class table."""

    iq: np.ndarray
    labels: np.ndarray
    snrs: np.ndarray
    class_names: tuple
    provenance: str = ''
    _strata: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        iq = np.asarray(self.iq)
        if iq.ndim != 3 or iq.shape[-1] != 2:
            raise InvalidInputError(f"dataset frames must have shape (n, L, 2), got {iq.shape}")
        labels = np.asarray(self.labels)
        snrs = np.asarray(self.snrs)
        if labels.shape != (iq.shape[0],) or snrs.shape != (iq.shape[0],):
            raise InvalidInputError("labels and snrs must have one entry per frame")
        class_names = tuple(str(name) for name in self.class_names)
        if not class_names:
            raise InvalidInputError("dataset needs at least one class")
        if labels.size and (labels.min() < 0 or labels.max() >= len(class_names)):
            raise InvalidInputError("a label does not index the class table")
        object.__setattr__(self, 'iq', _readonly(iq, np.float32))
        object.__setattr__(self, 'labels', _readonly(labels, np.int64))
        object.__setattr__(self, 'snrs', _readonly(snrs, np.int64))
        object.__setattr__(self, 'class_names', class_names)

    def __len__(self):
        return self.iq.shape[0]

    def __iter__(self) -> Iterator[LabeledFrame]:
        for index in range(len(self)):
            yield self[index]

    def __getitem__(self, index):
        return LabeledFrame(self.iq[index], int(self.labels[index]), int(self.snrs[index]))

    @property
    def seq_len(self):
        return self.iq.shape[1]

    @property
    def num_classes(self):
        return len(self.class_names)

    def strata(self):
        """Map ``(label, snr_db)`` to the sorted frame indices of that stratum."""
        if self._strata is None:
            keys = self.labels * 1000 + (self.snrs + 500)
            order = np.argsort(keys, kind='stable')
            sorted_keys = keys[order]
            bounds = np.flatnonzero(np.diff(sorted_keys)) + 1
            strata = {}
            for chunk in np.split(order, bounds):
                if chunk.size:
                    strata[(int(self.labels[chunk[0]]), int(self.snrs[chunk[0]]))] = chunk
            object.__setattr__(self, '_strata', dict(sorted(strata.items())))
        return self._strata

    def take(self, indices, provenance=None):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            iq=self.iq[indices],
            labels=self.labels[indices],
            snrs=self.snrs[indices],
            class_names=self.class_names,
            provenance=self.provenance if provenance is None else provenance,
        )

    def with_frames(self, iq, labels, snrs, provenance):
        return Dataset(iq=iq, labels=labels, snrs=snrs, class_names=self.class_names, provenance=provenance)

    def snr_values(self):
        return sorted(int(snr) for snr in np.unique(self.snrs))


def halve_dataset(ds):
    """Halve every frame; both halves keep the source label and SNR."""
    first, second = halve_frame(ds.iq)
    n, half = len(ds), ds.seq_len // 2
    iq = np.stack([first, second], axis=1).reshape(2 * n, half, 2)
    logger.info("Halved %d frames of length %d into %d frames of length %d", n, ds.seq_len, 2 * n, half)
    return ds.with_frames(
        iq=iq,
        labels=np.repeat(ds.labels, 2),
        snrs=np.repeat(ds.snrs, 2),
        provenance=f"{ds.provenance} | halved {ds.seq_len}->{half}".strip(' |'),
    )
