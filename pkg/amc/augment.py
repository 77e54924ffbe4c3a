"""Label-preserving I/Q augmentation: quarter-turn rotation, flips, Gaussian noise.

Transforms act on raw I/Q frames of shape ``(..., L, 2)`` before any
normalisation. Rotations and flips are coordinate swaps and negations, so
they are exact in floating point and never change a sample's amplitude.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, InvalidInputError
from .frames import check_frame

logger = logging.getLogger(__name__)

POLICY_NAMES = ('none', 'rotation', 'flip', 'noise', 'joint')
DEFAULT_NOISE_SIGMAS = (0.0, 0.0005, 0.001, 0.002)

# Frames per worker task in augment_dataset
_CHUNK = 4096


class Transform:
    """One augmentation; ``action`` identifies what it does to a signal."""

    deterministic = True

    def apply(self, frame, rng=None):
        raise NotImplementedError

    @property
    def action(self):
        raise NotImplementedError


def _linear_action(matrix):
    return ('linear',) + tuple(matrix)


@dataclass(frozen=True)
class Identity(Transform):
    def apply(self, frame, rng=None):
        return frame.copy()

    @property
    def action(self):
        return _linear_action((1, 0, 0, 1))

    def __str__(self):
        return 'identity'


@dataclass(frozen=True)
class RotateQuarter(Transform):
    """Counter-clockwise rotation by ``k`` quarter turns: (I, Q) -> (-Q, I) applied k times."""

    k: int

    def __post_init__(self):
        if self.k not in (0, 1, 2, 3):
            raise InvalidArgumentError(f"quarter-turn count must be 0..3, got {self.k}")

    def apply(self, frame, rng=None):
        i, q = frame[..., 0], frame[..., 1]
        if self.k == 0:
            return frame.copy()
        if self.k == 1:
            return np.stack([-q, i], axis=-1)
        if self.k == 2:
            return np.stack([-i, -q], axis=-1)
        return np.stack([q, -i], axis=-1)

    @property
    def action(self):
        return _linear_action({0: (1, 0, 0, 1), 1: (0, -1, 1, 0), 2: (-1, 0, 0, -1), 3: (0, 1, -1, 0)}[self.k])

    def __str__(self):
        return f'rot{self.k}'


@dataclass(frozen=True)
class FlipH(Transform):
    def apply(self, frame, rng=None):
        return np.stack([-frame[..., 0], frame[..., 1]], axis=-1)

    @property
    def action(self):
        return _linear_action((-1, 0, 0, 1))

    def __str__(self):
        return 'flip_h'


@dataclass(frozen=True)
class FlipV(Transform):
    def apply(self, frame, rng=None):
        return np.stack([frame[..., 0], -frame[..., 1]], axis=-1)

    @property
    def action(self):
        return _linear_action((1, 0, 0, -1))

    def __str__(self):
        return 'flip_v'


@dataclass(frozen=True)
class FlipBoth(Transform):
    def apply(self, frame, rng=None):
        return -frame

    @property
    def action(self):
        return _linear_action((-1, 0, 0, -1))

    def __str__(self):
        return 'flip_hv'


@dataclass(frozen=True)
class AddNoise(Transform):
    """Adds N(0, sigma^2) independently to every I and every Q component."""

    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise InvalidArgumentError(f"noise sigma must be finite and >= 0, got {self.sigma}")

    @property
    def deterministic(self):
        return self.sigma == 0

    def apply(self, frame, rng=None):
        if self.sigma == 0:
            return frame.copy()
        if rng is None:
            raise InvalidArgumentError("AddNoise needs a random generator")
        noise = rng.normal(0.0, self.sigma, size=frame.shape)
        return (frame + noise).astype(frame.dtype)

    @property
    def action(self):
        if self.sigma == 0:
            return _linear_action((1, 0, 0, 1))
        return ('noise', float(self.sigma))

    def __str__(self):
        return f'noise({self.sigma:g})'


def apply_transform(frame, transform, rng=None):
    frame = check_frame(frame)
    return transform.apply(frame, rng)


@dataclass(frozen=True)
class Policy:
    name: str
    transforms: tuple

    def __post_init__(self):
        object.__setattr__(self, 'transforms', tuple(self.transforms))
        if not self.transforms:
            raise InvalidArgumentError(f"policy {self.name!r} has no transforms")

    @property
    def scale_factor(self):
        return len(self.transforms)

    @property
    def deterministic(self):
        return all(t.deterministic for t in self.transforms)

    def describe(self):
        return f"{self.name}[{', '.join(str(t) for t in self.transforms)}]"


def dedupe(transforms):
    """Keep the first transform of every distinct action, in order."""
    seen, kept = set(), []
    for transform in transforms:
        if transform.action not in seen:
            seen.add(transform.action)
            kept.append(transform)
    return tuple(kept)


def noise_policy(sigmas, name='noise'):
    return Policy(name, dedupe(AddNoise(float(sigma)) for sigma in sigmas))


def builtin_policy(kind):
    rotation = tuple(RotateQuarter(k) for k in range(4))
    flip = (Identity(), FlipH(), FlipV(), FlipBoth())
    if kind == 'none':
        return Policy('none', (Identity(),))
    if kind == 'rotation':
        return Policy('rotation', rotation)
    if kind == 'flip':
        return Policy('flip', flip)
    if kind == 'noise':
        return noise_policy(DEFAULT_NOISE_SIGMAS)
    if kind == 'joint':
        # Identity == rot0 and flip_hv == rot2; the rotations are kept
        return Policy('joint', dedupe(rotation + flip))
    raise InvalidArgumentError(f"unknown augmentation policy {kind!r}; choose from {', '.join(POLICY_NAMES)}")


def parse_sigmas(text):
    try:
        sigmas = tuple(float(part) for part in str(text).split(',') if part.strip())
    except ValueError as exc:
        raise InvalidArgumentError(f"noise sigmas must be comma-separated reals, got {text!r}") from exc
    if not sigmas:
        raise InvalidArgumentError("noise sigma list is empty")
    return sigmas


def resolve_policy(name, noise_sigmas=None):
    """Policy by CLI name; ``noise_sigmas`` replaces the built-in noise set."""
    if noise_sigmas is not None:
        if name != 'noise':
            raise InvalidArgumentError("--noise-sigmas only applies to the noise policy")
        if isinstance(noise_sigmas, str):
            noise_sigmas = parse_sigmas(noise_sigmas)
        return noise_policy(noise_sigmas)
    return builtin_policy(name)


def frame_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def augment_frame(frame, policy, rng=None):
    """The policy's N variants of one frame, shaped ``(N, L, 2)``, in policy order."""
    frame = check_frame(frame)
    return np.stack([apply_transform(frame, transform, rng) for transform in policy.transforms])


def augment_frames(frames, policy, seed, start=0):
    """Variants of every frame, shaped ``(n, N, L, 2)``.

    Frame ``start + j`` draws its noise from ``frame_rng(seed, start + j)``,
    so any slicing of a batch gives the same variants.
    """
    frames = check_frame(frames)
    if frames.ndim == 2:
        frames = frames[None]
    n = frames.shape[0]
    out = np.empty((n, policy.scale_factor) + frames.shape[1:], dtype=frames.dtype)
    for slot, transform in enumerate(policy.transforms):
        if transform.deterministic:
            out[:, slot] = transform.apply(frames)
    if not policy.deterministic:
        for j in range(n):
            rng = frame_rng(seed, start + j)
            for slot, transform in enumerate(policy.transforms):
                if not transform.deterministic:
                    out[j, slot] = transform.apply(frames[j], rng)
    return out


def augment_dataset(ds, policy, seed=0, workers=1):
    """Expand ``ds`` by the policy's scale factor, source order x policy order."""
    if len(ds) == 0:
        raise InvalidInputError("cannot augment an empty dataset")
    starts = range(0, len(ds), _CHUNK)

    def work(start):
        return augment_frames(ds.iq[start:start + _CHUNK], policy, seed, start=start)

    if workers > 1 and not policy.deterministic:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, starts))
    else:
        chunks = [work(start) for start in starts]

    n_out = len(ds) * policy.scale_factor
    iq = np.concatenate(chunks).reshape(n_out, ds.seq_len, 2)
    logger.info("Augmented %d frames with %s -> %d frames", len(ds), policy.describe(), n_out)
    return ds.with_frames(
        iq=iq,
        labels=np.repeat(ds.labels, policy.scale_factor),
        snrs=np.repeat(ds.snrs, policy.scale_factor),
        provenance=f"{ds.provenance} | augment policy={policy.name} seed={seed}".strip(' |'),
    )
