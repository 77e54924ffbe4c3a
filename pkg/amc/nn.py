"""Two-layer LSTM classifier in numpy: forward pass, BPTT, Adam, dropout, LR plateau schedule.

Gate blocks are stacked in the order input, forget, cell-update, output. Each
LSTM layer carries two bias vectors (input side and hidden side), which is
what makes the 128-cell, 11-class network come out at 201,099 parameters.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
from scipy.special import expit, log_softmax, softmax

from .exceptions import InvalidArgumentError, InvalidInputError
from .frames import prepare_features

logger = logging.getLogger(__name__)

TENSOR_NAMES = (
    'layer1.w_ih', 'layer1.w_hh', 'layer1.b_ih', 'layer1.b_hh',
    'layer2.w_ih', 'layer2.w_hh', 'layer2.b_ih', 'layer2.b_hh',
    'head.w', 'head.b',
)

# Samples per gradient shard; shard sums are reduced in shard order
SHARD = 32
# Frames per forward call at inference
EVAL_CHUNK = 256


def count_params(hidden, classes, input_dim=2):
    """Scalars stored by the network: two double-bias LSTM layers plus the dense head."""
    if min(hidden, classes, input_dim) < 1:
        raise InvalidArgumentError("dimensions must be positive")
    layer1 = 4 * hidden * input_dim + 4 * hidden * hidden + 8 * hidden
    layer2 = 4 * hidden * hidden + 4 * hidden * hidden + 8 * hidden
    return layer1 + layer2 + hidden * classes + classes


def inference_macs(hidden, classes, input_dim=2):
    """Multiply-accumulates per time step of the LSTM stack, and the one-off head cost."""
    per_step = 4 * hidden * (input_dim + hidden) + 8 * hidden * hidden
    return per_step, hidden * classes


@dataclass
class LstmLayerParams:
    w_ih: np.ndarray  # (4h, d)
    w_hh: np.ndarray  # (4h, h)
    b_ih: np.ndarray  # (4h,)
    b_hh: np.ndarray  # (4h,)

    @property
    def hidden(self):
        return self.w_hh.shape[1]

    @property
    def input_dim(self):
        return self.w_ih.shape[1]

    def tensors(self):
        return [self.w_ih, self.w_hh, self.b_ih, self.b_hh]


@dataclass
class NetworkParams:
    layer1: LstmLayerParams
    layer2: LstmLayerParams
    head_w: np.ndarray  # (h, K)
    head_b: np.ndarray  # (K,)

    @property
    def hidden(self):
        return self.layer1.hidden

    @property
    def input_dim(self):
        return self.layer1.input_dim

    @property
    def classes(self):
        return self.head_b.shape[0]

    @property
    def dtype(self):
        return self.head_w.dtype

    def tensors(self):
        return self.layer1.tensors() + self.layer2.tensors() + [self.head_w, self.head_b]

    def named_tensors(self):
        return list(zip(TENSOR_NAMES, self.tensors()))

    @property
    def size(self):
        return sum(t.size for t in self.tensors())

    @classmethod
    def from_tensors(cls, tensors):
        tensors = list(tensors)
        if len(tensors) != len(TENSOR_NAMES):
            raise InvalidInputError(f"expected {len(TENSOR_NAMES)} tensors, got {len(tensors)}")
        return cls(LstmLayerParams(*tensors[0:4]), LstmLayerParams(*tensors[4:8]), tensors[8], tensors[9])

    def map(self, fn):
        return NetworkParams.from_tensors(fn(t) for t in self.tensors())

    def astype(self, dtype):
        return self.map(lambda t: t.astype(dtype))

    def copy(self):
        return self.map(np.copy)


def param_shapes(hidden, classes, input_dim=2):
    h = hidden
    return [
        (4 * h, input_dim), (4 * h, h), (4 * h,), (4 * h,),
        (4 * h, h), (4 * h, h), (4 * h,), (4 * h,),
        (h, classes), (classes,),
    ]


def zero_params(hidden, classes, input_dim=2, dtype=np.float32):
    return NetworkParams.from_tensors(np.zeros(shape, dtype=dtype) for shape in param_shapes(hidden, classes, input_dim))


def init_params(hidden, classes, input_dim=2, seed=0, dtype=np.float32):
    """Uniform(-1/sqrt(h), 1/sqrt(h)) weights; the forget gate's input-side bias starts at 1."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(hidden)
    tensors = [rng.uniform(-bound, bound, size=shape) for shape in param_shapes(hidden, classes, input_dim)]
    for b_ih, b_hh in ((tensors[2], tensors[3]), (tensors[6], tensors[7])):
        b_ih[hidden:2 * hidden] = 1.0
        b_hh[hidden:2 * hidden] = 0.0
    tensors[9] = np.zeros(classes)
    return NetworkParams.from_tensors(t.astype(dtype) for t in tensors)


class LayerCache(NamedTuple):
    x: np.ndarray  # (B, T, d)
    hs: np.ndarray  # (B, T+1, h), hs[:, 0] is the zero initial state
    cs: np.ndarray  # (B, T+1, h)
    gates: np.ndarray  # (B, T, 4h), activated


def _layer_forward(p, x):
    batch, steps, _ = x.shape
    h = p.hidden
    xw = x @ p.w_ih.T + (p.b_ih + p.b_hh)
    hs = np.zeros((batch, steps + 1, h), dtype=x.dtype)
    cs = np.zeros((batch, steps + 1, h), dtype=x.dtype)
    gates = np.empty((batch, steps, 4 * h), dtype=x.dtype)
    w_hh_t = p.w_hh.T
    for t in range(steps):
        z = xw[:, t] + hs[:, t] @ w_hh_t
        i = expit(z[:, :h])
        f = expit(z[:, h:2 * h])
        g = np.tanh(z[:, 2 * h:3 * h])
        o = expit(z[:, 3 * h:])
        cs[:, t + 1] = f * cs[:, t] + i * g
        hs[:, t + 1] = o * np.tanh(cs[:, t + 1])
        gates[:, t, :h], gates[:, t, h:2 * h], gates[:, t, 2 * h:3 * h], gates[:, t, 3 * h:] = i, f, g, o
    return hs[:, 1:], LayerCache(x, hs, cs, gates)


def _layer_backward(p, cache, dout):
    """Gradients of one layer given dL/d(output sequence); also returns dL/dx."""
    x, hs, cs, gates = cache
    batch, steps, _ = x.shape
    h = p.hidden
    dz = np.empty_like(gates)
    dh_next = np.zeros((batch, h), dtype=x.dtype)
    dc_next = np.zeros((batch, h), dtype=x.dtype)
    for t in reversed(range(steps)):
        i, f, g, o = gates[:, t, :h], gates[:, t, h:2 * h], gates[:, t, 2 * h:3 * h], gates[:, t, 3 * h:]
        tanh_c = np.tanh(cs[:, t + 1])
        dh = dout[:, t] + dh_next
        dc = dh * o * (1 - tanh_c * tanh_c) + dc_next
        dz[:, t, :h] = dc * g * i * (1 - i)
        dz[:, t, h:2 * h] = dc * cs[:, t] * f * (1 - f)
        dz[:, t, 2 * h:3 * h] = dc * i * (1 - g * g)
        dz[:, t, 3 * h:] = dh * tanh_c * o * (1 - o)
        dc_next = dc * f
        dh_next = dz[:, t] @ p.w_hh
    flat_dz = dz.reshape(-1, 4 * h)
    db = flat_dz.sum(axis=0)
    grads = LstmLayerParams(
        w_ih=flat_dz.T @ x.reshape(-1, x.shape[2]),
        w_hh=flat_dz.T @ hs[:, :-1].reshape(-1, h),
        b_ih=db,
        b_hh=db.copy(),
    )
    return grads, dz @ p.w_ih


class Masks(NamedTuple):
    """Inverted-dropout masks on each LSTM layer's output, shape (B, T, h)."""

    layer1: np.ndarray
    layer2: np.ndarray

    def rows(self, index):
        return Masks(self.layer1[index], self.layer2[index])


def draw_masks(rng, batch, steps, hidden, rate, dtype=np.float32):
    if not 0 <= rate < 1:
        raise InvalidArgumentError(f"dropout rate must lie in [0, 1), got {rate}")
    keep = 1.0 / (1.0 - rate)
    return Masks(*(((rng.random((batch, steps, hidden)) >= rate) * keep).astype(dtype) for _ in range(2)))


class NetworkCache(NamedTuple):
    layer1: LayerCache
    layer2: LayerCache
    last: np.ndarray
    masks: Masks


def _check_features(params, features):
    x = np.asarray(features)
    if x.ndim != 3 or x.shape[2] != params.input_dim or x.shape[1] < 1 or x.shape[0] < 1:
        raise InvalidInputError(f"expected features of shape (B, T>=1, {params.input_dim}), got {x.shape}")
    return x.astype(params.dtype, copy=False)


def forward_batch(params, features, masks=None):
    """Logits for a batch of feature sequences ``(B, T, d)``; dropout only if masks are given."""
    x = _check_features(params, features)
    out1, cache1 = _layer_forward(params.layer1, x)
    if masks is not None:
        out1 = out1 * masks.layer1
    out2, cache2 = _layer_forward(params.layer2, out1)
    last = out2[:, -1]
    if masks is not None:
        last = last * masks.layer2[:, -1]
    logits = last @ params.head_w + params.head_b
    return logits, NetworkCache(cache1, cache2, last, masks)


def forward(params, features, mode='eval', rng=None, dropout=0.5):
    """Class distribution for one feature frame ``(T, d)``.

    The softmax runs in float64, so entries stay inside (0, 1) until logits
    are about 36 apart.
    """
    x = np.asarray(features)[None]
    masks = None
    if mode == 'train':
        if rng is None:
            raise InvalidArgumentError("train mode needs a dropout random generator")
        masks = draw_masks(rng, 1, x.shape[1], params.hidden, dropout, params.dtype)
    elif mode != 'eval':
        raise InvalidArgumentError(f"mode must be 'train' or 'eval', got {mode!r}")
    logits, _ = forward_batch(params, x, masks)
    return softmax(logits.astype(np.float64), axis=1)[0]


def cross_entropy(probs, label):
    """-log p(label) for a probability vector."""
    return float(-np.log(probs[label]))


def cross_entropy_logits(logits, labels):
    """Per-sample loss from logits through log-softmax."""
    logp = log_softmax(logits, axis=1)
    return -logp[np.arange(len(labels)), labels]


def _check_labels(labels, batch, classes):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (batch,):
        raise InvalidInputError(f"expected {batch} labels, got shape {labels.shape}")
    if batch and (labels.min() < 0 or labels.max() >= classes):
        raise InvalidInputError("label outside the class range")
    return labels


def _shard_grads(params, features, labels, masks):
    """Summed (not averaged) loss and gradients over one shard."""
    logits, cache = forward_batch(params, features, masks)
    losses = cross_entropy_logits(logits, labels)
    dlogits = softmax(logits, axis=1)
    dlogits[np.arange(len(labels)), labels] -= 1

    head_w = cache.last.T @ dlogits
    head_b = dlogits.sum(axis=0)
    dlast = dlogits @ params.head_w.T
    if masks is not None:
        dlast = dlast * masks.layer2[:, -1]
    dout2 = np.zeros_like(cache.layer2.hs[:, 1:])
    dout2[:, -1] = dlast
    grads2, dx2 = _layer_backward(params.layer2, cache.layer2, dout2)
    if masks is not None:
        dx2 = dx2 * masks.layer1
    grads1, _ = _layer_backward(params.layer1, cache.layer1, dx2)
    grads = NetworkParams(grads1, grads2, head_w, head_b)
    return float(losses.sum()), grads, logits


class BatchResult(NamedTuple):
    loss: float  # mean over the batch
    grads: NetworkParams  # mean over the batch
    logits: np.ndarray


def backward(params, features, labels, masks=None, workers=1):
    """Mean loss and mean gradient over a batch, reduced shard by shard in a fixed order."""
    x = _check_features(params, features)
    batch = x.shape[0]
    labels = _check_labels(labels, batch, params.classes)
    shards = [slice(start, start + SHARD) for start in range(0, batch, SHARD)]

    def work(shard):
        return _shard_grads(params, x[shard], labels[shard], None if masks is None else masks.rows(shard))

    if workers > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, shards))
    else:
        results = [work(shard) for shard in shards]

    loss = 0.0
    totals = [np.zeros_like(t) for t in params.tensors()]
    for shard_loss, grads, _ in results:
        loss += shard_loss
        for total, grad in zip(totals, grads.tensors()):
            total += grad
    mean = NetworkParams.from_tensors(total / batch for total in totals)
    logits = np.concatenate([logits for _, _, logits in results])
    return BatchResult(loss / batch, mean, logits)


def batch_loss(params, features, labels, masks=None):
    logits, _ = forward_batch(params, features, masks)
    return float(np.mean(cross_entropy_logits(logits, np.asarray(labels))))


def gradient_check(params, features, labels, masks=None, step=1e-5):
    """Relative error of BPTT against central differences, per tensor, in double precision.

    The error of a tensor is ``|g - n| / (|g| + |n|)`` over its flattened
    gradient, with ``g`` from BPTT and ``n`` numeric.
    """
    params = params.astype(np.float64)
    features = np.asarray(features, dtype=np.float64)
    if masks is not None:
        masks = Masks(masks.layer1.astype(np.float64), masks.layer2.astype(np.float64))
    analytic = backward(params, features, labels, masks).grads
    errors = {}
    for (name, tensor), grad in zip(params.named_tensors(), analytic.tensors()):
        numeric = np.zeros_like(tensor)
        for index in np.ndindex(tensor.shape):
            original = tensor[index]
            tensor[index] = original + step
            plus = batch_loss(params, features, labels, masks)
            tensor[index] = original - step
            minus = batch_loss(params, features, labels, masks)
            tensor[index] = original
            numeric[index] = (plus - minus) / (2 * step)
        scale = max(np.linalg.norm(grad) + np.linalg.norm(numeric), 1e-12)
        errors[name] = float(np.linalg.norm(grad - numeric) / scale)
    return errors


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params):
        return cls(m=[np.zeros_like(t) for t in params.tensors()], v=[np.zeros_like(t) for t in params.tensors()])


def adam_step(state, params, grads, lr):
    """Bias-corrected Adam update, applied to ``params`` in place."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params.tensors(), grads.tensors(), state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise InvalidInputError("parameter, gradient and moment shapes differ")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def lr_schedule(history, lr, patience=3):
    """Next learning rate after the last epoch in ``history`` (training accuracies).

    The rate halves once the best accuracy has gone ``patience`` epochs
    without a strict improvement; the counter restarts after every halving.
    """
    if not history:
        raise InvalidArgumentError("accuracy history is empty")
    best, waited, halve = -np.inf, 0, False
    for accuracy in history:
        halve = False
        if accuracy > best:
            best, waited = accuracy, 0
        else:
            waited += 1
            if waited >= patience:
                halve, waited = True, 0
    return lr / 2 if halve else lr


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 80
    batch_size: int = 128
    initial_lr: float = 0.001
    dropout: float = 0.5
    plateau_patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.plateau_patience) < 1 or self.initial_lr <= 0:
            raise InvalidArgumentError("epochs, batch size, patience and learning rate must be positive")
        if not 0 <= self.dropout < 1:
            raise InvalidArgumentError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be non-negative")


class EpochStats(NamedTuple):
    epoch: int
    train_loss: float
    train_acc: float
    lr: float


def fit(params, features, labels, cfg, workers=1):
    """Mini-batch Adam with dropout and plateau halving; updates ``params`` in place."""
    features = _check_features(params, features)
    labels = _check_labels(labels, features.shape[0], params.classes)
    n, steps = features.shape[0], features.shape[1]
    state = AdamState.for_params(params)
    lr = cfg.initial_lr
    history = []
    for epoch in range(1, cfg.epochs + 1):
        rng = np.random.default_rng([cfg.seed, epoch])
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            index = order[start:start + cfg.batch_size]
            masks = None
            if cfg.dropout > 0:
                masks = draw_masks(rng, index.size, steps, params.hidden, cfg.dropout, params.dtype)
            result = backward(params, features[index], labels[index], masks, workers)
            adam_step(state, params, result.grads, lr)
            loss_sum += result.loss * index.size
            correct += int(np.sum(np.argmax(result.logits, axis=1) == labels[index]))
        stats = EpochStats(epoch, loss_sum / n, correct / n, lr)
        history.append(stats)
        logger.info("epoch %d/%d loss %.4f acc %.4f lr %g", epoch, cfg.epochs, stats.train_loss, stats.train_acc, lr)
        next_lr = lr_schedule([s.train_acc for s in history], lr, cfg.plateau_patience)
        if next_lr != lr:
            logger.info("training accuracy flat for %d epochs, lr %g -> %g", cfg.plateau_patience, lr, next_lr)
            lr = next_lr
    return history


@dataclass
class Model:
    """Trained network plus the class table and frame length it was trained on."""

    params: NetworkParams
    class_names: tuple
    seq_len: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.class_names = tuple(self.class_names)
        if len(self.class_names) != self.params.classes:
            raise InvalidInputError("class table does not match the head size")

    def predict_proba(self, frames, workers=1):
        """Class probabilities for raw I/Q frames ``(n, L, 2)``, eval mode."""
        features = prepare_features(frames)
        if features.ndim == 2:
            features = features[None]
        starts = range(0, features.shape[0], EVAL_CHUNK)

        def work(start):
            logits, _ = forward_batch(self.params, features[start:start + EVAL_CHUNK])
            return softmax(logits.astype(np.float64), axis=1)

        if workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return np.concatenate(list(pool.map(work, starts)))
        return np.concatenate([work(start) for start in starts])
