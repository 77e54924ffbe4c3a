"""RMDL v1 model files.

A UTF-8 header of ``key:value`` lines ended by a blank line, then every
parameter tensor as little-endian float32, in the order layer 1
(w_ih, w_hh, b_ih, b_hh), layer 2 (same), head weights ``(h, K)``, head bias.
"""
import json
import logging
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError
from .nn import Model, NetworkParams, count_params, param_shapes

logger = logging.getLogger(__name__)

MAGIC = 'RMDL'
VERSION = 1
HEADER_KEYS = ('magic', 'version', 'hidden', 'layers', 'classes', 'input_dim', 'seq_len', 'class_names', 'provenance')


def encode(model):
    params = model.params
    header = {
        'magic': MAGIC,
        'version': VERSION,
        'hidden': params.hidden,
        'layers': 2,
        'classes': params.classes,
        'input_dim': params.input_dim,
        'seq_len': model.seq_len,
        'class_names': ','.join(model.class_names),
        'provenance': json.dumps(model.provenance, sort_keys=True, separators=(',', ':')),
    }
    lines = ''.join(f'{key}:{header[key]}\n' for key in HEADER_KEYS) + '\n'
    body = b''.join(np.asarray(t, dtype='<f4').tobytes() for t in params.tensors())
    return lines.encode('utf-8') + body


def _header(data, source):
    end = data.find(b'\n\n')
    if end < 0:
        raise DataFormatError(f"{source}: no RMDL header terminator")
    try:
        text = data[:end].decode('utf-8')
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{source}: header is not UTF-8") from exc
    header = {}
    for line in text.split('\n'):
        key, sep, value = line.partition(':')
        if not sep:
            raise DataFormatError(f"{source}: malformed header line {line!r}")
        header[key] = value
    return header, end + 2


def decode(data, source='<bytes>'):
    header, offset = _header(data, source)
    if header.get('magic') != MAGIC:
        raise DataFormatError(f"{source}: not an RMDL file")
    if header.get('version') != str(VERSION):
        raise DataFormatError(f"{source}: unsupported RMDL version {header.get('version')}")
    try:
        hidden, classes, input_dim = (int(header[key]) for key in ('hidden', 'classes', 'input_dim'))
        layers, seq_len = int(header['layers']), int(header['seq_len'])
        provenance = json.loads(header.get('provenance') or '{}')
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{source}: bad RMDL header ({exc})") from exc
    if layers != 2:
        raise DataFormatError(f"{source}: only two-layer models are supported, got {layers}")
    class_names = tuple(header.get('class_names', '').split(','))
    if len(class_names) != classes:
        raise DataFormatError(f"{source}: {len(class_names)} class names for {classes} classes")

    expected = count_params(hidden, classes, input_dim)
    if len(data) - offset != 4 * expected:
        raise DataFormatError(f"{source}: expected {expected} parameters, found {(len(data) - offset) / 4:g}")
    values = np.frombuffer(data, dtype='<f4', offset=offset)

    tensors, start = [], 0
    for shape in param_shapes(hidden, classes, input_dim):
        size = int(np.prod(shape))
        tensors.append(values[start:start + size].reshape(shape).astype(np.float32))
        start += size
    return Model(NetworkParams.from_tensors(tensors), class_names, seq_len, provenance)


def write(model, path):
    path = Path(path)
    path.write_bytes(encode(model))
    logger.info("Wrote model (%d parameters) to %s", model.params.size, path)
    return path


def read(path):
    path = Path(path)
    return decode(path.read_bytes(), source=str(path))
