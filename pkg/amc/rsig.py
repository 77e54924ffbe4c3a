"""RSIG v1 dataset container.

Layout, little-endian::

    b"RSIG"  u32 version=1  u32 frame_count  u16 seq_len  u8 class_count  u8 reserved=0
    class_count x (u8 byte length, UTF-8 name)
    frame_count x (u8 label, i8 snr_db, seq_len x (f32 I, f32 Q))
"""
import logging
import struct
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError, InvalidInputError
from .frames import Dataset

logger = logging.getLogger(__name__)

MAGIC = b'RSIG'
VERSION = 1
_HEADER = struct.Struct('<4sIIHBB')


def record_dtype(seq_len):
    return np.dtype([('label', 'u1'), ('snr', 'i1'), ('iq', '<f4', (seq_len, 2))])


def encode(ds):
    if not 1 <= ds.seq_len <= 0xFFFF:
        raise InvalidInputError(f"seq_len {ds.seq_len} does not fit RSIG")
    if ds.num_classes > 0xFF:
        raise InvalidInputError("RSIG holds at most 255 classes")
    if len(ds) and (ds.snrs.min() < -128 or ds.snrs.max() > 127):
        raise InvalidInputError("snr_db outside the i8 range")

    parts = [_HEADER.pack(MAGIC, VERSION, len(ds), ds.seq_len, ds.num_classes, 0)]
    for name in ds.class_names:
        raw = name.encode('utf-8')
        if len(raw) > 0xFF:
            raise InvalidInputError(f"class name too long for RSIG: {name!r}")
        parts.append(bytes([len(raw)]) + raw)

    records = np.zeros(len(ds), dtype=record_dtype(ds.seq_len))
    records['label'] = ds.labels
    records['snr'] = ds.snrs
    records['iq'] = ds.iq
    parts.append(records.tobytes())
    return b''.join(parts)


def decode(data, source='<bytes>'):
    if len(data) < _HEADER.size:
        raise DataFormatError(f"{source}: truncated RSIG header")
    magic, version, count, seq_len, class_count, _reserved = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataFormatError(f"{source}: not an RSIG file (magic {magic!r})")
    if version != VERSION:
        raise DataFormatError(f"{source}: unsupported RSIG version {version}")
    if seq_len == 0 or class_count == 0:
        raise DataFormatError(f"{source}: empty sequence length or class table")

    offset = _HEADER.size
    class_names = []
    for _ in range(class_count):
        if offset >= len(data):
            raise DataFormatError(f"{source}: truncated class table")
        size = data[offset]
        raw = data[offset + 1:offset + 1 + size]
        if len(raw) != size:
            raise DataFormatError(f"{source}: truncated class table")
        try:
            class_names.append(raw.decode('utf-8'))
        except UnicodeDecodeError as exc:
            raise DataFormatError(f"{source}: class name is not UTF-8") from exc
        offset += 1 + size

    dtype = record_dtype(seq_len)
    expected = offset + count * dtype.itemsize
    if len(data) != expected:
        raise DataFormatError(f"{source}: expected {expected} bytes, found {len(data)}")
    records = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    if count and records['label'].max() >= class_count:
        raise DataFormatError(f"{source}: label outside the class table")
    if not np.all(np.isfinite(records['iq'])):
        raise DataFormatError(f"{source}: non-finite sample")

    return Dataset(
        iq=records['iq'],
        labels=records['label'].astype(np.int64),
        snrs=records['snr'].astype(np.int64),
        class_names=tuple(class_names),
        provenance=f"rsig:{source}",
    )


def write(ds, path):
    path = Path(path)
    path.write_bytes(encode(ds))
    logger.info("Wrote %d frames to %s", len(ds), path)
    return path


def read(path):
    path = Path(path)
    ds = decode(path.read_bytes(), source=str(path))
    logger.info("Read %d frames (%d classes, length %d) from %s", len(ds), ds.num_classes, ds.seq_len, path)
    return ds
