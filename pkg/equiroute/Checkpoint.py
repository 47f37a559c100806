import json
import logging
import struct
import numpy as np
from .Utils import EquirouteError

# Single-file parameter checkpoint:
#   MAGIC (8 bytes) | header length (uint64, little endian) | JSON header | float64 LE parameter block
# The header carries the router kind tag, hyperparameters, seeds and the name/shape of every tensor
# in block order. Keys are sorted and no timestamps are written, so equal inputs give equal bytes.

MAGIC = b'EQRCKPT1'
ROUTER_KINDS = ('equirouter', 'equirouter_nojoint', 'mse', 'knn', 'mlp', 'cost')


def save_checkpoint(path, kind, header, params):
    if kind not in ROUTER_KINDS:
        raise ValueError(f"unknown router kind '{kind}'")
    names = sorted(params)
    meta = {
        'kind': kind,
        'header': header,
        'tensors': [{'name': name, 'shape': list(params[name].shape)} for name in names],
    }
    encoded = json.dumps(meta, sort_keys=True).encode('utf-8')
    with open(path, 'wb') as handle:
        handle.write(MAGIC)
        handle.write(struct.pack('<Q', len(encoded)))
        handle.write(encoded)
        for name in names:
            handle.write(np.ascontiguousarray(params[name], dtype='<f8').tobytes())
    logging.info(f"Saved {kind} checkpoint to {path}")


def load_checkpoint(path):
    with open(path, 'rb') as handle:
        blob = handle.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise EquirouteError(f"{path} is not a checkpoint file")
    offset = len(MAGIC)
    (length,) = struct.unpack('<Q', blob[offset:offset + 8])
    offset += 8
    meta = json.loads(blob[offset:offset + length].decode('utf-8'))
    offset += length

    params = {}
    for tensor in meta['tensors']:
        shape = tuple(tensor['shape'])
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(blob, dtype='<f8', count=count, offset=offset)
        params[tensor['name']] = values.astype(np.float64).reshape(shape)
        offset += 8 * count
    if offset != len(blob):
        raise EquirouteError(f"{path} has {len(blob) - offset} trailing bytes")
    logging.info(f"Loaded {meta['kind']} checkpoint from {path}")
    return meta['kind'], meta['header'], params
