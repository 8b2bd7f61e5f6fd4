# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import os
import struct

# 3rd party packages
import numpy as np

# Project imports
from overlayembed.exceptions import CacheFormatError

DISTANCE_CACHE_MAGIC = b"DGMX"
EMBEDDING_DUMP_MAGIC = b"OVLE"
FLOAT_DTYPE = np.dtype('<f8')


def write_distance_cache(path, distances):
    """
    Writes a dense distance matrix to the binary cache format

    The file starts with a 16-byte header (magic ``DGMX``, little-endian u32 ``n``, 8 reserved zero bytes)
    followed by the row-major matrix as little-endian 64-bit floats.

    :param path: Destination file path
    :param distances: Square numpy array with the distances
    :return: None
    """
    distances = np.asarray(distances, dtype=FLOAT_DTYPE)
    if distances.ndim != 2 or distances.shape[0] != distances.shape[1]:
        raise CacheFormatError("Distance cache requires a square matrix, got shape %s" % (distances.shape,))
    with open(path, 'wb') as f:
        f.write(DISTANCE_CACHE_MAGIC)
        f.write(struct.pack('<I', distances.shape[0]))
        f.write(b"\x00" * 8)
        f.write(np.ascontiguousarray(distances).tobytes())


def read_distance_cache(path):
    """
    Reads a dense distance matrix written by ``write_distance_cache``

    :param path: Path of the cache file
    :return: Square numpy array of 64-bit floats
    """
    with open(path, 'rb') as f:
        raw = f.read()
    if len(raw) < 16 or raw[:4] != DISTANCE_CACHE_MAGIC:
        raise CacheFormatError("%s is not a distance cache (bad magic)" % path)
    n = struct.unpack('<I', raw[4:8])[0]
    payload = raw[16:]
    if len(payload) != n * n * FLOAT_DTYPE.itemsize:
        raise CacheFormatError("Distance cache %s is truncated: expected %i values" % (path, n * n))
    return np.frombuffer(payload, dtype=FLOAT_DTYPE).reshape(n, n).astype(np.float64)


def write_embedding_dump(path, signature_text, embedding, scalars):
    """
    Writes a trained embedding with its scalar parameters

    Layout: magic ``OVLE``, u32 ``n``, u32 ``d``, u32 length of the signature text followed by its UTF-8
    bytes, the row-major ``n x d`` embedding as little-endian 64-bit floats and finally the scalar
    parameter block (raw log-weights or dot offset) in the same encoding.

    :param path: Destination file path
    :param signature_text: Canonical signature text
    :param embedding: Numpy array of shape ``(n, d)``
    :param scalars: One-dimensional numpy array with the scalar parameters
    :return: None
    """
    embedding = np.ascontiguousarray(embedding, dtype=FLOAT_DTYPE)
    scalars = np.ascontiguousarray(scalars, dtype=FLOAT_DTYPE).ravel()
    sig_bytes = signature_text.encode('utf-8')
    dirname = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirname, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(EMBEDDING_DUMP_MAGIC)
        f.write(struct.pack('<III', embedding.shape[0], embedding.shape[1], len(sig_bytes)))
        f.write(sig_bytes)
        f.write(embedding.tobytes())
        f.write(scalars.tobytes())


def read_embedding_dump(path):
    """
    Reads an embedding dump written by ``write_embedding_dump``

    :param path: Path of the dump
    :return: Dictionary with the following keys:

        - 'signature': Signature text stored in the dump
        - 'embedding': Numpy array of shape ``(n, d)``
        - 'scalars': One-dimensional numpy array with the scalar parameter block
    """
    with open(path, 'rb') as f:
        raw = f.read()
    if len(raw) < 16 or raw[:4] != EMBEDDING_DUMP_MAGIC:
        raise CacheFormatError("%s is not an embedding dump (bad magic)" % path)
    n, d, sig_length = struct.unpack('<III', raw[4:16])
    offset = 16 + sig_length
    if len(raw) < offset + n * d * FLOAT_DTYPE.itemsize:
        raise CacheFormatError("Embedding dump %s is truncated" % path)
    signature_text = raw[16:offset].decode('utf-8')
    end = offset + n * d * FLOAT_DTYPE.itemsize
    embedding = np.frombuffer(raw[offset:end], dtype=FLOAT_DTYPE).reshape(n, d).astype(np.float64)
    tail = raw[end:]
    if len(tail) % FLOAT_DTYPE.itemsize:
        raise CacheFormatError("Scalar block of %s is not a whole number of floats" % path)
    scalars = np.frombuffer(tail, dtype=FLOAT_DTYPE).astype(np.float64)
    return {
        'signature': signature_text,
        'embedding': embedding,
        'scalars': scalars
    }
