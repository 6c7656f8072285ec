"""Counter-based random streams.

One master seed; every (stream, index) pair gets its own generator derived
through ``SeedSequence.spawn_key``, so shot ``i`` of experiment ``stream`` can
be regenerated in isolation and results never depend on how shots were
split across threads.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def _key(stream) -> tuple:
    if isinstance(stream, str):
        return (stream_id(stream),)
    if isinstance(stream, tuple):
        return tuple(k for part in stream for k in _key(part))
    return (int(stream),)


def substream(seed: int, stream, *index: int) -> np.random.Generator:
    """Generator for ``index`` within ``stream`` (an int, a name, or a tuple of those)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(*_key(stream), *map(int, index)))
    return np.random.Generator(np.random.PCG64(ss))


def chunks(n: int, size: int):
    for start in range(0, n, size):
        yield start, min(n, start + size)
