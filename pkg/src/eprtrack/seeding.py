"""Splittable seed policy.

A single 64-bit master seed feeds every random draw. Each consumer owns a
named stream (``"main0"``, ``"main0.a"``, ``"calib.b"``, ...) and draws fixed-size chunks;
chunk ``k`` of stream ``tag`` is generated from
``SeedSequence(master, spawn_key=(crc32(tag), k + 2**31))``. Output depends
only on (seed, tag, chunk index), never on evaluation order.
"""

from __future__ import annotations

import zlib

import numpy as np

CHUNK = 2**16
_INDEX_OFFSET = 2**31


def stream_seed(seed: int, tag: str, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=int(seed) & (2**64 - 1),
        spawn_key=(zlib.crc32(tag.encode()), int(index) + _INDEX_OFFSET),
    )


def generator(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(stream_seed(seed, tag, index)))


class NormalStream:
    """Standard normals of shape ``(width, n)`` addressable by absolute sample index.

    Negative indices are allowed; each chunk of ``chunk`` samples comes from
    its own derived generator.
    """

    def __init__(self, seed: int, tag: str, width: int = 1, chunk: int = CHUNK):
        self.seed = seed
        self.tag = tag
        self.width = width
        self.chunk = chunk
        self._cache: dict[int, np.ndarray] = {}

    def _chunk(self, c: int) -> np.ndarray:
        block = self._cache.get(c)
        if block is None:
            if len(self._cache) > 8:
                self._cache.clear()
            block = generator(self.seed, self.tag, c).standard_normal((self.width, self.chunk))
            self._cache[c] = block
        return block

    def take(self, start: int, stop: int) -> np.ndarray:
        out = np.empty((self.width, stop - start))
        pos = start
        while pos < stop:
            c = pos // self.chunk
            lo = pos - c * self.chunk
            hi = min(self.chunk, stop - c * self.chunk)
            out[:, pos - start:pos - start + hi - lo] = self._chunk(c)[:, lo:hi]
            pos += hi - lo
        return out
