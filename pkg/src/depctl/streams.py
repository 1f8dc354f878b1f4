"""Reproducible counter-based random streams.

Every stochastic routine in this package takes an explicit stream. A stream
is identified by a 64-bit master seed plus a text label; the label is hashed
(FNV-1a, 64 bit) into the second key word of a Philox counter-based
generator, so any number of workers can derive statistically independent
streams without coordination, and the same (seed, label) pair always
reproduces the identical sequence.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a text label."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


class RandomStream:
    """A named, reproducible source of randomness.

    Parameters
    ----------
    master_seed : int
        64-bit experiment seed shared by all streams of one run.
    stream_label : str
        Unique purpose label, e.g. "capacity/chunk-3". Distinct labels give
        independent streams under the same master seed.
    """

    def __init__(self, master_seed: int, stream_label: str = "root"):
        if not 0 <= int(master_seed) <= _U64:
            raise ValueError(f"master_seed must fit in 64 bits, got {master_seed}")
        self.master_seed = int(master_seed)
        self.stream_label = stream_label
        key = np.array([self.master_seed, fnv1a64(stream_label)], dtype=np.uint64)
        self._bit_generator = Philox(key=key)
        self.generator: Generator = Generator(self._bit_generator)

    @property
    def counter(self) -> int:
        """128-bit position of the underlying counter (diagnostic)."""
        words = self._bit_generator.state["state"]["counter"]
        return sum(int(w) << (64 * i) for i, w in enumerate(words))

    def derive(self, sublabel: str) -> "RandomStream":
        """Independent child stream labelled `<label>/<sublabel>`."""
        return RandomStream(self.master_seed, f"{self.stream_label}/{sublabel}")

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.master_seed}, label={self.stream_label!r})"
