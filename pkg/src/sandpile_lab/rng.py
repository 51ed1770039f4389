"""Counter-based random streams.

A generator is addressed by ``(seed, stream, block)``: the seed and stream id
form the Philox key and the block index occupies a high counter word, so any
block can be regenerated on its own, in any order, on any worker.
"""
import numpy as np

MASK64 = (1 << 64) - 1


def generator(seed: int, stream: int = 0, block: int = 0) -> np.random.Generator:
    key = np.array([seed & MASK64, stream & MASK64], dtype=np.uint64)
    counter = np.array([0, 0, block & MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
