"""Reproducible random streams.

Every stream is a Philox counter-based generator keyed by the user seed and a
tuple of integers naming its purpose, so that generating batches or blocks in
any order (or in parallel) yields the same numbers.
"""
import numpy as np

# Stream tags (first element of the key).
SIMULATE = 1
SPLIT = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
