"""Seeded, splittable random streams.

Streams come from numpy's counter-based Philox generator keyed through a
``SeedSequence`` whose spawn key is the chunk index.  A chunk's stream is a
pure function of ``(seed, chunk)``, so output never depends on how chunks
are distributed over workers.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "philox4x64-10/seedsequence-chunked-v1"
CHUNK_SIZE = 1 << 16


def stream(seed: int, chunk: int = 0) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(chunk),))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(count: int, chunk_size: int = CHUNK_SIZE) -> list[int]:
    full, rest = divmod(count, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])
