"""
Seeded random streams.

All randomness goes through numpy's PCG64 bit generator, whose output for a
given seed is fixed across platforms and numpy releases. Independent
consumers (split, init, shuffling, synthesis) draw from separate streams
derived from one user seed so changing one consumer never shifts another.
"""

import numpy as np

STREAM_SPLIT = 1
STREAM_INIT = 2
STREAM_SHUFFLE = 3
STREAM_SYNTH = 4

_MASK64 = 0xFFFFFFFFFFFFFFFF


def make_rng(seed: int, *streams: int) -> np.random.Generator:
    entropy = [seed & _MASK64, *(s & _MASK64 for s in streams)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
