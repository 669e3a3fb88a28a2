"""Seeded random streams.

Every random draw in the package comes from a PCG64 generator built from
``SeedSequence(seed, spawn_key=key)``. The key is a tuple of small integers:

    (SPLIT,)                          fold assignment shuffle
    (LDA_FIT, fold, note_type_index)  LDA training chain
    (LDA_INFER, fold, note_type_index) fold-in inference for held-out docs
    (SYNTH, part)                     synthetic data generation

Full-data training (no cross-validation) uses fold slot 0.
"""

import numpy as np

SPLIT = 0
LDA_FIT = 1
LDA_INFER = 2
SYNTH = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
