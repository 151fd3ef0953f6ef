"""Deterministic random-number streams.

Every stochastic component draws from a counter-based Philox generator
keyed by (master seed, purpose tag, index). Streams are independent of
each other and of thread count, so runs reproduce bit-for-bit from the
master seed alone and individual disorder samples can be regenerated
without replaying the whole ensemble.
"""

from __future__ import annotations

import numpy as np

# purpose tags; values are part of the on-disk/reproducibility contract
TAG_NOISE = 1
TAG_MC_INIT = 2
TAG_MC_SWEEP = 3
TAG_BOOTSTRAP = 4
TAG_DISORDER = 5


def stream(master_seed: int, tag: int, *indices: int) -> np.random.Generator:
    """Independent Philox stream for (seed, tag, indices...)."""
    seq = np.random.SeedSequence([int(master_seed), int(tag), *[int(i) for i in indices]])
    return np.random.Generator(np.random.Philox(seq))


def noise_stream(master_seed: int, *indices: int) -> np.random.Generator:
    return stream(master_seed, TAG_NOISE, *indices)


def mc_init_stream(master_seed: int, *indices: int) -> np.random.Generator:
    return stream(master_seed, TAG_MC_INIT, *indices)


def mc_sweep_stream(master_seed: int, *indices: int) -> np.random.Generator:
    return stream(master_seed, TAG_MC_SWEEP, *indices)


def bootstrap_stream(master_seed: int) -> np.random.Generator:
    return stream(master_seed, TAG_BOOTSTRAP)


def disorder_stream(master_seed: int) -> np.random.Generator:
    return stream(master_seed, TAG_DISORDER)
