"""Named deterministic RNG streams.

Every source of randomness draws from its own stream, seeded as
SeedSequence([root_seed, stream_id]). Consuming one stream never perturbs
another, so e.g. adding policy noise cannot shift map generation.
"""
from __future__ import annotations

import numpy as np

# Stream ids are part of the reproducibility contract: never renumber.
STREAM_IDS = {
    "map": 0,
    "spawn": 1,
    "evader": 2,
    "policy": 3,
}


def stream_rng(root_seed: int, stream: str) -> np.random.Generator:
    """Return the named child generator for this root seed."""
    if stream not in STREAM_IDS:
        raise KeyError(f"unknown rng stream {stream!r}")
    seq = np.random.SeedSequence([int(root_seed), STREAM_IDS[stream]])
    return np.random.Generator(np.random.PCG64(seq))
