"""Per-subsystem random streams.

Every subsystem draws from its own generator derived from the run seed, so
changing how many numbers one subsystem consumes never perturbs another.
"""

import numpy as np

STREAMS = {
    "drops": 1,
    "shadowing": 2,
    "premium": 3,
    "traffic": 4,
}


def stream(seed: int, subsystem: str) -> np.random.Generator:
    try:
        key = STREAMS[subsystem]
    except KeyError:
        raise KeyError(f"unknown random stream {subsystem!r}") from None
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))
